# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-flow math hot path.

Same API and same operation order as ``_purekernels`` so both backends
produce bit-identical results on one platform.
"""

from libc.math cimport exp, log, isfinite
from libc.stdlib cimport malloc, free


cdef double* _load(object values, Py_ssize_t* n_out) except NULL:
    cdef Py_ssize_t n = len(values)
    if n == 0:
        raise ValueError("empty logit vector")
    cdef double* buf = <double*> malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    try:
        for i in range(n):
            buf[i] = values[i]
            if not isfinite(buf[i]):
                raise ValueError("non-finite logit")
    except BaseException:
        free(buf)
        raise
    n_out[0] = n
    return buf


def softmax(values):
    """exp(z_i - max z) / sum, numerically stable via max-subtraction."""
    cdef Py_ssize_t n = 0, i
    cdef double* z = _load(values, &n)
    cdef double top, total
    try:
        top = z[0]
        for i in range(n):
            if z[i] > top:
                top = z[i]
        total = 0.0
        for i in range(n):
            z[i] = exp(z[i] - top)
            total += z[i]
        return tuple([z[i] / total for i in range(n)])
    finally:
        free(z)


def log_softmax(values):
    cdef Py_ssize_t n = 0, i
    cdef double* z = _load(values, &n)
    cdef double top, total, lse
    try:
        top = z[0]
        for i in range(n):
            if z[i] > top:
                top = z[i]
        total = 0.0
        for i in range(n):
            total += exp(z[i] - top)
        lse = top + log(total)
        return tuple([z[i] - lse for i in range(n)])
    finally:
        free(z)


def argmax_lowest(values):
    """Index of the maximum; ties resolve to the lowest index."""
    cdef Py_ssize_t n = len(values)
    if n == 0:
        raise ValueError("empty vector")
    cdef Py_ssize_t best = 0, i
    cdef double best_value = values[0]
    cdef double v
    for i in range(1, n):
        v = values[i]
        if v > best_value:
            best = i
            best_value = v
    return best


def cross_entropy_from_logits(values, Py_ssize_t index):
    """-log softmax(values)[index], computed from the stabilized log-sum-exp."""
    cdef Py_ssize_t n = len(values)
    if not 0 <= index < n:
        raise ValueError("index out of range")
    cdef Py_ssize_t m = 0, i
    cdef double* z = _load(values, &m)
    cdef double top, total
    try:
        top = z[0]
        for i in range(n):
            if z[i] > top:
                top = z[i]
        total = 0.0
        for i in range(n):
            total += exp(z[i] - top)
        return top + log(total) - z[index]
    finally:
        free(z)


def confusion_update(list counts, Py_ssize_t n_classes, true_indices, pred_indices):
    """Accumulate (true, pred) index pairs into a flat row-major count table."""
    cdef Py_ssize_t m = len(true_indices)
    if m != len(pred_indices):
        raise ValueError("index sequences differ in length")
    cdef Py_ssize_t i, t, p, flat
    for i in range(m):
        t = true_indices[i]
        p = pred_indices[i]
        if not (0 <= t < n_classes and 0 <= p < n_classes):
            raise ValueError("class index out of range")
        flat = t * n_classes + p
        counts[flat] = <object> counts[flat] + 1


def micro_tallies(counts, Py_ssize_t n_classes):
    """Summed per-class (TP, FP, FN) over a flat row-major confusion table."""
    cdef long long tp = 0, fp = 0, fn = 0, diag, row, col
    cdef Py_ssize_t i, j
    for i in range(n_classes):
        diag = counts[i * n_classes + i]
        tp += diag
        row = 0
        col = 0
        for j in range(n_classes):
            row += counts[i * n_classes + j]
            col += counts[j * n_classes + i]
        fn += row - diag
        fp += col - diag
    return tp, fp, fn
