"""Parity between the pure-Python kernels and the compiled extension."""

import random

import pytest

from edgeshield import _purekernels, kernels

try:
    from edgeshield import _nativekernels
except ImportError:
    _nativekernels = None

needs_native = pytest.mark.skipif(_nativekernels is None, reason="compiled kernels not built")


def random_vectors(seed, count=300, max_len=32):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(1, max_len)
        yield [rng.uniform(-60, 60) for _ in range(n)]


def test_selected_backend_matches_pure():
    for z in random_vectors(5150):
        assert kernels.softmax(z) == _purekernels.softmax(z)
        assert kernels.log_softmax(z) == _purekernels.log_softmax(z)
        assert kernels.argmax_lowest(z) == _purekernels.argmax_lowest(z)
        idx = len(z) // 2
        assert kernels.cross_entropy_from_logits(z, idx) == _purekernels.cross_entropy_from_logits(z, idx)


@needs_native
def test_native_backend_matches_pure_bit_for_bit():
    for z in random_vectors(6021):
        assert _nativekernels.softmax(z) == _purekernels.softmax(z)
        assert _nativekernels.log_softmax(z) == _purekernels.log_softmax(z)
        assert _nativekernels.argmax_lowest(z) == _purekernels.argmax_lowest(z)
        idx = len(z) - 1
        assert _nativekernels.cross_entropy_from_logits(z, idx) == _purekernels.cross_entropy_from_logits(z, idx)


@needs_native
def test_confusion_update_parity():
    rng = random.Random(17)
    n = 21
    a = [0] * (n * n)
    b = [0] * (n * n)
    t = [rng.randrange(n) for _ in range(5000)]
    p = [rng.randrange(n) for _ in range(5000)]
    _purekernels.confusion_update(a, n, t, p)
    _nativekernels.confusion_update(b, n, t, p)
    assert a == b
    assert _purekernels.micro_tallies(a, n) == tuple(_nativekernels.micro_tallies(b, n))


@needs_native
def test_native_error_behaviour_matches_pure():
    for impl in (_purekernels, _nativekernels):
        with pytest.raises(ValueError):
            impl.softmax([])
        with pytest.raises(ValueError):
            impl.softmax([1.0, float("nan")])
        with pytest.raises(ValueError):
            impl.cross_entropy_from_logits([1.0, 2.0], 5)
        with pytest.raises(ValueError):
            impl.confusion_update([0] * 4, 2, [0], [3])


def test_argmax_tie_prefers_lowest_index():
    for impl in [i for i in (_purekernels, _nativekernels) if i is not None]:
        assert impl.argmax_lowest([2.0, 2.0, 1.0]) == 0
        assert impl.argmax_lowest([1.0, 3.0, 3.0]) == 1


def test_micro_tallies_hand_case():
    # 3 classes, rows: [[5,1,0],[0,3,1],[0,0,2]] -> TP 10, FP 2, FN 2
    counts = [5, 1, 0, 0, 3, 1, 0, 0, 2]
    assert _purekernels.micro_tallies(counts, 3) == (10, 2, 2)
