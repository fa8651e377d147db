#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the per-flow math path (softmax + argmax + cross-entropy) and the
confusion-matrix batch update on identical inputs, and verifies both
backends agree bit for bit while we are at it.

Usage: python benchmarks/bench_kernels.py [--n 200000] [--classes 21]
"""

import argparse
import random
import time

from edgeshield import _purekernels

try:
    from edgeshield import _nativekernels
except ImportError:
    _nativekernels = None


def bench_per_flow(impl, vectors, labels):
    start = time.perf_counter()
    sink = 0.0
    for z, label in zip(vectors, labels):
        probs = impl.softmax(z)
        sink += probs[impl.argmax_lowest(probs)]
        sink += impl.cross_entropy_from_logits(z, label)
    elapsed = time.perf_counter() - start
    return elapsed, sink


def bench_confusion(impl, n_classes, true_idx, pred_idx):
    counts = [0] * (n_classes * n_classes)
    start = time.perf_counter()
    impl.confusion_update(counts, n_classes, true_idx, pred_idx)
    tallies = impl.micro_tallies(counts, n_classes)
    elapsed = time.perf_counter() - start
    return elapsed, tallies


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000, help="number of logit vectors")
    parser.add_argument("--classes", type=int, default=21)
    args = parser.parse_args()

    rng = random.Random(1)
    vectors = [
        [rng.uniform(-30.0, 30.0) for _ in range(args.classes)] for _ in range(args.n)
    ]
    labels = [rng.randrange(args.classes) for _ in range(args.n)]
    true_idx = [rng.randrange(args.classes) for _ in range(args.n)]
    pred_idx = [rng.randrange(args.classes) for _ in range(args.n)]

    backends = [("pure", _purekernels)]
    if _nativekernels is not None:
        backends.append(("native", _nativekernels))
    else:
        print("compiled kernels not built; benchmarking the pure backend only")

    results = {}
    print(f"\nper-flow pipeline (softmax + argmax + cross-entropy), n={args.n}")
    print(f"{'backend':<8} {'seconds':>9} {'flows/sec':>12}")
    checksum = None
    for name, impl in backends:
        elapsed, sink = bench_per_flow(impl, vectors, labels)
        results[("flow", name)] = elapsed
        if checksum is None:
            checksum = sink
        else:
            assert sink == checksum, "backends disagree on the per-flow pipeline"
        print(f"{name:<8} {elapsed:>9.3f} {args.n / elapsed:>12.0f}")
    if ("flow", "native") in results:
        print(f"speedup: {results[('flow', 'pure')] / results[('flow', 'native')]:.1f}x")

    print(f"\nconfusion-matrix batch update + micro tallies, n={args.n}")
    print(f"{'backend':<8} {'seconds':>9} {'updates/sec':>12}")
    reference = None
    for name, impl in backends:
        elapsed, tallies = bench_confusion(impl, args.classes, true_idx, pred_idx)
        results[("cm", name)] = elapsed
        if reference is None:
            reference = tuple(tallies)
        else:
            assert tuple(tallies) == reference, "backends disagree on tallies"
        print(f"{name:<8} {elapsed:>9.3f} {args.n / elapsed:>12.0f}")
    if ("cm", "native") in results:
        print(f"speedup: {results[('cm', 'pure')] / results[('cm', 'native')]:.1f}x")


if __name__ == "__main__":
    main()
