"""Time the numba and numpy paths of each kernel on corpus-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Sizes default to the public corpus: about 4100 oversampled training posts,
300 TF-IDF features, 1175 test scores.
"""
import argparse
import time

import numpy as np

from bangladep import kernels


def _inputs(rng, scale):
    n_docs = int(4100 * scale)
    lengths = rng.integers(3, 60, n_docs)
    offsets = np.r_[0, np.cumsum(lengths)].astype(np.int64)
    ids = rng.integers(-1, 300, offsets[-1]).astype(np.int64)
    idf = rng.random(300) * 5

    n_test = int(1175 * scale)
    scores = np.sort(np.round(rng.random(n_test), 3))[::-1].copy()
    labels = rng.integers(0, 2, n_test).astype(np.int64)

    n_words = int(20000 * scale)
    word_len = rng.integers(3, 12, n_words)
    word_offsets = np.r_[0, np.cumsum(word_len)].astype(np.int64)
    buffer = rng.integers(0, 256, word_offsets[-1]).astype(np.uint8)

    table = rng.standard_normal((5000, 300))
    seg_idx = rng.integers(0, 5000, offsets[-1]).astype(np.int64)
    return {
        "tfidf_fill": lambda f: f(offsets, ids, idf, np.zeros((n_docs, 300))),
        "roc_counts": lambda f: f(scores, labels),
        "fnv1a_hashes": lambda f: f(buffer, word_offsets),
        "segment_mean": lambda f: f(table, offsets, seg_idx, np.zeros((n_docs, 300))),
    }


def _best(call, fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        call(fn)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--scale", type=float, default=1.0)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    calls = _inputs(rng, args.scale)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<14} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, (loop, vectorized) in kernels.IMPLEMENTATIONS.items():
        call = calls[name]
        call(loop)  # compile outside the timed runs
        t_loop = _best(call, loop, args.repeat)
        t_np = _best(call, vectorized, args.repeat)
        print(f"{name:<14} {t_loop * 1e3:>10.2f} {t_np * 1e3:>10.2f} {t_np / t_loop:>7.1f}x")


if __name__ == "__main__":
    main()
