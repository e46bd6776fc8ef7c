"""Numeric inner loops, each with a numba-compiled and a pure-numpy path.

The compiled loops and the vectorized numpy twins compute the same values;
``tests/test_kernels.py`` checks them against each other and the benchmark in
``benchmarks/bench_kernels.py`` times both. Which path the public names bind to
is decided once at import from ``BANGLADEP_NUMBA`` (see :mod:`._accel`).
"""
from __future__ import annotations

import numpy as np

from ._accel import njit, numba_available, numba_requested

FNV_OFFSET = 2166136261
FNV_PRIME = 16777619
_MASK32 = 0xFFFFFFFF


# --- TF-IDF -------------------------------------------------------------------

@njit
def _tfidf_fill_loop(offsets, ids, idf, out):
    n_docs = offsets.shape[0] - 1
    for d in range(n_docs):
        start = offsets[d]
        stop = offsets[d + 1]
        length = stop - start
        if length == 0:
            continue
        for j in range(start, stop):
            t = ids[j]
            if t >= 0:
                out[d, t] += 1.0
        for t in range(idf.shape[0]):
            if out[d, t] != 0.0:
                out[d, t] = out[d, t] / length * idf[t]
    return out


def _tfidf_fill_numpy(offsets, ids, idf, out):
    lengths = np.diff(offsets)
    doc_of = np.repeat(np.arange(lengths.shape[0]), lengths)
    keep = ids >= 0
    np.add.at(out, (doc_of[keep], ids[keep]), 1.0)
    nonempty = lengths > 0
    out[nonempty] = out[nonempty] / lengths[nonempty, None] * idf[None, :]
    return out


# --- ROC sweep ----------------------------------------------------------------

@njit
def _roc_counts_loop(scores, labels):
    n = scores.shape[0]
    thresholds = np.empty(n, dtype=np.float64)
    tps = np.empty(n, dtype=np.int64)
    fps = np.empty(n, dtype=np.int64)
    tp = 0
    fp = 0
    k = 0
    for i in range(n):
        if labels[i] == 1:
            tp += 1
        else:
            fp += 1
        if i == n - 1 or scores[i + 1] != scores[i]:
            thresholds[k] = scores[i]
            tps[k] = tp
            fps[k] = fp
            k += 1
    return thresholds[:k], tps[:k], fps[:k]


def _roc_counts_numpy(scores, labels):
    n = scores.shape[0]
    if n == 0:
        return np.empty(0), np.empty(0, np.int64), np.empty(0, np.int64)
    ends = np.r_[np.flatnonzero(np.diff(scores) != 0), n - 1]
    tps = np.cumsum(labels == 1)[ends].astype(np.int64)
    fps = (ends + 1 - tps).astype(np.int64)
    return scores[ends].astype(np.float64), tps, fps


# --- fastText n-gram hashing ------------------------------------------------------

@njit
def _fnv1a_loop(buffer, offsets):
    m = offsets.shape[0] - 1
    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        h = np.int64(2166136261)
        for j in range(offsets[i], offsets[i + 1]):
            b = np.int64(buffer[j])
            if b >= 128:
                # bytes are hashed as signed chars, sign-extended to 32 bits
                b = b | np.int64(0xFFFFFF00)
            h = ((h ^ b) * np.int64(16777619)) & np.int64(0xFFFFFFFF)
        out[i] = h
    return out


def _fnv1a_numpy(buffer, offsets):
    lengths = np.diff(offsets)
    m = lengths.shape[0]
    h = np.full(m, FNV_OFFSET, dtype=np.int64)
    if m == 0:
        return h
    width = int(lengths.max()) if m else 0
    for k in range(width):
        active = lengths > k
        b = np.zeros(m, dtype=np.int64)
        b[active] = buffer[offsets[:-1][active] + k]
        b = np.where(b >= 128, b | 0xFFFFFF00, b)
        h = np.where(active, ((h ^ b) * FNV_PRIME) & _MASK32, h)
    return h


# --- segment means ------------------------------------------------------------------

@njit
def _segment_mean_loop(matrix, offsets, idx, out):
    for s in range(offsets.shape[0] - 1):
        start = offsets[s]
        stop = offsets[s + 1]
        if stop == start:
            continue
        for j in range(start, stop):
            row = idx[j]
            for c in range(matrix.shape[1]):
                out[s, c] += matrix[row, c]
        for c in range(matrix.shape[1]):
            out[s, c] /= stop - start
    return out


def _segment_mean_numpy(matrix, offsets, idx, out):
    counts = np.diff(offsets)
    nonempty = counts > 0
    if nonempty.any():
        gathered = matrix[idx]
        sums = np.add.reduceat(gathered, offsets[:-1][nonempty], axis=0)
        out[nonempty] = sums / counts[nonempty, None]
    return out


USE_NUMBA = numba_available() and numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


def tfidf_fill(offsets, ids, idf):
    """Dense TF-IDF rows from flattened token-index lists.

    ``ids[offsets[d]:offsets[d+1]]`` are the vocabulary indices of document
    ``d`` with ``-1`` for out-of-vocabulary tokens (they still count towards
    the document length).
    """
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    idf = np.ascontiguousarray(idf, dtype=np.float64)
    out = np.zeros((offsets.shape[0] - 1, idf.shape[0]), dtype=np.float64)
    fill = _tfidf_fill_loop if USE_NUMBA else _tfidf_fill_numpy
    return fill(offsets, ids, idf, out)


def roc_counts(scores, labels):
    """Cumulative (threshold, tp, fp) at each distinct score, scores sorted descending."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if USE_NUMBA:
        return _roc_counts_loop(scores, labels)
    return _roc_counts_numpy(scores, labels)


def fnv1a_hashes(buffer, offsets):
    """32-bit FNV-1a of each byte slice, with fastText's signed-byte quirk."""
    buffer = np.ascontiguousarray(buffer, dtype=np.uint8)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if USE_NUMBA:
        return _fnv1a_loop(buffer, offsets)
    return _fnv1a_numpy(buffer, offsets)


def segment_mean(matrix, offsets, idx):
    """Row-wise mean of ``matrix[idx[offsets[s]:offsets[s+1]]]``; empty segments give zeros."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    out = np.zeros((offsets.shape[0] - 1, matrix.shape[1]), dtype=np.float64)
    mean = _segment_mean_loop if USE_NUMBA else _segment_mean_numpy
    return mean(matrix, offsets, idx, out)


IMPLEMENTATIONS = {
    "tfidf_fill": (_tfidf_fill_loop, _tfidf_fill_numpy),
    "roc_counts": (_roc_counts_loop, _roc_counts_numpy),
    "fnv1a_hashes": (_fnv1a_loop, _fnv1a_numpy),
    "segment_mean": (_segment_mean_loop, _segment_mean_numpy),
}
