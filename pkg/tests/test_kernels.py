import numpy as np
import pytest

from bangladep import kernels


def _offsets(rng, n_segments, max_len):
    lengths = rng.integers(0, max_len + 1, size=n_segments)
    return np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)


@pytest.mark.parametrize("seed", range(5))
def test_tfidf_fill_paths_agree(seed):
    rng = np.random.default_rng(seed)
    loop, vec = kernels.IMPLEMENTATIONS["tfidf_fill"]
    offsets = _offsets(rng, 20, 12)
    ids = rng.integers(-1, 8, size=offsets[-1]).astype(np.int64)
    idf = rng.random(8)
    a = loop(offsets, ids, idf, np.zeros((20, 8)))
    b = vec(offsets, ids, idf, np.zeros((20, 8)))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_roc_counts_paths_agree(seed):
    rng = np.random.default_rng(seed)
    loop, vec = kernels.IMPLEMENTATIONS["roc_counts"]
    scores = np.sort(rng.integers(0, 6, size=40) / 5.0)[::-1].copy()
    labels = rng.integers(0, 2, size=40).astype(np.int64)
    for x, y in zip(loop(scores, labels), vec(scores, labels)):
        np.testing.assert_array_equal(x, y)


def test_roc_counts_empty():
    _, vec = kernels.IMPLEMENTATIONS["roc_counts"]
    thr, tps, fps = vec(np.empty(0), np.empty(0, np.int64))
    assert thr.size == tps.size == fps.size == 0


def test_fnv1a_known_values():
    # 32-bit FNV-1a reference values; non-ASCII bytes are sign-extended first
    buf = np.frombuffer(b"a" + "ক".encode(), dtype=np.uint8)
    offsets = np.array([0, 0, 1, 4], dtype=np.int64)
    for impl in kernels.IMPLEMENTATIONS["fnv1a_hashes"]:
        out = impl(buf, offsets)
        assert out[0] == 2166136261
        assert out[1] == 0xE40C292C

    def reference(data: bytes) -> int:
        h = 2166136261
        for byte in data:
            signed = byte - 256 if byte >= 128 else byte
            h = ((h ^ (signed & 0xFFFFFFFF)) * 16777619) & 0xFFFFFFFF
        return h

    assert out[2] == reference("ক".encode())


@pytest.mark.parametrize("seed", range(3))
def test_fnv1a_paths_agree(seed):
    rng = np.random.default_rng(seed)
    offsets = _offsets(rng, 30, 9)
    buf = rng.integers(0, 256, size=offsets[-1]).astype(np.uint8)
    loop, vec = kernels.IMPLEMENTATIONS["fnv1a_hashes"]
    np.testing.assert_array_equal(loop(buf, offsets), vec(buf, offsets))


@pytest.mark.parametrize("seed", range(3))
def test_segment_mean_paths_agree(seed):
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(15, 4))
    offsets = _offsets(rng, 10, 5)
    idx = rng.integers(0, 15, size=offsets[-1]).astype(np.int64)
    loop, vec = kernels.IMPLEMENTATIONS["segment_mean"]
    a = loop(matrix, offsets, idx, np.zeros((10, 4)))
    b = vec(matrix, offsets, idx, np.zeros((10, 4)))
    np.testing.assert_allclose(a, b, atol=1e-12)
    for s in range(10):
        rows = idx[offsets[s]:offsets[s + 1]]
        expect = matrix[rows].mean(axis=0) if rows.size else np.zeros(4)
        np.testing.assert_allclose(a[s], expect, atol=1e-12)


def test_backend_flag_is_reported():
    assert kernels.BACKEND in ("numba", "numpy")
