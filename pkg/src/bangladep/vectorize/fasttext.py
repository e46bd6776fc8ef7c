"""Subword (character n-gram) word vectors in the fastText layout.

A word's vector is the mean of its own row (if it is in the vocabulary) and
the hashed rows of its character n-grams, so unseen words still embed. Reads
fastText ``.bin`` files directly and a compact ``.npz`` layout of the same
matrices.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .. import kernels

FASTTEXT_MAGIC = 793712314
FASTTEXT_VERSION = 12
EOS = "</s>"


class AssetError(RuntimeError):
    """A pretrained embedding asset is missing, unreadable or inconsistent."""


@dataclass(frozen=True, eq=False)
class SubwordModel:
    words: tuple[str, ...]
    matrix: np.ndarray  # (len(words) + bucket, dim): word rows then n-gram buckets
    minn: int
    maxn: int
    bucket: int

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.words) + self.bucket:
            raise AssetError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.words)} words + {self.bucket} buckets"
            )
        object.__setattr__(self, "_word_ids", {w: i for i, w in enumerate(self.words)})

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def ngrams(self, word: str) -> list[str]:
        if word == EOS or self.maxn <= 0 or self.bucket <= 0:
            return []
        padded = f"<{word}>"
        size = len(padded)
        grams = []
        for i in range(size):
            for n in range(1, self.maxn + 1):
                if i + n > size:
                    break
                if n >= self.minn and not (n == 1 and (i == 0 or i + n == size)):
                    grams.append(padded[i:i + n])
        return grams

    def subword_ids(self, words: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Flattened row ids per word: (offsets, ids)."""
        grams_per_word = [self.ngrams(w) for w in words]
        encoded = [g.encode("utf-8") for grams in grams_per_word for g in grams]
        lengths = np.fromiter((len(b) for b in encoded), dtype=np.int64, count=len(encoded))
        byte_offsets = np.concatenate([[0], np.cumsum(lengths)])
        buffer = np.frombuffer(b"".join(encoded), dtype=np.uint8)
        hashes = kernels.fnv1a_hashes(buffer, byte_offsets)
        gram_rows = len(self.words) + hashes % self.bucket if self.bucket else hashes

        offsets = [0]
        ids: list[np.ndarray] = []
        pos = 0
        for w, grams in zip(words, grams_per_word):
            own = self._word_ids.get(w)
            if own is not None:
                ids.append(np.array([own], dtype=np.int64))
            ids.append(gram_rows[pos:pos + len(grams)])
            pos += len(grams)
            offsets.append(offsets[-1] + (own is not None) + len(grams))
        flat = np.concatenate(ids) if ids else np.empty(0, dtype=np.int64)
        return np.asarray(offsets, dtype=np.int64), flat.astype(np.int64)

    def word_vectors(self, words: Sequence[str]) -> np.ndarray:
        offsets, ids = self.subword_ids(words)
        return kernels.segment_mean(self.matrix, offsets, ids)

    def save_npz(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, words=np.array(self.words, dtype=str), matrix=self.matrix,
                     minn=self.minn, maxn=self.maxn, bucket=self.bucket)


def _read(fh: BinaryIO, fmt: str):
    size = struct.calcsize(fmt)
    raw = fh.read(size)
    if len(raw) != size:
        raise AssetError("truncated fastText file")
    return struct.unpack(fmt, raw)


def _read_cstring(fh: BinaryIO) -> str:
    buf = bytearray()
    while True:
        ch = fh.read(1)
        if not ch:
            raise AssetError("truncated fastText dictionary")
        if ch == b"\0":
            return buf.decode("utf-8", errors="replace")
        buf += ch


def read_fasttext_bin(path: str | Path) -> SubwordModel:
    """Parse the input matrix and dictionary of a (non-quantized) fastText ``.bin``."""
    with open(path, "rb") as fh:
        magic, version = _read(fh, "<ii")
        if magic != FASTTEXT_MAGIC:
            raise AssetError(f"{path}: not a fastText binary (bad magic)")
        if version > FASTTEXT_VERSION:
            raise AssetError(f"{path}: unsupported fastText version {version}")
        (dim, _ws, _epoch, _min_count, _neg, _word_ngrams, _loss, _model,
         bucket, minn, maxn, _lr_update, _t) = _read(fh, "<12id")
        size, nwords, _nlabels, _ntokens, prune_size = _read(fh, "<iiiqq")
        words = []
        for _ in range(size):
            word = _read_cstring(fh)
            _count, entry_type = _read(fh, "<qb")
            if entry_type == 0:
                words.append(word)
        if len(words) != nwords:
            raise AssetError(f"{path}: dictionary lists {len(words)} words, header says {nwords}")
        if prune_size > 0:
            raise AssetError(f"{path}: pruned/quantized fastText models are not supported")
        (quant,) = _read(fh, "<?")
        if quant:
            raise AssetError(f"{path}: quantized fastText models are not supported")
        rows, cols = _read(fh, "<qq")
        if cols != dim or rows != nwords + bucket:
            raise AssetError(f"{path}: input matrix {rows}x{cols} inconsistent with header")
        data = np.frombuffer(fh.read(rows * cols * 4), dtype="<f4")
        if data.size != rows * cols:
            raise AssetError(f"{path}: truncated input matrix")
    return SubwordModel(tuple(words), data.reshape(rows, cols).astype(np.float64), minn, maxn, bucket)


def load_subword_model(path: str | Path) -> SubwordModel:
    path = Path(path)
    if not path.is_file():
        raise AssetError(f"subword asset not found: {path}")
    if path.suffix == ".npz":
        try:
            with np.load(path, allow_pickle=False) as z:
                return SubwordModel(tuple(str(w) for w in z["words"]), z["matrix"].astype(np.float64),
                                    int(z["minn"]), int(z["maxn"]), int(z["bucket"]))
        except (KeyError, ValueError, OSError) as exc:
            raise AssetError(f"{path}: corrupt subword asset ({exc})") from exc
    return read_fasttext_bin(path)
