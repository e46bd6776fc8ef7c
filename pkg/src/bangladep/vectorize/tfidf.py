"""Unigram TF-IDF with raw term frequency and an unsmoothed natural-log idf."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import kernels
from ..preprocess import tokenize

DEFAULT_MAX_FEATURES = 300


class VectorizerError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    n_documents: int
    max_features: int = DEFAULT_MAX_FEATURES

    def __post_init__(self):
        idf = np.asarray(self.idf, dtype=np.float64)
        object.__setattr__(self, "idf", idf)
        if len(self.vocabulary) != idf.shape[0]:
            raise VectorizerError("vocabulary and idf lengths differ")
        if len(self.vocabulary) > self.max_features:
            raise VectorizerError("vocabulary larger than max_features")
        if sorted(self.vocabulary.values()) != list(range(len(self.vocabulary))):
            raise VectorizerError("vocabulary indices must be 0..V-1")
        if idf.size and (not np.all(np.isfinite(idf)) or idf.min() < 0):
            raise VectorizerError("idf values must be finite and non-negative")

    @property
    def dimension(self) -> int:
        return self.max_features

    @property
    def tokens(self) -> list[str]:
        return sorted(self.vocabulary, key=self.vocabulary.__getitem__)

    def to_json(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "max_features": self.max_features,
            "entries": [
                {"token": tok, "index": idx, "idf": float(self.idf[idx])}
                for tok, idx in sorted(self.vocabulary.items(), key=lambda kv: kv[1])
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TfidfModel":
        entries = data["entries"]
        vocab = {e["token"]: int(e["index"]) for e in entries}
        idf = np.zeros(len(entries))
        for e in entries:
            idf[int(e["index"])] = float(e["idf"])
        return cls(vocab, idf, int(data["n_documents"]), int(data["max_features"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_tfidf(texts: Sequence[str], max_features: int = DEFAULT_MAX_FEATURES) -> TfidfModel:
    """Fit on cleaned training texts only.

    Keeps the ``max_features`` tokens with the highest total count (ties in
    code point order) and sets ``idf = log(N / df)``.
    """
    if max_features < 1:
        raise VectorizerError("max_features must be >= 1")
    if not texts:
        raise VectorizerError("cannot fit TF-IDF on an empty text list")
    totals: Counter = Counter()
    df: Counter = Counter()
    for text in texts:
        toks = tokenize(text)
        totals.update(toks)
        df.update(set(toks))
    if not totals:
        raise VectorizerError("all texts are empty after cleaning")
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    vocab = {tok: i for i, (tok, _) in enumerate(ranked)}
    n = len(texts)
    idf = np.array([math.log(n / df[tok]) for tok, _ in ranked])
    return TfidfModel(vocab, idf, n, max_features)


def _flatten(model: TfidfModel, texts: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    lookup = model.vocabulary.get
    offsets = [0]
    ids: list[int] = []
    for text in texts:
        toks = tokenize(text)
        ids.extend(lookup(t, -1) for t in toks)
        offsets.append(len(ids))
    return np.asarray(offsets, dtype=np.int64), np.asarray(ids, dtype=np.int64)


def transform_many(model: TfidfModel, texts: Sequence[str]) -> np.ndarray:
    """TF-IDF matrix of shape ``(len(texts), max_features)``."""
    offsets, ids = _flatten(model, texts)
    idf = np.zeros(model.max_features)
    idf[: model.idf.shape[0]] = model.idf
    return kernels.tfidf_fill(offsets, ids, idf)
