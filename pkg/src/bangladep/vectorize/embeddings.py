"""Document embedding backends: pooled transformer states, subword vectors, seeded hashing."""
from __future__ import annotations

import enum
import hashlib
import os
import threading
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import kernels
from ..preprocess import tokenize
from .fasttext import AssetError, load_subword_model

ASSET_DIR_ENV = "BANGLADEP_ASSET_DIR"


class BackendKind(str, enum.Enum):
    TFIDF = "TFIDF"
    CONTEXTUAL = "CONTEXTUAL"
    SUBWORD = "SUBWORD"
    HASHED_TEST = "HASHED_TEST"


class Pooling(str, enum.Enum):
    MEAN = "MEAN"
    FIRST_TOKEN = "FIRST_TOKEN"


@dataclass(frozen=True)
class EmbeddingBackendSpec:
    kind: BackendKind
    dimension: int
    asset_ref: str = ""
    pooling: Pooling = Pooling.MEAN
    max_tokens: int = 128
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        object.__setattr__(self, "pooling", Pooling(self.pooling))
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if self.kind in (BackendKind.CONTEXTUAL, BackendKind.SUBWORD) and not self.asset_ref:
            raise ValueError(f"{self.kind.value} backend needs an asset_ref")
        if self.max_tokens < 2:
            raise ValueError("max_tokens must be >= 2")

    @property
    def name(self) -> str:
        return self.kind.value.lower()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["pooling"] = self.pooling.value
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddingBackendSpec":
        return cls(**data)


@dataclass(frozen=True, eq=False)
class DocumentVector:
    values: np.ndarray
    backend: str

    def __post_init__(self):
        if self.values.ndim != 1 or not np.all(np.isfinite(self.values)):
            raise ValueError("document vector must be a finite 1-D array")

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


def resolve_asset(ref: str) -> Path | str:
    """Local path if it exists (directly or under ``$BANGLADEP_ASSET_DIR``), else the name as given."""
    direct = Path(ref).expanduser()
    if direct.exists():
        return direct
    root = os.environ.get(ASSET_DIR_ENV)
    if root and (Path(root) / ref).exists():
        return Path(root) / ref
    return ref


class HashedEncoder:
    """Each token maps to a fixed seeded unit vector; a document is their mean."""

    def __init__(self, dimension: int, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}\x1f{token}".encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            with self._lock:
                self._cache[token] = vec
        return vec

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vocab: dict[str, int] = {}
        offsets = [0]
        idx: list[int] = []
        for text in texts:
            for tok in tokenize(text):
                idx.append(vocab.setdefault(tok, len(vocab)))
            offsets.append(len(idx))
        table = np.zeros((max(len(vocab), 1), self.dimension))
        for tok, i in vocab.items():
            table[i] = self.token_vector(tok)
        return kernels.segment_mean(table, np.asarray(offsets), np.asarray(idx, dtype=np.int64))


class SubwordEncoder:
    """Mean of subword-composed word vectors."""

    def __init__(self, asset_ref: str, dimension: int):
        path = resolve_asset(asset_ref)
        if not isinstance(path, Path):
            raise AssetError(f"subword asset {asset_ref!r} not found")
        self.model = load_subword_model(path)
        if self.model.dim != dimension:
            raise AssetError(f"asset {asset_ref!r} has dimension {self.model.dim}, backend is configured for {dimension}")
        self.dimension = dimension

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        words: list[str] = []
        offsets = [0]
        for text in texts:
            words.extend(tokenize(text))
            offsets.append(len(words))
        if not words:
            return np.zeros((len(texts), self.dimension))
        vocab = list(dict.fromkeys(words))
        position = {w: i for i, w in enumerate(vocab)}
        word_vecs = self.model.word_vectors(vocab)
        idx = np.fromiter((position[w] for w in words), dtype=np.int64, count=len(words))
        return kernels.segment_mean(word_vecs, np.asarray(offsets), idx)


class ContextualEncoder:
    """Pooled final-layer states of a pretrained transformer encoder."""

    batch_size = 32

    def __init__(self, asset_ref: str, dimension: int, pooling: Pooling, max_tokens: int):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - optional extra
            raise AssetError("the CONTEXTUAL backend needs the 'transformers' package") from exc
        source = resolve_asset(asset_ref)
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(str(source))
            self.model = AutoModel.from_pretrained(str(source))
        except (OSError, ValueError) as exc:
            raise AssetError(f"cannot load contextual asset {asset_ref!r}: {exc}") from exc
        hidden = getattr(self.model.config, "hidden_size", None)
        if hidden != dimension:
            raise AssetError(f"asset {asset_ref!r} has hidden size {hidden}, backend is configured for {dimension}")
        self.model.eval()
        self.dimension = dimension
        self.pooling = pooling
        self.max_tokens = max_tokens
        self._torch = torch
        self._lock = threading.Lock()

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension))
        todo = [i for i, t in enumerate(texts) if tokenize(t)]
        torch = self._torch
        with self._lock, torch.no_grad():
            for start in range(0, len(todo), self.batch_size):
                rows = todo[start:start + self.batch_size]
                batch = self.tokenizer([texts[i] for i in rows], truncation=True, max_length=self.max_tokens,
                                       padding=True, return_tensors="pt")
                states = self.model(**batch).last_hidden_state
                if self.pooling is Pooling.FIRST_TOKEN:
                    pooled = states[:, 0]
                else:
                    mask = batch["attention_mask"].unsqueeze(-1).to(states.dtype)
                    pooled = (states * mask).sum(1) / mask.sum(1).clamp(min=1.0)
                out[rows] = pooled.double().numpy()
        return out


@lru_cache(maxsize=8)
def get_encoder(spec: EmbeddingBackendSpec):
    if spec.kind is BackendKind.HASHED_TEST:
        return HashedEncoder(spec.dimension, spec.seed)
    if spec.kind is BackendKind.SUBWORD:
        return SubwordEncoder(spec.asset_ref, spec.dimension)
    if spec.kind is BackendKind.CONTEXTUAL:
        return ContextualEncoder(spec.asset_ref, spec.dimension, spec.pooling, spec.max_tokens)
    raise ValueError("TF-IDF vectors come from a fitted TfidfModel, not an embedding spec")


def embed_many(spec: EmbeddingBackendSpec, texts: Sequence[str]) -> np.ndarray:
    if not texts:
        return np.zeros((0, spec.dimension))
    return get_encoder(spec).encode(list(texts))
