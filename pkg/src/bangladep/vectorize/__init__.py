"""Text to fixed-length document vectors."""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .embeddings import (
    ASSET_DIR_ENV,
    BackendKind,
    DocumentVector,
    EmbeddingBackendSpec,
    Pooling,
    embed_many,
    get_encoder,
    resolve_asset,
)
from .fasttext import AssetError, SubwordModel, load_subword_model, read_fasttext_bin
from .tfidf import DEFAULT_MAX_FEATURES, TfidfModel, VectorizerError, fit_tfidf, transform_many

Vectorizer = Union[TfidfModel, EmbeddingBackendSpec]


def transform_tfidf(model: TfidfModel, text: str) -> DocumentVector:
    return DocumentVector(transform_many(model, [text])[0], "tfidf")


def embed_document(spec: EmbeddingBackendSpec, text: str) -> DocumentVector:
    return DocumentVector(embed_many(spec, [text])[0], spec.name)


def vectorize_corpus(vectorizer: Vectorizer, texts: Sequence[str]) -> np.ndarray:
    """Stack one vector per text into an ``(n, D)`` matrix."""
    if isinstance(vectorizer, TfidfModel):
        return transform_many(vectorizer, list(texts))
    return embed_many(vectorizer, list(texts))


def dimension_of(vectorizer: Vectorizer) -> int:
    return vectorizer.dimension


__all__ = [
    "ASSET_DIR_ENV", "AssetError", "BackendKind", "DEFAULT_MAX_FEATURES", "DocumentVector",
    "EmbeddingBackendSpec", "Pooling", "SubwordModel", "TfidfModel", "Vectorizer", "VectorizerError",
    "dimension_of", "embed_document", "embed_many", "fit_tfidf", "get_encoder", "load_subword_model",
    "read_fasttext_bin", "resolve_asset", "transform_many", "transform_tfidf", "vectorize_corpus",
]
