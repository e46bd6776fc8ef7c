"""Labeled post corpus: loading, statistics, leakage-safe splits and oversampling."""
from __future__ import annotations

import csv
import enum
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .preprocess import CleaningConfig, clean, tokenize


class CorpusError(ValueError):
    """Malformed dataset file or an impossible split request."""


class Label(str, enum.Enum):
    DEPRESSIVE = "DEPRESSIVE"
    NON_DEPRESSIVE = "NON_DEPRESSIVE"

    @property
    def index(self) -> int:
        """Class index used for one-hot targets and network outputs."""
        return 1 if self is Label.DEPRESSIVE else 0

    @classmethod
    def from_index(cls, i: int) -> "Label":
        return cls.DEPRESSIVE if int(i) == 1 else cls.NON_DEPRESSIVE

    @classmethod
    def parse(cls, raw: str) -> "Label":
        key = raw.strip().lower().replace("-", "_").replace(" ", "_")
        if key == "depressive":
            return cls.DEPRESSIVE
        if key in ("non_depressive", "nondepressive"):
            return cls.NON_DEPRESSIVE
        raise ValueError(f"unknown label {raw!r}")


LABELS = (Label.NON_DEPRESSIVE, Label.DEPRESSIVE)


class Format(str, enum.Enum):
    CSV = "CSV"
    TSV = "TSV"

    @property
    def delimiter(self) -> str:
        return "," if self is Format.CSV else "\t"

    @classmethod
    def for_path(cls, path: str | Path) -> "Format":
        return cls.TSV if Path(path).suffix.lower() in (".tsv", ".tab") else cls.CSV


@dataclass(frozen=True)
class LabeledPost:
    id: str
    text: str
    label: Label

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError(f"post {self.id}: empty text")
        if not isinstance(self.label, Label):
            raise CorpusError(f"post {self.id}: label must be a Label, got {self.label!r}")


@dataclass(frozen=True)
class Corpus:
    posts: tuple[LabeledPost, ...]
    source: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "posts", tuple(self.posts))

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.posts]

    @property
    def texts(self) -> list[str]:
        return [p.text for p in self.posts]

    @property
    def labels(self) -> np.ndarray:
        return np.array([p.label.index for p in self.posts], dtype=np.int64)

    def by_id(self) -> dict[str, LabeledPost]:
        return {p.id: p for p in self.posts}

    def subset(self, ids: Iterable[str], source: str | None = None) -> "Corpus":
        """Posts for ``ids`` in the given order (repeats allowed)."""
        lookup = self.by_id()
        try:
            posts = tuple(lookup[i] for i in ids)
        except KeyError as exc:
            raise CorpusError(f"id {exc.args[0]!r} not in corpus {self.source}") from None
        return Corpus(posts, source or self.source)

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, Label | str]], source: str = "synthetic") -> "Corpus":
        posts = []
        for i, (text, label) in enumerate(records):
            if not isinstance(label, Label):
                label = Label.parse(label)
            posts.append(LabeledPost(_post_id(i), unicodedata.normalize("NFC", text), label))
        return cls(tuple(posts), source)


def _post_id(row: int) -> str:
    return f"p{row:06d}"


@dataclass(frozen=True)
class DatasetSplits:
    train: Corpus
    validation: Corpus
    test: Corpus
    seed: int
    train_ratio: float
    val_ratio: float
    stratified: bool = True
    oversampled: bool = False
    oversample_log: tuple[str, ...] = field(default_factory=tuple)

    def to_manifest(self) -> dict:
        """JSON-ready description; train ids exclude oversampled duplicates."""
        n_dup = len(self.oversample_log)
        train_ids = self.train.ids[: len(self.train) - n_dup] if n_dup else self.train.ids
        return {
            "seed": self.seed,
            "train_ratio": self.train_ratio,
            "val_ratio": self.val_ratio,
            "stratified": self.stratified,
            "oversampled": self.oversampled,
            "partitions": {
                "train": train_ids,
                "validation": self.validation.ids,
                "test": self.test.ids,
            },
            "oversample_log": list(self.oversample_log),
        }

    @classmethod
    def from_manifest(cls, manifest: dict, corpus: Corpus) -> "DatasetSplits":
        parts = manifest["partitions"]
        log = tuple(manifest.get("oversample_log", ()))
        return cls(
            train=corpus.subset(list(parts["train"]) + list(log), "train"),
            validation=corpus.subset(parts["validation"], "validation"),
            test=corpus.subset(parts["test"], "test"),
            seed=int(manifest["seed"]),
            train_ratio=float(manifest["train_ratio"]),
            val_ratio=float(manifest["val_ratio"]),
            stratified=bool(manifest.get("stratified", True)),
            oversampled=bool(manifest.get("oversampled", False)),
            oversample_log=log,
        )


def load_corpus(path: str | Path, format: Format | str | None = None) -> Corpus:
    """Read a ``text``/``label`` CSV or TSV file with a header row."""
    path = Path(path)
    if format is None:
        format = Format.for_path(path)
    format = Format(str(format).upper()) if not isinstance(format, Format) else format
    if not path.is_file():
        raise CorpusError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh, delimiter=format.delimiter)
        columns = {(c or "").strip().lower(): c for c in (reader.fieldnames or [])}
        missing = [c for c in ("text", "label") if c not in columns]
        if missing:
            raise CorpusError(f"{path}: missing column(s) {', '.join(missing)}; found {reader.fieldnames}")
        posts = []
        # header is line 1, so the first data row is row 2
        for row_no, row in enumerate(reader, start=2):
            text = unicodedata.normalize("NFC", row[columns["text"]] or "")
            raw_label = row[columns["label"]] or ""
            if not text.strip():
                raise CorpusError(f"{path}: row {row_no}: empty text")
            try:
                label = Label.parse(raw_label)
            except ValueError:
                raise CorpusError(f"{path}: row {row_no}: unknown label {raw_label!r}") from None
            posts.append(LabeledPost(_post_id(len(posts)), text, label))
    if not posts:
        raise CorpusError(f"{path}: no data rows")
    return Corpus(tuple(posts), str(path))


def class_distribution(corpus: Corpus) -> dict[Label, int]:
    counts = Counter(p.label for p in corpus)
    return {label: counts.get(label, 0) for label in LABELS}


def _allocate(class_sizes: Sequence[int], total: int) -> list[int]:
    """Split ``total`` across classes proportionally, largest remainder first."""
    n = sum(class_sizes)
    exact = [s * total / n for s in class_sizes]
    alloc = [math.floor(x) for x in exact]
    order = sorted(range(len(class_sizes)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order[: total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def _held_out_size(ratio: float, n: int) -> int:
    # Held-out partitions take the ceiling, training keeps the floor
    # (3914 posts at 70/30 gives 2739/1175).
    return n - math.floor(ratio * n + 1e-9)


def _partition(indices_by_class: dict[Label, np.ndarray], n_out: int, rng: np.random.Generator,
               stratified: bool) -> tuple[np.ndarray, np.ndarray]:
    """Pick ``n_out`` indices out; return (kept, out), both sorted."""
    if stratified:
        labels = [lab for lab in LABELS if len(indices_by_class[lab])]
        sizes = [len(indices_by_class[lab]) for lab in labels]
        quotas = _allocate(sizes, n_out)
        kept, out = [], []
        for lab, quota in zip(labels, quotas):
            perm = rng.permutation(indices_by_class[lab])
            out.append(perm[:quota])
            kept.append(perm[quota:])
        return np.sort(np.concatenate(kept)), np.sort(np.concatenate(out))
    pool = np.sort(np.concatenate(list(indices_by_class.values())))
    perm = rng.permutation(pool)
    return np.sort(perm[n_out:]), np.sort(perm[:n_out])


def _by_class(labels: np.ndarray, idx: np.ndarray) -> dict[Label, np.ndarray]:
    return {lab: idx[labels[idx] == lab.index] for lab in LABELS}


def split_corpus(corpus: Corpus, train_ratio: float = 0.70, val_ratio: float = 0.20,
                 seed: int = 0, stratified: bool = True) -> DatasetSplits:
    """Train/validation/test partitions; validation is carved from the train share.

    Deterministic given ``seed``. Partitions keep corpus order.
    """
    if not 0.0 < train_ratio < 1.0:
        raise CorpusError(f"train_ratio must be in (0, 1), got {train_ratio}")
    if not 0.0 <= val_ratio < 1.0:
        raise CorpusError(f"val_ratio must be in [0, 1), got {val_ratio}")
    n = len(corpus)
    if n == 0:
        raise CorpusError("cannot split an empty corpus")
    labels = corpus.labels
    n_test = _held_out_size(train_ratio, n)
    if n_test == n or n_test == 0:
        raise CorpusError(f"train_ratio {train_ratio} on {n} posts leaves an empty partition")
    rng = np.random.default_rng(seed)
    all_idx = np.arange(n)
    trainval, test = _partition(_by_class(labels, all_idx), n_test, rng, stratified)

    n_val = _held_out_size(1.0 - val_ratio, len(trainval)) if val_ratio > 0 else 0
    if val_ratio > 0 and (n_val == 0 or n_val == len(trainval)):
        raise CorpusError(f"val_ratio {val_ratio} on {len(trainval)} training posts leaves an empty partition")
    train, val = _partition(_by_class(labels, trainval), n_val, rng, stratified)

    if stratified:
        present = {lab for lab in LABELS if (labels == lab.index).any()}
        in_train = {Label.from_index(i) for i in np.unique(labels[train])}
        absent = present - in_train
        if absent:
            raise CorpusError(f"class(es) {sorted(a.value for a in absent)} absent from train")

    posts = corpus.posts
    return DatasetSplits(
        train=Corpus(tuple(posts[i] for i in train), "train"),
        validation=Corpus(tuple(posts[i] for i in val), "validation"),
        test=Corpus(tuple(posts[i] for i in test), "test"),
        seed=seed,
        train_ratio=train_ratio,
        val_ratio=val_ratio,
        stratified=stratified,
    )


def oversample_minority(split: DatasetSplits, seed: int = 0) -> DatasetSplits:
    """Duplicate random minority-class training posts until both classes are equal.

    Validation and test are returned as-is. Duplicates are appended after the
    original training posts, in the order recorded in ``oversample_log``.
    """
    if split.oversampled:
        raise CorpusError("split is already oversampled")
    counts = class_distribution(split.train)
    if min(counts.values()) == 0:
        raise CorpusError(f"cannot oversample a single-class training set: {counts}")
    minority = min(LABELS, key=lambda lab: (counts[lab], lab.index))
    majority = Label.DEPRESSIVE if minority is Label.NON_DEPRESSIVE else Label.NON_DEPRESSIVE
    deficit = counts[majority] - counts[minority]
    if deficit == 0:
        return replace(split, oversampled=True)
    pool = [p for p in split.train if p.label is minority]
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(pool), size=deficit)
    dups = tuple(pool[i] for i in picks)
    return replace(
        split,
        train=Corpus(split.train.posts + dups, split.train.source),
        oversampled=True,
        oversample_log=tuple(p.id for p in dups),
    )


class LengthUnit(str, enum.Enum):
    WORDS = "WORDS"
    CHARS = "CHARS"


def post_length(text: str, unit: LengthUnit | str = LengthUnit.WORDS) -> int:
    unit = LengthUnit(str(unit).upper()) if not isinstance(unit, LengthUnit) else unit
    return len(text.split()) if unit is LengthUnit.WORDS else len(text)


def length_distribution(corpus: Corpus, unit: LengthUnit | str = LengthUnit.WORDS,
                        bin_width: int = 5) -> dict[Label, dict[int, int]]:
    """Per-class histogram of raw post lengths keyed by bin lower edge."""
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    hist: dict[Label, Counter] = {lab: Counter() for lab in LABELS}
    for post in corpus:
        length = post_length(post.text, unit)
        hist[post.label][(length // bin_width) * bin_width] += 1
    return {lab: dict(sorted(h.items())) for lab, h in hist.items()}


def mean_length(corpus: Corpus, unit: LengthUnit | str = LengthUnit.WORDS) -> dict[Label, float]:
    totals: dict[Label, list[int]] = {lab: [] for lab in LABELS}
    for post in corpus:
        totals[post.label].append(post_length(post.text, unit))
    return {lab: (float(np.mean(v)) if v else 0.0) for lab, v in totals.items()}


def top_words(corpus: Corpus, k: int = 50, min_len: int = 1,
              cleaning: CleaningConfig | None = None) -> dict[Label, list[tuple[str, int]]]:
    """Most frequent cleaned tokens per class; ties broken by code point order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts: dict[Label, Counter] = {lab: Counter() for lab in LABELS}
    for post in corpus:
        counts[post.label].update(t for t in tokenize(clean(post.text, cleaning)) if len(t) >= min_len)
    return {
        lab: sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        for lab, c in counts.items()
    }
