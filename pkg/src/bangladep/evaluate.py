"""Confusion matrix, support-weighted metrics, ROC/AUC and cross-backend comparison."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .corpus import Label
from .network import Network, predict_proba

METRICS = ("accuracy", "precision", "recall", "f1", "auc")
AVERAGES = ("weighted", "macro", "binary")

# Published reference rows for the three backends, in percent.
REFERENCE_ROWS = {
    "tfidf": {"accuracy": 81, "precision": 82, "recall": 81, "f1": 82, "auc": 84},
    "contextual": {"accuracy": 83, "precision": 85, "recall": 83, "f1": 84, "auc": 81},
    "subword": {"accuracy": 82, "precision": 84, "recall": 82, "f1": 83, "auc": 80},
}


class EvaluationError(ValueError):
    pass


def _as_binary(labels) -> np.ndarray:
    """1 for depressive, 0 otherwise; accepts Label members, strings or 0/1."""
    out = []
    for v in labels:
        if isinstance(v, Label):
            out.append(v.index)
        elif isinstance(v, str):
            out.append(Label.parse(v).index)
        else:
            if int(v) not in (0, 1):
                raise EvaluationError(f"label {v!r} is not 0/1")
            out.append(int(v))
    return np.asarray(out, dtype=np.int64)


@dataclass(frozen=True)
class ConfusionMatrix2x2:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix2x2:
    """Counts with the depressive class as positive."""
    t = _as_binary(y_true)
    p = _as_binary(y_pred)
    if t.shape != p.shape:
        raise EvaluationError(f"length mismatch: {t.shape[0]} true vs {p.shape[0]} predicted")
    if t.shape[0] == 0:
        raise EvaluationError("nothing to evaluate")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    tn = int(np.sum((t == 0) & (p == 0)))
    return ConfusionMatrix2x2(tp, fp, fn, tn)


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def per_class_metrics(cm: ConfusionMatrix2x2) -> dict[Label, dict[str, Fraction]]:
    """Exact precision/recall/F1/support per class; empty denominators give 0."""
    out = {}
    for label, (hit, false_pos, miss) in (
        (Label.DEPRESSIVE, (cm.tp, cm.fp, cm.fn)),
        (Label.NON_DEPRESSIVE, (cm.tn, cm.fn, cm.fp)),
    ):
        precision = _ratio(hit, hit + false_pos)
        recall = _ratio(hit, hit + miss)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else Fraction(0)
        out[label] = {"precision": precision, "recall": recall, "f1": f1, "support": Fraction(hit + miss)}
    return out


def classification_metrics(cm: ConfusionMatrix2x2, average: str = "weighted") -> dict[str, float]:
    """Accuracy plus averaged precision, recall and F1.

    ``weighted`` averages the two classes by support, ``macro`` uniformly and
    ``binary`` reports the depressive class alone. Arithmetic is exact until
    the final conversion, so weighted recall equals accuracy bit for bit.
    """
    if cm.total == 0:
        raise EvaluationError("confusion matrix is empty")
    if average not in AVERAGES:
        raise EvaluationError(f"average must be one of {AVERAGES}")
    per_class = per_class_metrics(cm)
    result = {"accuracy": float(Fraction(cm.tp + cm.tn, cm.total))}
    for name in ("precision", "recall", "f1"):
        if average == "binary":
            value = per_class[Label.DEPRESSIVE][name]
        elif average == "macro":
            value = sum(m[name] for m in per_class.values()) / 2
        else:
            value = sum(m[name] * m["support"] for m in per_class.values()) / cm.total
        result[name] = float(value)
    return result


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for thr, f, t in zip(self.thresholds, self.fpr, self.tpr):
            writer.writerow([repr(float(thr)), repr(float(f)), repr(float(t))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RocCurve":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(np.array([float(r["fpr"]) for r in rows]), np.array([float(r["tpr"]) for r in rows]),
                   np.array([float(r["threshold"]) for r in rows]))


def roc_curve(y_true, scores) -> RocCurve:
    """Threshold sweep over distinct scores, highest first, from (0, 0) to (1, 1)."""
    t = _as_binary(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if t.shape != s.shape:
        raise EvaluationError("labels and scores differ in length")
    if not np.all(np.isfinite(s)) or (s.size and (s.min() < 0 or s.max() > 1)):
        raise EvaluationError("scores must lie in [0, 1]")
    n_pos = int(t.sum())
    n_neg = t.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC needs both classes in y_true")
    order = np.argsort(-s, kind="mergesort")
    thresholds, tps, fps = kernels.roc_counts(s[order], t[order])
    fpr = np.concatenate([[0.0], fps / n_neg])
    tpr = np.concatenate([[0.0], tps / n_pos])
    return RocCurve(fpr, tpr, np.concatenate([[math.inf], thresholds]))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC polyline."""
    dx = np.diff(curve.fpr)
    return float(np.sum(dx * (curve.tpr[1:] + curve.tpr[:-1]) / 2.0))


@dataclass
class EvaluationReport:
    backend: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    confusion: ConfusionMatrix2x2
    roc: RocCurve | None
    n_test: int
    average: str = "weighted"
    scores: np.ndarray | None = field(default=None, repr=False)

    def metrics(self) -> dict[str, float | None]:
        return {m: getattr(self, m) for m in METRICS}

    def to_json(self) -> dict:
        return {
            "backend": self.backend,
            "n_test": self.n_test,
            "average": self.average,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "confusion_matrix": self.confusion.to_dict(),
            "positive_class": Label.DEPRESSIVE.value,
            "scores": None if self.scores is None else [float(v) for v in self.scores],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, data: dict, roc: RocCurve | None = None) -> "EvaluationReport":
        return cls(
            backend=data["backend"], accuracy=data["accuracy"], precision=data["precision"],
            recall=data["recall"], f1=data["f1"], auc=data["auc"],
            confusion=ConfusionMatrix2x2(**data["confusion_matrix"]), roc=roc,
            n_test=int(data["n_test"]), average=data.get("average", "weighted"),
            scores=None if data.get("scores") is None else np.asarray(data["scores"], dtype=np.float64),
        )

    def save(self, directory: str | Path) -> dict[str, str]:
        directory = Path(directory)
        (directory / "report.json").write_text(self.dumps(), encoding="utf-8")
        paths = {"report": "report.json"}
        if self.roc is not None:
            (directory / "roc.csv").write_text(self.roc.to_csv(), encoding="utf-8")
            paths["roc"] = "roc.csv"
        return paths


def report_from_scores(y_true, scores, backend: str, average: str = "weighted",
                       predictions=None) -> EvaluationReport:
    """Assemble a report from p(depressive) scores.

    Without explicit ``predictions`` a score of exactly 0.5 counts as depressive.
    """
    t = _as_binary(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if t.shape[0] == 0:
        raise EvaluationError("test set is empty")
    pred = (s >= 0.5).astype(np.int64) if predictions is None else _as_binary(predictions)
    cm = confusion_matrix(t, pred)
    metrics = classification_metrics(cm, average)
    curve = area = None
    if 0 < t.sum() < t.shape[0]:
        curve = roc_curve(t, s)
        area = auc(curve)
    return EvaluationReport(backend, metrics["accuracy"], metrics["precision"], metrics["recall"],
                            metrics["f1"], area, cm, curve, int(t.shape[0]), average, s)


def evaluate_model(network: Network, X_test, y_test, backend_name: str,
                   average: str = "weighted") -> EvaluationReport:
    X = np.asarray(X_test, dtype=np.float32)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EvaluationError("test set is empty")
    if X.shape[1] != network.input_len:
        raise EvaluationError(f"test vectors have width {X.shape[1]}, network expects {network.input_len}")
    probs = predict_proba(network, X)
    pred = (probs[:, 1] >= probs[:, 0]).astype(np.int64)
    return report_from_scores(y_test, np.clip(probs[:, 1], 0.0, 1.0), backend_name, average, pred)


@dataclass
class ComparisonTable:
    rows: list[dict]
    best: dict[str, list[str]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["backend"] + list(METRICS) + ["n_test"])
        for row in self.rows:
            writer.writerow([row["backend"]] + ["" if row[m] is None else repr(row[m]) for m in METRICS]
                            + [row.get("n_test", "")])
        return buf.getvalue()

    def render(self, reference: bool = False) -> str:
        """Percent table; ``*`` marks the best backend per metric."""
        header = f"{'Representation':<22}" + "".join(f"{m.capitalize() + ' (%)':>16}" for m in METRICS)
        lines = [header]
        for row in self.rows:
            cells = []
            for m in METRICS:
                v = row[m]
                mark = "*" if row["backend"] in self.best.get(m, ()) else " "
                cells.append(f"{'-' if v is None else f'{100 * v:.0f}'}{mark}".rjust(16))
            lines.append(f"{row['backend']:<22}" + "".join(cells))
        if reference:
            for name, ref in REFERENCE_ROWS.items():
                lines.append(f"{name + ' (reference)':<22}" + "".join(f"{ref[m]:>15} " for m in METRICS))
        return "\n".join(lines)


def compare_runs(reports: Sequence[EvaluationReport]) -> ComparisonTable:
    """One row per backend (sorted by name) and the best backend(s) per metric."""
    if not reports:
        raise EvaluationError("need at least one report")
    rows = sorted(
        ({"backend": r.backend, **r.metrics(), "n_test": r.n_test} for r in reports),
        key=lambda row: row["backend"],
    )
    best = {}
    for m in METRICS:
        values = [row[m] for row in rows if row[m] is not None]
        if values:
            top = max(values)
            best[m] = [row["backend"] for row in rows if row[m] == top]
    return ComparisonTable(rows, best)
