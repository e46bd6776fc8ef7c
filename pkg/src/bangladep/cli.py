"""``bangladep`` command line: inspect, preprocess, train, evaluate, compare, predict."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .artifacts import (
    ArtifactError,
    IncompleteRunError,
    LoadedRun,
    dataset_fingerprint,
    load_run,
    read_manifest,
    refresh_components,
    save_run,
)
from .corpus import (
    Corpus,
    CorpusError,
    DatasetSplits,
    Format,
    Label,
    LengthUnit,
    class_distribution,
    length_distribution,
    load_corpus,
    mean_length,
    oversample_minority,
    split_corpus,
    top_words,
)
from .evaluate import EvaluationReport, compare_runs, evaluate_model
from .network import NetworkConfig, build_network, predict_proba
from .preprocess import CleaningConfig, clean
from .train import TrainingConfig, train
from .vectorize import BackendKind, EmbeddingBackendSpec, Vectorizer, fit_tfidf, vectorize_corpus

log = logging.getLogger("bangladep")


class StageError(RuntimeError):
    """A pipeline stage failed; ``str()`` starts with the stage name."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        super().__init__(f"{stage}: {cause}")


@dataclass(frozen=True)
class SplitConfig:
    train_ratio: float = 0.70
    val_ratio: float = 0.20
    stratified: bool = True
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    output_dir: str
    format: str | None = None
    split: SplitConfig = field(default_factory=SplitConfig)
    oversample: bool = True
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)
    backend: EmbeddingBackendSpec = field(
        default_factory=lambda: EmbeddingBackendSpec(BackendKind.TFIDF, 300))
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        # the network's input length always follows the backend dimension
        if self.network.input_len != self.backend.dimension:
            object.__setattr__(self, "network", replace(self.network, input_len=self.backend.dimension))

    def validate(self) -> None:
        if not Path(self.dataset_path).is_file():
            raise StageError("config", f"dataset file not found: {self.dataset_path}")

    def to_dict(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "output_dir": self.output_dir,
            "format": self.format,
            "split": {f.name: getattr(self.split, f.name) for f in fields(SplitConfig)},
            "oversample": self.oversample,
            "cleaning": self.cleaning.to_dict(),
            "backend": self.backend.to_dict(),
            "network": self.network.to_dict(),
            "training": self.training.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise StageError("config", f"unknown keys {sorted(unknown)}")
        try:
            backend = EmbeddingBackendSpec.from_dict(data.get("backend", {"kind": "TFIDF", "dimension": 300}))
            network = dict(data.get("network", {}))
            network["input_len"] = backend.dimension
            return cls(
                dataset_path=data["dataset_path"],
                output_dir=data["output_dir"],
                format=data.get("format"),
                split=SplitConfig(**data.get("split", {})),
                oversample=bool(data.get("oversample", True)),
                cleaning=CleaningConfig.from_dict(data.get("cleaning", {})),
                backend=backend,
                network=NetworkConfig.from_dict(network),
                training=TrainingConfig.from_dict(data.get("training", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StageError("config", exc) from None


@dataclass
class PipelineResult:
    config: RunConfig
    splits: DatasetSplits
    vectorizer: Vectorizer
    network: object
    history: object
    report: EvaluationReport
    manifest: object


def _vectorize(vectorizer: Vectorizer, corpus: Corpus, cleaning: CleaningConfig) -> np.ndarray:
    return vectorize_corpus(vectorizer, [clean(t, cleaning) for t in corpus.texts])


def fit_vectorizer(config: RunConfig, train_corpus: Corpus) -> Vectorizer:
    if config.backend.kind is BackendKind.TFIDF:
        return fit_tfidf([clean(t, config.cleaning) for t in train_corpus.texts], config.backend.dimension)
    return config.backend


def run_pipeline(config: RunConfig) -> PipelineResult:
    """load, clean, split, oversample, vectorize (train-only fit), build, train, evaluate, save."""
    config.validate()
    try:
        corpus = load_corpus(config.dataset_path, config.format)
    except (CorpusError, OSError, UnicodeDecodeError) as exc:
        raise StageError("load", exc) from None
    try:
        s = config.split
        splits = split_corpus(corpus, s.train_ratio, s.val_ratio, s.seed, s.stratified)
        if config.oversample:
            splits = oversample_minority(splits, s.seed)
    except (CorpusError, ValueError) as exc:
        raise StageError("split", exc) from None
    try:
        vectorizer = fit_vectorizer(config, splits.train)
        X_train = _vectorize(vectorizer, splits.train, config.cleaning)
        X_val = _vectorize(vectorizer, splits.validation, config.cleaning) if len(splits.validation) else None
        X_test = _vectorize(vectorizer, splits.test, config.cleaning)
    except Exception as exc:  # backends raise a variety of asset/IO errors
        raise StageError("vectorize", exc) from None
    try:
        network = build_network(config.network)
    except ValueError as exc:
        raise StageError("build", exc) from None
    try:
        y_val = splits.validation.labels if X_val is not None else None
        network, history = train(network, X_train, splits.train.labels, X_val, y_val, config.training)
    except (RuntimeError, ValueError) as exc:
        raise StageError("train", exc) from None
    try:
        report = evaluate_model(network, X_test, splits.test.labels, config.backend.name)
    except ValueError as exc:
        raise StageError("evaluate", exc) from None
    try:
        manifest = save_run(config.output_dir, splits, vectorizer, network, history, report,
                            config=config.to_dict(), dataset_path=config.dataset_path, seed=config.split.seed)
    except (ArtifactError, OSError) as exc:
        raise StageError("save", exc) from None
    return PipelineResult(config, splits, vectorizer, network, history, report, manifest)


def evaluate_run(run: LoadedRun, corpus: Corpus) -> EvaluationReport:
    """Recompute the test-set report of a loaded run from its persisted test ids."""
    cleaning = CleaningConfig.from_dict(run.config.get("cleaning", {}))
    try:
        test = corpus.subset(run.splits["partitions"]["test"], "test")
    except KeyError as exc:
        raise StageError("evaluate", f"test id {exc} not in dataset") from None
    X = _vectorize(run.vectorizer, test, cleaning)
    backend = run.config.get("backend", {}).get("kind", "tfidf").lower()
    return evaluate_model(run.network, X, test.labels, backend)


def predict_texts(run: LoadedRun, texts: Sequence[str]) -> list[dict]:
    """One record per input; texts that clean to nothing get an ``error`` instead of a prediction."""
    cleaning = CleaningConfig.from_dict(run.config.get("cleaning", {}))
    cleaned = [clean(t, cleaning) for t in texts]
    keep = [i for i, c in enumerate(cleaned) if c]
    out: list[dict] = [{"line": i + 1, "error": "empty after cleaning"} for i in range(len(texts))]
    if keep:
        probs = predict_proba(run.network, vectorize_corpus(run.vectorizer, [cleaned[i] for i in keep]))
        for i, p in zip(keep, probs):
            label = Label.DEPRESSIVE if p[1] >= p[0] else Label.NON_DEPRESSIVE
            out[i] = {"line": i + 1, "label": label.value, "p_depressive": float(p[1]),
                      "p_non_depressive": float(p[0])}
    return out


# -- command implementations -------------------------------------------------

def _emit(data, out: Path | None) -> None:
    text = json.dumps(data, indent=1, ensure_ascii=False)
    if out:
        out.write_text(text + "\n", encoding="utf-8")
    print(text)


def inspect_data(corpus: Corpus, top_k: int, unit: LengthUnit, bin_width: int,
                 cleaning: CleaningConfig) -> dict:
    counts = class_distribution(corpus)
    return {
        "source": corpus.source,
        "n_posts": len(corpus),
        "class_counts": {lab.value: counts[lab] for lab in counts},
        "mean_length": {lab.value: v for lab, v in mean_length(corpus, unit).items()},
        "length_unit": unit.value,
        "length_histogram": {
            lab.value: [{"bin_start": b, "count": c} for b, c in hist.items()]
            for lab, hist in length_distribution(corpus, unit, bin_width).items()
        },
        "top_words": {
            lab.value: [{"token": t, "count": c} for t, c in rows]
            for lab, rows in top_words(corpus, top_k, cleaning=cleaning).items()
        },
    }


def _write_inspect_csv(data: dict, out_dir: Path) -> None:
    with open(out_dir / "top_words.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "rank", "token", "count"])
        for label, rows in data["top_words"].items():
            for rank, row in enumerate(rows, 1):
                w.writerow([label, rank, row["token"], row["count"]])
    with open(out_dir / "lengths.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "bin_start", "count"])
        for label, rows in data["length_histogram"].items():
            for row in rows:
                w.writerow([label, row["bin_start"], row["count"]])


def cmd_inspect(args) -> int:
    try:
        corpus = load_corpus(args.dataset, args.format)
    except CorpusError as exc:
        raise StageError("load", exc) from None
    data = inspect_data(corpus, args.top_k, LengthUnit(args.unit), args.bin_width, _cleaning_from_args(args))
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_inspect_csv(data, out_dir)
    _emit(data, out_dir / "inspect.json" if out_dir else None)
    return 0


def cmd_preprocess(args) -> int:
    try:
        corpus = load_corpus(args.dataset, args.format)
    except CorpusError as exc:
        raise StageError("load", exc) from None
    cleaning = _cleaning_from_args(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["text", "label", "text_clean"])
    empty = 0
    for post in corpus:
        cleaned = clean(post.text, cleaning)
        empty += not cleaned
        w.writerow([post.text, post.label.value, cleaned])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
        print(f"wrote {len(corpus)} rows to {args.out} ({empty} empty after cleaning)")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _config_from_args(args) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StageError("config", f"cannot read {args.config}: {exc}") from None
    for key, attr in (("dataset_path", "dataset"), ("output_dir", "output_dir"), ("format", "format")):
        if getattr(args, attr) is not None:
            data[key] = getattr(args, attr)
    split = dict(data.get("split", {}))
    for key in ("train_ratio", "val_ratio", "seed"):
        if getattr(args, key) is not None:
            split[key] = getattr(args, key)
    if args.no_stratify:
        split["stratified"] = False
    data["split"] = split
    if args.no_oversample:
        data["oversample"] = False
    backend = dict(data.get("backend", {"kind": "TFIDF", "dimension": 300}))
    if args.backend is not None:
        backend["kind"] = args.backend.upper()
    for key, attr in (("dimension", "dimension"), ("asset_ref", "asset"), ("pooling", "pooling"),
                      ("max_tokens", "max_tokens")):
        if getattr(args, attr) is not None:
            backend[key] = getattr(args, attr).upper() if attr == "pooling" else getattr(args, attr)
    data["backend"] = backend
    training = dict(data.get("training", {}))
    for key, attr in (("epochs", "epochs"), ("batch_size", "batch_size"), ("initial_lr", "lr"),
                      ("seed", "seed")):
        if getattr(args, attr) is not None:
            training[key] = getattr(args, attr)
    if args.no_callbacks:
        training["callbacks"] = False
    data["training"] = training
    network = dict(data.get("network", {}))
    if args.seed is not None:
        network["seed"] = args.seed
    data["network"] = network
    cleaning = dict(data.get("cleaning", {}))
    cleaning.update(_cleaning_overrides(args))
    data["cleaning"] = cleaning
    for key in ("dataset_path", "output_dir"):
        if key not in data:
            raise StageError("config", f"{key} is required (flag or config file)")
    return RunConfig.from_dict(data)


def cmd_train(args) -> int:
    config = _config_from_args(args)
    result = run_pipeline(config)
    h = result.history
    print(f"run: {config.output_dir}")
    print(f"epochs run: {h.stopped_epoch}, best epoch: {h.best_epoch}")
    if h.records:
        last = h.records[-1]
        print(f"final: loss {last.train_loss:.4f} acc {last.train_acc:.4f} "
              f"val_loss {last.val_loss:.4f} val_acc {last.val_acc:.4f} lr {last.lr:.2e}")
    r = result.report
    auc_text = "n/a" if r.auc is None else f"{r.auc:.4f}"
    print(f"test: accuracy {r.accuracy:.4f} precision {r.precision:.4f} recall {r.recall:.4f} "
          f"f1 {r.f1:.4f} auc {auc_text}")
    return 0


def cmd_evaluate(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        manifest = read_manifest(run_dir)
    except ArtifactError as exc:
        raise StageError("load-run", exc) from None
    dataset = args.dataset or manifest.config_snapshot.get("dataset_path")
    if not dataset or not Path(dataset).is_file():
        raise StageError("load", f"dataset file not found: {dataset}")
    if manifest.dataset_fingerprint and dataset_fingerprint(dataset) != manifest.dataset_fingerprint:
        message = f"dataset fingerprint of {dataset} differs from the run's"
        if args.fingerprint == "fail":
            raise StageError("fingerprint", message)
        log.warning("%s", message)
    try:
        run = load_run(run_dir, dataset, verify_fingerprint=False)
    except ArtifactError as exc:
        raise StageError("load-run", exc) from None
    try:
        corpus = load_corpus(dataset, manifest.config_snapshot.get("format"))
    except CorpusError as exc:
        raise StageError("load", exc) from None
    try:
        report = evaluate_run(run, corpus)
    except ValueError as exc:
        raise StageError("evaluate", exc) from None
    paths = report.save(run_dir)
    refresh_components(run_dir, paths)
    print(report.dumps(), end="")
    return 0


def cmd_compare(args) -> int:
    seen: list[Path] = []
    for raw in args.run_dirs:
        p = Path(raw).resolve()
        if p in seen:
            log.warning("duplicate run directory %s ignored", raw)
            continue
        seen.append(p)
    incomplete = [str(p) for p in seen if not (p / "manifest.json").is_file()]
    if incomplete:
        raise StageError("compare", "incomplete run(s): " + ", ".join(incomplete))
    reports = []
    for p in seen:
        try:
            run = load_run(p)
        except ArtifactError as exc:
            raise StageError("compare", f"{p}: {exc}") from None
        if run.report is None:
            raise StageError("compare", f"{p}: run has no report")
        reports.append(run.report)
    table = compare_runs(reports)
    print(table.render(reference=args.reference))
    if args.csv:
        Path(args.csv).write_text(table.to_csv(), encoding="utf-8")
    return 0


def cmd_predict(args) -> int:
    try:
        run = load_run(args.run_dir)
    except ArtifactError as exc:
        raise StageError("load-run", exc) from None
    if args.text is not None:
        texts = [args.text]
    else:
        src = sys.stdin if args.file == "-" else open(args.file, encoding="utf-8")
        with src:
            texts = [line.rstrip("\n") for line in src]
    records = predict_texts(run, texts)
    failed = 0
    for rec in records:
        if "error" in rec:
            failed += 1
            print(f"line {rec['line']}: {rec['error']}", file=sys.stderr)
            if args.json:
                print(json.dumps(rec))
            continue
        if args.json:
            print(json.dumps(rec))
        else:
            print(f"{rec['label']}\t{rec['p_depressive']:.6f}")
    if failed and not args.lenient:
        return 1
    return 0


# -- argument parsing --------------------------------------------------------

def _cleaning_overrides(args) -> dict:
    out = {}
    for name in ("emojis", "non_bangla", "punctuation", "whitespace"):
        if getattr(args, f"keep_{name}", False):
            out[{"emojis": "remove_emojis", "non_bangla": "remove_non_bangla",
                 "punctuation": "remove_punctuation", "whitespace": "normalize_whitespace"}[name]] = False
    return out


def _cleaning_from_args(args) -> CleaningConfig:
    return CleaningConfig.from_dict(_cleaning_overrides(args))


def _add_cleaning_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cleaning")
    g.add_argument("--keep-emojis", action="store_true")
    g.add_argument("--keep-non-bangla", action="store_true")
    g.add_argument("--keep-punctuation", action="store_true")
    g.add_argument("--keep-whitespace", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bangladep", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    formats = [f.value for f in Format]

    p = sub.add_parser("inspect", help="class counts, top words and length histograms")
    p.add_argument("dataset")
    p.add_argument("--format", choices=formats, type=str.upper)
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--unit", choices=[u.value for u in LengthUnit], type=str.upper, default=LengthUnit.WORDS.value)
    p.add_argument("--bin-width", type=int, default=5)
    p.add_argument("--out", help="directory for inspect.json, top_words.csv and lengths.csv")
    _add_cleaning_flags(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("preprocess", help="write the cleaned corpus as CSV")
    p.add_argument("dataset")
    p.add_argument("--format", choices=formats, type=str.upper)
    p.add_argument("--out")
    _add_cleaning_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="run the full pipeline into a new run directory")
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--dataset")
    p.add_argument("--output-dir")
    p.add_argument("--format", choices=formats, type=str.upper)
    p.add_argument("--backend", choices=[k.value.lower() for k in BackendKind], type=str.lower)
    p.add_argument("--dimension", type=int)
    p.add_argument("--asset")
    p.add_argument("--pooling", choices=["mean", "first_token"], type=str.lower)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--train-ratio", type=float)
    p.add_argument("--val-ratio", type=float)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--no-oversample", action="store_true")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--no-callbacks", action="store_true")
    p.add_argument("--seed", type=int)
    _add_cleaning_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="recompute the test report of a run")
    p.add_argument("run_dir")
    p.add_argument("--dataset", help="defaults to the path recorded in the run config")
    p.add_argument("--fingerprint", choices=["warn", "fail"], default="fail",
                   help="what to do when the dataset bytes differ from the run's")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="metric table across runs")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--csv")
    p.add_argument("--reference", action="store_true", help="append the published reference rows")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("predict", help="label posts with a trained run")
    p.add_argument("run_dir")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text")
    src.add_argument("--file", help="one post per line; '-' reads stdin")
    p.add_argument("--lenient", action="store_true", help="exit 0 even when some lines clean to nothing")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IncompleteRunError as exc:
        print(f"error: load-run: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
