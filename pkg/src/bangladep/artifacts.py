"""Run directories: one manifest plus the component files each pipeline stage produced."""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .corpus import DatasetSplits
from .evaluate import EvaluationReport, RocCurve
from .network import Network, NetworkError, load_network, save_network
from .train import TrainingHistory
from .vectorize import EmbeddingBackendSpec, TfidfModel, Vectorizer

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
LOCK = ".lock"


class ArtifactError(RuntimeError):
    pass


class IncompleteRunError(ArtifactError):
    pass


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dataset_fingerprint(path: str | Path) -> str:
    """Hash of the raw dataset bytes."""
    return "sha256:" + sha256_file(path)


@dataclass
class RunManifest:
    run_id: str
    created_at: str
    dataset_fingerprint: str
    config_snapshot: dict
    seed: int
    component_paths: dict[str, str]
    checksums: dict[str, str] = field(default_factory=dict)
    pipeline_version: str = __version__
    format_version: int = FORMAT_VERSION

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        try:
            return cls(**data)
        except TypeError as exc:
            raise ArtifactError(f"manifest: {exc}") from None


@dataclass
class LoadedRun:
    manifest: RunManifest
    splits: dict
    vectorizer: Vectorizer
    network: Network
    history: TrainingHistory | None
    report: EvaluationReport | None
    directory: Path

    @property
    def config(self) -> dict:
        return self.manifest.config_snapshot


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"


class _RunLock:
    """Exclusive lock file so two writers cannot share a run directory."""

    def __init__(self, directory: Path):
        self.path = directory / LOCK

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ArtifactError(f"run directory {self.path.parent} is locked by another writer") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def save_run(directory: str | Path, splits: DatasetSplits, vectorizer: Vectorizer, network: Network,
             history: TrainingHistory | None, report: EvaluationReport | None, *,
             config: dict | None = None, dataset_path: str | Path | None = None,
             fingerprint: str | None = None, seed: int | None = None) -> RunManifest:
    """Write every component, then the manifest; a run without manifest.json is incomplete."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ArtifactError(f"cannot create run directory {directory}: {exc}") from exc
    if (directory / MANIFEST).exists():
        raise ArtifactError(f"{directory} already holds a completed run")
    if fingerprint is None:
        fingerprint = dataset_fingerprint(dataset_path) if dataset_path else ""

    with _RunLock(directory):
        paths: dict[str, str] = {}
        (directory / "splits.json").write_text(_dump(splits.to_manifest()), encoding="utf-8")
        paths["splits"] = "splits.json"
        if isinstance(vectorizer, TfidfModel):
            vectorizer.save(directory / "tfidf.json")
            paths["vectorizer"] = "tfidf.json"
        else:
            (directory / "backend.json").write_text(_dump(vectorizer.to_dict()), encoding="utf-8")
            paths["vectorizer"] = "backend.json"
        paths.update(save_network(network, directory))
        if history is not None:
            history.save(directory / "history.csv")
            paths["history"] = "history.csv"
        if report is not None:
            paths.update(report.save(directory))

        manifest = RunManifest(
            run_id=uuid.uuid4().hex,
            created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            dataset_fingerprint=fingerprint,
            config_snapshot=config or {},
            seed=splits.seed if seed is None else seed,
            component_paths=paths,
            checksums={name: sha256_file(directory / rel) for name, rel in paths.items()},
        )
        tmp = directory / (MANIFEST + ".tmp")
        tmp.write_text(_dump(manifest.to_json()), encoding="utf-8")
        os.replace(tmp, directory / MANIFEST)
    return manifest


def read_manifest(directory: str | Path) -> RunManifest:
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.is_file():
        raise IncompleteRunError(f"incomplete run: {directory} has no {MANIFEST}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"manifest: unreadable JSON ({exc})") from None
    manifest = RunManifest.from_json(data)
    if manifest.format_version != FORMAT_VERSION:
        raise ArtifactError(
            f"manifest: format version {manifest.format_version}, this build reads {FORMAT_VERSION}")
    return manifest


def _verify(directory: Path, manifest: RunManifest) -> None:
    for name, rel in manifest.component_paths.items():
        path = directory / rel
        if not path.is_file():
            raise ArtifactError(f"{name}: missing component file {rel}")
        expected = manifest.checksums.get(name)
        if expected and sha256_file(path) != expected:
            raise ArtifactError(f"{name}: checksum mismatch for {rel}")


def load_vectorizer(directory: Path, rel: str) -> Vectorizer:
    path = directory / rel
    try:
        if rel.endswith("tfidf.json"):
            return TfidfModel.load(path)
        return EmbeddingBackendSpec.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (ValueError, KeyError, TypeError) as exc:
        raise ArtifactError(f"vectorizer: cannot parse {rel} ({exc})") from None


def load_run(directory: str | Path, dataset_path: str | Path | None = None,
             verify_fingerprint: bool = True) -> LoadedRun:
    """Rebuild every component of a completed run.

    With ``dataset_path`` the raw-byte fingerprint is checked unless
    ``verify_fingerprint`` is false.
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    _verify(directory, manifest)
    if dataset_path is not None and verify_fingerprint and manifest.dataset_fingerprint:
        if dataset_fingerprint(dataset_path) != manifest.dataset_fingerprint:
            raise ArtifactError(f"dataset: fingerprint of {dataset_path} does not match the run")
    paths = manifest.component_paths
    try:
        splits = json.loads((directory / paths["splits"]).read_text(encoding="utf-8"))
    except (KeyError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"splits: {exc}") from None
    vectorizer = load_vectorizer(directory, paths["vectorizer"])
    try:
        network = load_network(directory)
    except (NetworkError, RuntimeError, KeyError, OSError) as exc:
        raise ArtifactError(f"network: {exc}") from None
    history = TrainingHistory.load(directory / paths["history"]) if "history" in paths else None
    report = None
    if "report" in paths:
        roc = RocCurve.from_csv((directory / paths["roc"]).read_text(encoding="utf-8")) if "roc" in paths else None
        report = EvaluationReport.from_json(json.loads((directory / paths["report"]).read_text(encoding="utf-8")), roc)
    return LoadedRun(manifest, splits, vectorizer, network, history, report, directory)


def refresh_components(directory: str | Path, paths: dict[str, str]) -> RunManifest:
    """Record rewritten component files in an existing manifest."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    with _RunLock(directory):
        manifest.component_paths.update(paths)
        for name, rel in paths.items():
            manifest.checksums[name] = sha256_file(directory / rel)
        tmp = directory / (MANIFEST + ".tmp")
        tmp.write_text(_dump(manifest.to_json()), encoding="utf-8")
        os.replace(tmp, directory / MANIFEST)
    return manifest
