"""Training loop with validation-loss early stopping and learning-rate-on-plateau reduction."""
from __future__ import annotations

import copy
import csv
import enum
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .network import Network

log = logging.getLogger(__name__)

PROB_EPSILON = 1e-7
HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 60
    batch_size: int = 16
    initial_lr: float = 1e-3
    early_stop_patience: int = 10
    lr_reduce_factor: float = 0.2
    lr_reduce_patience: int = 2
    min_lr: float = 1e-6
    seed: int = 0
    restore_best_weights: bool = True
    callbacks: bool = True
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-7

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0.0 < self.lr_reduce_factor < 1.0:
            raise ValueError("lr_reduce_factor must be in (0, 1)")
        if self.early_stop_patience < 1 or self.lr_reduce_patience < 1:
            raise ValueError("patience values must be >= 1")
        if self.initial_lr <= 0 or self.min_lr < 0:
            raise ValueError("learning rates must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingConfig":
        return cls(**data)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    lr: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def lrs(self) -> list[float]:
        return [r.lr for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for r in self.records:
            writer.writerow([r.epoch] + [repr(float(v)) for v in (r.train_loss, r.train_acc, r.val_loss,
                                                                   r.val_acc, r.lr)])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str, best_epoch: int | None = None) -> "TrainingHistory":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != HISTORY_COLUMNS:
            raise ValueError(f"unexpected history columns {reader.fieldnames}")
        records = [
            EpochRecord(int(row["epoch"]), float(row["train_loss"]), float(row["train_acc"]),
                        float(row["val_loss"]), float(row["val_acc"]), float(row["lr"]))
            for row in reader
        ]
        if best_epoch is None:
            finite = [r for r in records if math.isfinite(r.val_loss)]
            best_epoch = min(finite, key=lambda r: r.val_loss).epoch if finite else len(records)
        return cls(records, len(records), best_epoch)

    @classmethod
    def load(cls, path: str | Path, best_epoch: int | None = None) -> "TrainingHistory":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"), best_epoch)


class Decision(str, enum.Enum):
    CONTINUE = "CONTINUE"
    STOP = "STOP"


@dataclass
class CallbackState:
    """Counters for both callbacks. Each keeps its own best, as two independent callbacks would."""

    current_lr: float = 1e-3
    best_val_loss: float = math.inf
    best_epoch: int = 0
    epochs_since_improve_stop: int = 0
    plateau_best: float = math.inf
    epochs_since_improve_lr: int = 0
    epoch: int = 0


def early_stopping_step(state: CallbackState, val_loss: float, patience: int = 10) -> Decision:
    """Record one epoch's validation loss; STOP once ``patience`` epochs pass without a new minimum."""
    if not math.isfinite(val_loss):
        raise TrainingError(f"non-finite validation loss {val_loss}")
    state.epoch += 1
    if val_loss < state.best_val_loss:
        state.best_val_loss = val_loss
        state.best_epoch = state.epoch
        state.epochs_since_improve_stop = 0
        return Decision.CONTINUE
    state.epochs_since_improve_stop += 1
    if state.epochs_since_improve_stop >= patience:
        return Decision.STOP
    return Decision.CONTINUE


def reduce_lr_step(state: CallbackState, val_loss: float, factor: float = 0.2, patience: int = 2,
                   min_lr: float = 1e-6) -> float:
    """Return the learning rate for the next epoch; the counter restarts after each cut."""
    if not math.isfinite(val_loss):
        raise TrainingError(f"non-finite validation loss {val_loss}")
    if val_loss < state.plateau_best:
        state.plateau_best = val_loss
        state.epochs_since_improve_lr = 0
        return state.current_lr
    state.epochs_since_improve_lr += 1
    if state.epochs_since_improve_lr >= patience:
        if state.current_lr > min_lr:
            state.current_lr = max(state.current_lr * factor, min_lr)
        state.epochs_since_improve_lr = 0
    return state.current_lr


def _clip(p):
    return np.clip(p, PROB_EPSILON, 1.0 - PROB_EPSILON)


def categorical_cross_entropy(probabilities, targets) -> float:
    """Mean of ``-log p(true class)`` with probabilities clipped to ``[1e-7, 1 - 1e-7]``."""
    p = np.asarray(probabilities, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 2:
        raise ValueError(f"shape mismatch: probabilities {p.shape}, targets {t.shape}")
    if p.shape[0] == 0:
        return 0.0
    return float(np.mean(-np.sum(t * np.log(_clip(p)), axis=1)))


def _cce_torch(probs: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    p_true = probs.gather(1, y.unsqueeze(1)).squeeze(1)
    return -torch.log(p_true.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)).mean()


def one_hot(y, n_classes: int = 2) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    out = np.zeros((y.shape[0], n_classes))
    out[np.arange(y.shape[0]), y] = 1.0
    return out


def _as_indices(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim == 2:
        if not np.all((y == 0) | (y == 1)) or not np.all(y.sum(axis=1) == 1):
            raise ValueError("targets must be one-hot rows")
        return y.argmax(axis=1).astype(np.int64)
    return y.astype(np.int64)


def predicted_class(probs: torch.Tensor | np.ndarray):
    """Argmax with exact ties going to the depressive class (column 1)."""
    return probs[:, 1] >= probs[:, 0]


def _evaluate_loss(module, X: torch.Tensor, y: torch.Tensor, chunk: int = 256) -> tuple[float, float]:
    module.eval()
    total = 0.0
    correct = 0
    with torch.no_grad():
        for i in range(0, X.shape[0], chunk):
            probs = module(X[i:i + chunk])
            total += float(_cce_torch(probs, y[i:i + chunk])) * probs.shape[0]
            correct += int((predicted_class(probs).long() == y[i:i + chunk]).sum())
        penalty = float(module.l2_penalty())
    n = X.shape[0]
    return total / n + penalty, correct / n


def train(network: Network, X_train, y_train, X_val=None, y_val=None,
          config: TrainingConfig | None = None) -> tuple[Network, TrainingHistory]:
    """Fit ``network`` in place with Adam and return it with the per-epoch history.

    Targets may be class indices (1 = depressive) or one-hot rows. Losses
    include the dense-layer l2 penalty. With ``restore_best_weights`` the
    returned network carries the weights of the lowest-validation-loss epoch.
    """
    config = config or TrainingConfig()
    X = torch.as_tensor(np.asarray(X_train, dtype=np.float32))
    y = torch.as_tensor(_as_indices(y_train))
    if X.ndim != 2 or X.shape[0] == 0:
        raise TrainingError("training set is empty")
    if X.shape[1] != network.input_len:
        raise TrainingError(f"training vectors have width {X.shape[1]}, network expects {network.input_len}")
    has_val = X_val is not None and len(X_val) > 0
    if config.callbacks and not has_val:
        raise TrainingError("callbacks need a non-empty validation set")
    if has_val:
        Xv = torch.as_tensor(np.asarray(X_val, dtype=np.float32))
        yv = torch.as_tensor(_as_indices(y_val))
        if Xv.shape[1] != network.input_len:
            raise TrainingError(f"validation vectors have width {Xv.shape[1]}, network expects {network.input_len}")

    module = network.module
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    optimizer = torch.optim.Adam(module.parameters(), lr=config.initial_lr,
                                 betas=(config.adam_beta1, config.adam_beta2), eps=config.adam_epsilon)
    state = CallbackState(current_lr=config.initial_lr)
    history = TrainingHistory()
    best_weights = copy.deepcopy(module.state_dict())
    n = X.shape[0]

    for epoch in range(1, config.epochs + 1):
        lr = state.current_lr
        for group in optimizer.param_groups:
            group["lr"] = lr
        module.train()
        order = torch.as_tensor(rng.permutation(n))
        loss_sum = 0.0
        correct = 0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb, yb = X[idx], y[idx]
            probs = module(xb)
            loss = _cce_torch(probs, yb) + module.l2_penalty()
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b + 1}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            loss_sum += float(loss.detach()) * len(idx)
            correct += int((predicted_class(probs.detach()).long() == yb).sum())
        train_loss, train_acc = loss_sum / n, correct / n

        if has_val:
            val_loss, val_acc = _evaluate_loss(module, Xv, yv)
        else:
            val_loss = val_acc = math.nan
        history.records.append(EpochRecord(epoch, train_loss, train_acc, val_loss, val_acc, lr))
        log.info("epoch %d: loss %.4f acc %.4f val_loss %.4f val_acc %.4f lr %.2e",
                 epoch, train_loss, train_acc, val_loss, val_acc, lr)
        if not config.callbacks:
            continue
        decision = early_stopping_step(state, val_loss, config.early_stop_patience)
        if state.best_epoch == epoch:
            best_weights = copy.deepcopy(module.state_dict())
        reduce_lr_step(state, val_loss, config.lr_reduce_factor, config.lr_reduce_patience, config.min_lr)
        if decision is Decision.STOP:
            log.info("early stop at epoch %d (best %d)", epoch, state.best_epoch)
            break

    history.stopped_epoch = len(history.records)
    history.best_epoch = state.best_epoch if config.callbacks else history.stopped_epoch
    if config.callbacks and config.restore_best_weights:
        module.load_state_dict(best_weights)
    module.eval()
    return network, history
