"""CNN-BiLSTM document classifier and its parameter ledger.

Layer stack, for a document vector of length D fed as a one-channel sequence::

    Conv1D(100, 3, relu, valid) -> BatchNorm -> MaxPool1D(2)
    -> BiLSTM(128 per direction, full sequence, concat) -> BatchNorm -> Flatten
    -> Dense(256, relu, l2) -> Dropout(0.3) -> Dense(128, relu, stronger l2)
    -> Dropout(0.3) -> Dense(2, softmax)

With D = 300 this is 10,034,594 parameters, 712 of them non-trainable
(BatchNorm moving statistics).
"""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

BN_EPSILON = 1e-3
BN_MOMENTUM = 0.01  # torch convention; a moving-average decay of 0.99


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    input_len: int = 300
    conv_filters: int = 100
    conv_kernel: int = 3
    pool_size: int = 2
    lstm_units_per_direction: int = 128
    dense1_units: int = 256
    dense2_units: int = 128
    dropout_rate: float = 0.30
    l2_dense1: float = 1e-3
    l2_dense2: float = 5e-3
    n_classes: int = 2
    seed: int = 0

    def __post_init__(self):
        units = (self.conv_filters, self.conv_kernel, self.pool_size, self.lstm_units_per_direction,
                 self.dense1_units, self.dense2_units)
        if min(units) < 1:
            raise NetworkError("all layer sizes must be positive")
        if self.input_len < self.conv_kernel:
            raise NetworkError(f"input_len {self.input_len} shorter than conv kernel {self.conv_kernel}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise NetworkError("dropout_rate must be in [0, 1)")
        if not 0.0 <= self.l2_dense1 < self.l2_dense2:
            raise NetworkError("need 0 <= l2_dense1 < l2_dense2")
        if self.n_classes != 2:
            raise NetworkError("only binary classification (n_classes=2) is supported")

    @property
    def conv_len(self) -> int:
        return self.input_len - self.conv_kernel + 1

    @property
    def pool_len(self) -> int:
        return self.conv_len // self.pool_size

    @property
    def lstm_out(self) -> int:
        return 2 * self.lstm_units_per_direction

    @property
    def flatten_len(self) -> int:
        return self.pool_len * self.lstm_out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        return cls(**data)


@dataclass(frozen=True)
class LayerLedgerEntry:
    name: str
    output_shape: tuple
    trainable_params: int
    non_trainable_params: int = 0

    @property
    def total(self) -> int:
        return self.trainable_params + self.non_trainable_params


@dataclass(frozen=True)
class Ledger:
    entries: tuple[LayerLedgerEntry, ...]

    @property
    def trainable(self) -> int:
        return sum(e.trainable_params for e in self.entries)

    @property
    def non_trainable(self) -> int:
        return sum(e.non_trainable_params for e in self.entries)

    @property
    def total(self) -> int:
        return self.trainable + self.non_trainable

    def by_name(self) -> dict[str, LayerLedgerEntry]:
        return {e.name: e for e in self.entries}

    def to_json(self) -> dict:
        return {
            "layers": [
                {"name": e.name, "output_shape": [None if d is None else int(d) for d in e.output_shape],
                 "trainable_params": e.trainable_params, "non_trainable_params": e.non_trainable_params}
                for e in self.entries
            ],
            "total_params": self.total,
            "trainable_params": self.trainable,
            "non_trainable_params": self.non_trainable,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Ledger":
        return cls(tuple(
            LayerLedgerEntry(d["name"], tuple(d["output_shape"]), int(d["trainable_params"]),
                             int(d["non_trainable_params"]))
            for d in data["layers"]
        ))

    def render(self) -> str:
        lines = [f"{'Layer':<24}{'Output Shape':<20}{'Params':>12}"]
        for e in self.entries:
            shape = "(" + ", ".join("None" if d is None else str(d) for d in e.output_shape) + ")"
            lines.append(f"{e.name:<24}{shape:<20}{e.total:>12,}")
        lines.append(f"Total params: {self.total:,}")
        lines.append(f"Trainable params: {self.trainable:,}")
        lines.append(f"Non-trainable params: {self.non_trainable:,}")
        return "\n".join(lines)


LAYER_NAMES = (
    "conv1d", "batch_normalization", "max_pooling1d", "bidirectional", "batch_normalization_1",
    "flatten", "dense", "dropout", "dense_1", "dropout_1", "dense_2",
)


def shape_chain(config: NetworkConfig) -> list[tuple[str, tuple]]:
    """Per-sample output shapes, starting with the reshaped input."""
    c = config
    return [
        ("input", (c.input_len, 1)),
        ("conv1d", (c.conv_len, c.conv_filters)),
        ("batch_normalization", (c.conv_len, c.conv_filters)),
        ("max_pooling1d", (c.pool_len, c.conv_filters)),
        ("bidirectional", (c.pool_len, c.lstm_out)),
        ("batch_normalization_1", (c.pool_len, c.lstm_out)),
        ("flatten", (c.flatten_len,)),
        ("dense", (c.dense1_units,)),
        ("dropout", (c.dense1_units,)),
        ("dense_1", (c.dense2_units,)),
        ("dropout_1", (c.dense2_units,)),
        ("dense_2", (c.n_classes,)),
    ]


def closed_form_ledger(config: NetworkConfig) -> Ledger:
    c = config
    h = c.lstm_units_per_direction
    counts = {
        "conv1d": (c.conv_kernel * 1 * c.conv_filters + c.conv_filters, 0),
        "batch_normalization": (2 * c.conv_filters, 2 * c.conv_filters),
        "max_pooling1d": (0, 0),
        "bidirectional": (2 * 4 * (h * (h + c.conv_filters) + h), 0),
        "batch_normalization_1": (2 * c.lstm_out, 2 * c.lstm_out),
        "flatten": (0, 0),
        "dense": (c.flatten_len * c.dense1_units + c.dense1_units, 0),
        "dropout": (0, 0),
        "dense_1": (c.dense1_units * c.dense2_units + c.dense2_units, 0),
        "dropout_1": (0, 0),
        "dense_2": (c.dense2_units * c.n_classes + c.n_classes, 0),
    }
    shapes = dict(shape_chain(config))
    return Ledger(tuple(
        LayerLedgerEntry(name, (None,) + shapes[name], *counts[name]) for name in LAYER_NAMES
    ))


class BiLSTM(nn.Module):
    """Bidirectional LSTM with one bias vector per direction.

    The bias rides along as an extra weight column fed by a constant-one input
    channel, so each direction holds ``4 * (h * (h + in) + h)`` parameters.
    Gate order is input, forget, cell, output.
    """

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lstm = nn.LSTM(input_size + 1, hidden_size, batch_first=True, bidirectional=True, bias=False)
        self.reset_parameters()

    def reset_parameters(self) -> None:
        h, n = self.hidden_size, self.input_size
        limit = float(np.sqrt(6.0 / (n + 4 * h)))
        for suffix in ("", "_reverse"):
            w_ih = getattr(self.lstm, f"weight_ih_l0{suffix}")
            w_hh = getattr(self.lstm, f"weight_hh_l0{suffix}")
            with torch.no_grad():
                w_ih[:, :n].uniform_(-limit, limit)
                w_ih[:, n].zero_()
                w_ih[h:2 * h, n] = 1.0  # unit forget-gate bias
                recurrent = torch.empty(h, 4 * h)
                nn.init.orthogonal_(recurrent)
                w_hh.copy_(recurrent.t())

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        ones = x.new_ones(x.shape[0], x.shape[1], 1)
        out, _ = self.lstm(torch.cat([x, ones], dim=2))
        return out


class CNNBiLSTM(nn.Module):
    def __init__(self, config: NetworkConfig):
        super().__init__()
        c = config
        self.config = config
        self.conv = nn.Conv1d(1, c.conv_filters, c.conv_kernel)
        self.bn1 = nn.BatchNorm1d(c.conv_filters, eps=BN_EPSILON, momentum=BN_MOMENTUM)
        self.pool = nn.MaxPool1d(c.pool_size)
        self.bilstm = BiLSTM(c.conv_filters, c.lstm_units_per_direction)
        self.bn2 = nn.BatchNorm1d(c.lstm_out, eps=BN_EPSILON, momentum=BN_MOMENTUM)
        self.dense1 = nn.Linear(c.flatten_len, c.dense1_units)
        self.drop1 = nn.Dropout(c.dropout_rate)
        self.dense2 = nn.Linear(c.dense1_units, c.dense2_units)
        self.drop2 = nn.Dropout(c.dropout_rate)
        self.out = nn.Linear(c.dense2_units, c.n_classes)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        x = x.unsqueeze(1)                      # (B, 1, D)
        x = torch.relu(self.conv(x))            # (B, F, D-2)
        x = self.pool(self.bn1(x))              # (B, F, L)
        x = self.bilstm(x.transpose(1, 2))      # (B, L, 2H)
        x = self.bn2(x.transpose(1, 2)).transpose(1, 2)
        x = x.flatten(1)                        # time-major, like a Keras Flatten
        x = self.drop1(torch.relu(self.dense1(x)))
        x = self.drop2(torch.relu(self.dense2(x)))
        return self.out(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.logits(x), dim=1)

    def l2_penalty(self) -> torch.Tensor:
        c = self.config
        return c.l2_dense1 * self.dense1.weight.square().sum() + c.l2_dense2 * self.dense2.weight.square().sum()

    def layer_modules(self) -> dict[str, nn.Module | None]:
        return {
            "conv1d": self.conv, "batch_normalization": self.bn1, "max_pooling1d": self.pool,
            "bidirectional": self.bilstm, "batch_normalization_1": self.bn2, "flatten": None,
            "dense": self.dense1, "dropout": self.drop1, "dense_1": self.dense2,
            "dropout_1": self.drop2, "dense_2": self.out,
        }


@dataclass
class Network:
    config: NetworkConfig
    module: CNNBiLSTM
    layers: list[tuple[str, tuple]] = field(default_factory=list)

    @property
    def input_len(self) -> int:
        return self.config.input_len

    def state_dict(self) -> dict:
        return copy.deepcopy(self.module.state_dict())

    def load_state_dict(self, state: dict) -> None:
        self.module.load_state_dict(state)


def build_network(config: NetworkConfig) -> Network:
    """Instantiate the classifier with weights drawn from ``config.seed``."""
    if config.pool_len < 1:
        raise NetworkError(
            f"sequence collapsed: input_len {config.input_len} leaves conv length {config.conv_len} "
            f"and pooled length {config.pool_len}"
        )
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        module = CNNBiLSTM(config)
    module.eval()
    return Network(config, module, shape_chain(config))


def parameter_count(network: Network | NetworkConfig) -> Ledger:
    """Closed-form per-layer parameter counts."""
    config = network.config if isinstance(network, Network) else network
    return closed_form_ledger(config)


def framework_ledger(network: Network) -> Ledger:
    """Per-layer counts read back from the instantiated torch modules."""
    shapes = dict(network.layers)
    entries = []
    for name, mod in network.module.layer_modules().items():
        trainable = non_trainable = 0
        if mod is not None:
            trainable = sum(p.numel() for p in mod.parameters() if p.requires_grad)
            non_trainable = sum(p.numel() for p in mod.parameters() if not p.requires_grad)
            non_trainable += sum(b.numel() for n, b in mod.named_buffers() if n != "num_batches_tracked")
        entries.append(LayerLedgerEntry(name, (None,) + shapes[name], trainable, non_trainable))
    return Ledger(tuple(entries))


def traced_shapes(network: Network, batch: int = 2) -> dict[str, tuple]:
    """Output shapes observed by running a zero batch through the modules."""
    m = network.module
    seen: dict[str, tuple] = {}
    x = torch.zeros(batch, network.input_len)
    with torch.no_grad():
        h = x.unsqueeze(1)
        seen["input"] = tuple(h.transpose(1, 2).shape)
        h = torch.relu(m.conv(h))
        seen["conv1d"] = tuple(h.transpose(1, 2).shape)
        h = m.bn1(h)
        seen["batch_normalization"] = tuple(h.transpose(1, 2).shape)
        h = m.pool(h)
        seen["max_pooling1d"] = tuple(h.transpose(1, 2).shape)
        h = m.bilstm(h.transpose(1, 2))
        seen["bidirectional"] = tuple(h.shape)
        h = m.bn2(h.transpose(1, 2)).transpose(1, 2)
        seen["batch_normalization_1"] = tuple(h.shape)
        h = h.flatten(1)
        seen["flatten"] = tuple(h.shape)
        h = m.drop1(torch.relu(m.dense1(h)))
        seen["dense"] = seen["dropout"] = tuple(h.shape)
        h = m.drop2(torch.relu(m.dense2(h)))
        seen["dense_1"] = seen["dropout_1"] = tuple(h.shape)
        seen["dense_2"] = tuple(m.out(h).shape)
    return {k: (None,) + v[1:] for k, v in seen.items()}


def _as_batch(network: Network, batch) -> torch.Tensor:
    arr = np.asarray(batch, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1] != network.input_len:
        raise NetworkError(f"expected a (B, {network.input_len}) batch, got shape {arr.shape}")
    return torch.from_numpy(arr)


def forward(network: Network, batch, training_mode: bool = False) -> np.ndarray:
    """Class probabilities ``(B, 2)``; column 1 is the depressive class.

    ``training_mode`` turns dropout and batch statistics on for this call
    only; the stored BatchNorm moving statistics are left untouched.
    """
    x = _as_batch(network, batch)
    if x.shape[0] == 0:
        return np.zeros((0, network.config.n_classes))
    module = network.module
    was_training = module.training
    if training_mode:
        saved = {k: v.clone() for k, v in module.named_buffers()}
        module.train()
    else:
        module.eval()
    try:
        with torch.no_grad():
            probs = torch.softmax(module.logits(x).double(), dim=1)
    finally:
        if training_mode:
            for k, v in module.named_buffers():
                v.copy_(saved[k])
        module.train(was_training)
    return probs.numpy()


def predict_proba(network: Network, X, batch_size: int = 256) -> np.ndarray:
    """Inference-mode probabilities in chunks."""
    X = np.asarray(X, dtype=np.float32)
    if X.shape[0] == 0:
        return forward(network, X)
    return np.concatenate([forward(network, X[i:i + batch_size]) for i in range(0, X.shape[0], batch_size)])


def save_network(network: Network, directory: str | Path) -> dict[str, str]:
    """Write ``weights.pt`` and the framework-independent ``network.json``."""
    directory = Path(directory)
    torch.save(network.module.state_dict(), directory / "weights.pt")
    doc = {
        "config": network.config.to_dict(),
        "shape_chain": [{"name": n, "shape": list(s)} for n, s in network.layers],
        "ledger": framework_ledger(network).to_json(),
    }
    (directory / "network.json").write_text(json.dumps(doc, indent=1), encoding="utf-8")
    return {"weights": "weights.pt", "network": "network.json"}


def load_network(directory: str | Path) -> Network:
    directory = Path(directory)
    doc = json.loads((directory / "network.json").read_text(encoding="utf-8"))
    network = build_network(NetworkConfig.from_dict(doc["config"]))
    state = torch.load(directory / "weights.pt", map_location="cpu", weights_only=True)
    network.module.load_state_dict(state)
    network.module.eval()
    recorded = Ledger.from_json(doc["ledger"])
    if recorded.total != framework_ledger(network).total:
        raise NetworkError("network.json ledger does not match the rebuilt network")
    return network
