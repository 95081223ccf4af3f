"""Recurrent snapshot model: encoder + graphical GRU state updates plus four
heads (reconstruction, next-step prediction, local and global predictive
encoders for the contrastive objective).
"""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
from torch import Tensor, nn

from .data import SnapshotSequence
from .errors import EmptyInputError
from .nn import (
    GraphGRUCell,
    SnapshotEncoder,
    TimeEncoder,
    glorot_init,
    normalize_adjacency,
    readout,
)

CHECKPOINT_FORMAT_VERSION = 1

DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class ModelConfig:
    """Structural hyperparameters of the model."""

    d_in: int
    d_enc: int = 256
    d_state: int = 256
    d_time: int = 100
    d_dec: int | None = None  # decoder/predictor head width; defaults to d_state
    local_hidden: int | None = None  # local predictive MLP hidden width; defaults to d_state
    head_bias: bool = True

    @property
    def dec_dim(self) -> int:
        return self.d_state if self.d_dec is None else self.d_dec

    @property
    def local_hidden_dim(self) -> int:
        return self.d_state if self.local_hidden is None else self.local_hidden


@dataclass
class PreparedSequence:
    """Snapshot tensors ready for the model: features, adjacency, normalized adjacency."""

    X: list[Tensor]
    A: list[Tensor]
    A_norm: list[Tensor]

    @property
    def N(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def d_in(self) -> int:
        return self.X[0].shape[1]

    def prefix(self, length: int) -> "PreparedSequence":
        return PreparedSequence(self.X[:length], self.A[:length], self.A_norm[:length])


def prepare(seq: SnapshotSequence, dtype: torch.dtype = torch.float32) -> PreparedSequence:
    """Convert a SnapshotSequence to tensors, precomputing normalized adjacency."""
    X, A, A_norm = [], [], []
    for snap in seq.snapshots:
        a = torch.from_numpy(np.ascontiguousarray(snap.A)).to(dtype)
        X.append(torch.from_numpy(np.ascontiguousarray(snap.X)).to(dtype))
        A.append(a)
        A_norm.append(normalize_adjacency(a))
    return PreparedSequence(X, A, A_norm)


@dataclass
class ForwardOutputs:
    """Everything the training pass emits, indexed by 1-based steps.

    structural[k-1]   : Z_k, per-node snapshot embeddings
    states[k-1]       : S_k, recurrent node states
    graph_states[k-1] : s_k = readout(S_k)
    reconstructions[k-1]  : probability matrix for snapshot k from S_k
    predictions[k-1]      : probability matrix for snapshot k+1 from S_k (k <= N-1)
    local_predictions[(k, l)]  : predicted future node embeddings, 1 <= k < l <= N
    global_predictions[(k, l)] : predicted future graph embeddings, 1 <= k < l <= N
    """

    structural: list[Tensor] = field(default_factory=list)
    states: list[Tensor] = field(default_factory=list)
    graph_states: list[Tensor] = field(default_factory=list)
    reconstructions: list[Tensor] = field(default_factory=list)
    predictions: list[Tensor] = field(default_factory=list)
    local_predictions: dict[tuple[int, int], Tensor] = field(default_factory=dict)
    global_predictions: dict[tuple[int, int], Tensor] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.structural)

    @property
    def n(self) -> int:
        return self.structural[0].shape[0]


class DynamicGraphModel(nn.Module):
    """Recurrent message-passing model over a snapshot sequence."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        bias = config.head_bias
        self.time_encoder = TimeEncoder(config.d_time)
        self.encoder = SnapshotEncoder(config.d_in, config.d_enc, bias=True)
        self.cell = GraphGRUCell(config.d_enc + config.d_time, config.d_state, bias=True)
        self.decoder_map = nn.Linear(config.d_state, config.dec_dim, bias=bias)
        self.predictor_map = nn.Linear(config.d_state, config.dec_dim, bias=bias)
        self.local_encoder = nn.Sequential(
            nn.Linear(config.d_state + config.d_time, config.local_hidden_dim, bias=bias),
            nn.ReLU(),
            nn.Linear(config.local_hidden_dim, config.d_enc, bias=bias),
        )
        self.global_encoder = nn.Linear(config.d_state + config.d_time, config.d_enc, bias=bias)
        self.double()

    def initial_state(self, n: int, dtype: torch.dtype, device=None) -> Tensor:
        return torch.zeros(n, self.config.d_state, dtype=dtype, device=device)

    def _step_input(self, Z: Tensor, k: int) -> Tensor:
        t_vec = self.time_encoder(float(k))
        return torch.cat([Z, t_vec.expand(Z.shape[0], -1)], dim=1)

    def step(self, X: Tensor, A_norm: Tensor, S: Tensor, k: int) -> tuple[Tensor, Tensor]:
        """Encode snapshot k and update the recurrent state."""
        Z = self.encoder(X, A_norm)
        S_next = self.cell(self._step_input(Z, k), A_norm, S)
        return Z, S_next

    def infer(self, prepared: PreparedSequence) -> Tensor:
        """Run the recurrence over the whole sequence; return the final state."""
        if prepared.N == 0:
            raise EmptyInputError("cannot run inference on an empty sequence")
        dtype = next(self.parameters()).dtype
        S = self.initial_state(prepared.n, dtype)
        for k in range(1, prepared.N + 1):
            _, S = self.step(prepared.X[k - 1], prepared.A_norm[k - 1], S, k)
        return S

    def decode_adjacency(self, S: Tensor) -> Tensor:
        """Reconstruction probabilities: sigmoid of inner products of mapped states."""
        Y = self.decoder_map(S)
        return torch.sigmoid(Y @ Y.T)

    def predict_next_adjacency(self, S: Tensor) -> Tensor:
        """Next-step link probabilities: sigmoid of inner products of mapped states."""
        Y = self.predictor_map(S)
        return torch.sigmoid(Y @ Y.T)

    def score_pairs(self, S: Tensor, pairs: np.ndarray) -> Tensor:
        """Next-step probabilities for an explicit (m, 2) list of node pairs."""
        Y = self.predictor_map(S)
        idx = torch.as_tensor(np.asarray(pairs), dtype=torch.long)
        return torch.sigmoid((Y[idx[:, 0]] * Y[idx[:, 1]]).sum(dim=1))

    def local_predictive_encode(self, S_k: Tensor, k: int, l: int) -> Tensor:
        """Predict node embeddings at future step l from states at step k."""
        if l <= k:
            raise ValueError(f"target step l={l} must exceed context step k={k}")
        t_vec = self.time_encoder(float(l)).expand(S_k.shape[0], -1)
        return self.local_encoder(torch.cat([S_k, t_vec], dim=1))

    def global_predictive_encode(self, s_k: Tensor, k: int, l: int) -> Tensor:
        """Predict the graph embedding at future step l from the graph state at k."""
        if l <= k:
            raise ValueError(f"target step l={l} must exceed context step k={k}")
        return self.global_encoder(torch.cat([s_k, self.time_encoder(float(l))]))

    def forward_training(self, prepared: PreparedSequence) -> ForwardOutputs:
        """Full training pass: encode, update, reconstruct, predict, and emit
        local/global predictive encodings for every future step."""
        N = prepared.N
        if N < 2:
            raise ValueError(f"training forward needs N >= 2 snapshots, got {N}")
        dtype = next(self.parameters()).dtype
        out = ForwardOutputs()
        S = self.initial_state(prepared.n, dtype)
        for k in range(1, N + 1):
            Z, S = self.step(prepared.X[k - 1], prepared.A_norm[k - 1], S, k)
            out.structural.append(Z)
            out.states.append(S)
            out.reconstructions.append(self.decode_adjacency(S))
            if k < N:
                out.predictions.append(self.predict_next_adjacency(S))
            s_k = readout(S)
            out.graph_states.append(s_k)
            for l in range(k + 1, N + 1):
                out.local_predictions[(k, l)] = self.local_predictive_encode(S, k, l)
                out.global_predictions[(k, l)] = self.global_predictive_encode(s_k, k, l)
        return out


def init_parameters(model: DynamicGraphModel, rng: np.random.Generator) -> DynamicGraphModel:
    """Glorot-uniform weights / zero biases drawn from the given stream."""
    glorot_init(model, rng)
    return model


def config_hash(config_dict: dict) -> str:
    """Stable short hash of a JSON-serializable configuration mapping."""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def save_checkpoint(
    path,
    model: DynamicGraphModel,
    seed: int,
    epoch: int,
    train_config: dict | None = None,
) -> None:
    """Write a versioned, byte-deterministic parameter container."""
    state = {name: p.detach().cpu().numpy().copy() for name, p in model.state_dict().items()}
    train_config = dict(train_config or {})
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_config": asdict(model.config),
        "train_config": train_config,
        "config_hash": config_hash({"model": asdict(model.config), "train": train_config}),
        "seed": seed,
        "epoch": epoch,
        "state": state,
    }
    with open(path, "wb") as fh:
        fh.write(pickle.dumps(payload, protocol=4))


def load_checkpoint(path, dtype: torch.dtype = torch.float64) -> tuple[DynamicGraphModel, dict]:
    """Rebuild a model from a checkpoint; returns (model, metadata)."""
    with open(path, "rb") as fh:
        payload = pickle.loads(fh.read())
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    model = DynamicGraphModel(ModelConfig(**payload["model_config"]))
    state = {name: torch.from_numpy(arr) for name, arr in payload["state"].items()}
    model.load_state_dict(state)
    model.to(dtype)
    meta = {key: payload[key] for key in ("train_config", "config_hash", "seed", "epoch")}
    return model, meta
