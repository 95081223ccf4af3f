"""Optimization loop: AdamW full-sequence steps, plateau scheduling,
best-checkpoint tracking, strict seed-reproducibility, and a finite-difference
gradient checker for the four loss terms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import torch

from .data import SnapshotSequence
from .errors import NumericError
from .losses import (
    LossWeights,
    NegativeSamplingConfig,
    ObjectiveConfig,
    cpc_loss,
    prediction_loss,
    reconstruction_loss,
    total_loss,
)
from .model import DTYPES, DynamicGraphModel, ModelConfig, PreparedSequence, init_parameters, prepare
from .rng import split_run_streams

LOSS_SELECTORS = ("prediction", "reconstruction", "local_cpc", "global_cpc")


@dataclass(frozen=True)
class TrainConfig:
    """One run's full training configuration."""

    lr: float = 1e-3
    weight_decay: float = 5e-4
    scheduler_factor: float = 0.8
    scheduler_patience: int = 20
    epochs: int = 1000
    seed: int = 0
    alpha: float = 1.0
    beta: float = 1.0
    d_enc: int = 256
    d_state: int = 256
    d_time: int = 100
    d_dec: int | None = None
    local_hidden: int | None = None
    head_bias: bool = True
    nce_negatives: int = 10
    exhaustive_nce: bool = False
    balanced_bce: bool = True
    use_reconstruction: bool = True
    use_local_nce: bool = True
    use_global_nce: bool = True
    dtype: str = "float32"

    def __post_init__(self):
        if self.lr <= 0 or self.weight_decay < 0:
            raise ValueError("lr must be positive and weight_decay nonnegative")
        if not 0 < self.scheduler_factor <= 1:
            raise ValueError("scheduler_factor must be in (0, 1]")
        if self.epochs < 0 or self.scheduler_patience < 0:
            raise ValueError("epochs and scheduler_patience must be nonnegative")
        if self.dtype not in DTYPES:
            raise ValueError(f"dtype must be one of {tuple(DTYPES)}")

    def model_config(self, d_in: int) -> ModelConfig:
        return ModelConfig(
            d_in=d_in,
            d_enc=self.d_enc,
            d_state=self.d_state,
            d_time=self.d_time,
            d_dec=self.d_dec,
            local_hidden=self.local_hidden,
            head_bias=self.head_bias,
        )

    def objective_config(self) -> ObjectiveConfig:
        return ObjectiveConfig(
            weights=LossWeights(alpha=self.alpha, beta=self.beta),
            nce=NegativeSamplingConfig(
                num_negatives=self.nce_negatives, exhaustive=self.exhaustive_nce
            ),
            balanced_bce=self.balanced_bce,
            use_reconstruction=self.use_reconstruction,
            use_local_nce=self.use_local_nce,
            use_global_nce=self.use_global_nce,
        )

    def with_overrides(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)


HISTORY_COLUMNS = ("epoch", "lr", "total", "prediction", "reconstruction", "cpc", "cpc_local", "cpc_global")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    total: float
    prediction: float
    reconstruction: float
    cpc: float
    cpc_local: float
    cpc_global: float


@dataclass
class TrainHistory:
    """Per-epoch loss components and learning rate."""

    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> list[float]:
        return [getattr(rec, name) for rec in self.records]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(HISTORY_COLUMNS)
            for rec in self.records:
                writer.writerow([rec.epoch] + [repr(getattr(rec, c)) for c in HISTORY_COLUMNS[1:]])

    @classmethod
    def from_csv(cls, path) -> "TrainHistory":
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                records.append(
                    EpochRecord(
                        epoch=int(row["epoch"]),
                        **{c: float(row[c]) for c in HISTORY_COLUMNS[1:]},
                    )
                )
        return cls(records)


def build_model(config: TrainConfig, d_in: int) -> DynamicGraphModel:
    """Construct and initialize a model from the run seed's init stream."""
    model = DynamicGraphModel(config.model_config(d_in))
    init_parameters(model, split_run_streams(config.seed).init)
    return model.to(DTYPES[config.dtype])


def train_model(
    train_seq: SnapshotSequence, config: TrainConfig
) -> tuple[DynamicGraphModel, TrainHistory]:
    """Run full-sequence gradient descent; returns the best-loss parameters.

    One AdamW step per epoch over the entire training sequence, a
    reduce-on-plateau schedule on the total loss, and best-checkpoint
    selection on training total loss. Deterministic given config.seed.
    """
    if train_seq.N < 2 and config.epochs > 0:
        raise ValueError("training needs at least two snapshots")
    dtype = DTYPES[config.dtype]
    prepared = prepare(train_seq, dtype)
    model = build_model(config, prepared.d_in)
    history = TrainHistory()
    if config.epochs == 0:
        return model, history

    streams = split_run_streams(config.seed)
    objective = config.objective_config()
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=config.lr, weight_decay=config.weight_decay
    )
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, factor=config.scheduler_factor, patience=config.scheduler_patience
    )
    best_total = math.inf
    best_state = None
    best_epoch = 0
    for epoch in range(1, config.epochs + 1):
        optimizer.zero_grad()
        outputs = model.forward_training(prepared)
        breakdown = total_loss(outputs, prepared, objective, streams.negatives)
        values = breakdown.values()
        if not all(math.isfinite(v) for v in values.values()):
            raise NumericError(
                f"non-finite loss at epoch {epoch}", diagnostics={"epoch": epoch, **values}
            )
        breakdown.total.backward()
        lr_used = optimizer.param_groups[0]["lr"]
        optimizer.step()
        history.records.append(EpochRecord(epoch=epoch, lr=lr_used, **values))
        if values["total"] < best_total:
            best_total = values["total"]
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        scheduler.step(values["total"])
    model.load_state_dict(best_state)
    model.best_epoch = best_epoch
    return model, history


def _loss_closure(
    model: DynamicGraphModel, prepared: PreparedSequence, selector: str, balanced: bool
) -> Callable[[], torch.Tensor]:
    """Deterministic scalar loss of the current parameters (exhaustive NCE)."""
    if selector not in LOSS_SELECTORS:
        raise ValueError(f"selector must be one of {LOSS_SELECTORS}")
    exhaustive = NegativeSamplingConfig(exhaustive=True)

    def closure() -> torch.Tensor:
        outputs = model.forward_training(prepared)
        if selector == "prediction":
            return prediction_loss(outputs, prepared, balanced=balanced)
        if selector == "reconstruction":
            return reconstruction_loss(outputs, prepared, balanced=balanced)
        if selector == "local_cpc":
            return cpc_loss(outputs, exhaustive, None, use_local=True, use_global=False)[0]
        return cpc_loss(outputs, exhaustive, None, use_local=False, use_global=True)[0]

    return closure


def gradient_check(
    model: DynamicGraphModel,
    prepared: PreparedSequence,
    selector: str,
    balanced: bool = True,
    eps: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbs every parameter entry by +/- eps; intended for small instances
    (n <= 8, N <= 4) with the model in float64. Relative error uses
    |a - f| / max(|a|, |f|, 1e-6) so near-zero gradient pairs do not inflate
    the statistic beyond finite-difference noise.
    """
    if next(model.parameters()).dtype != torch.float64:
        raise ValueError("gradient_check requires a float64 model")
    closure = _loss_closure(model, prepared, selector, balanced)
    model.zero_grad()
    closure().backward()
    worst = 0.0
    for param in model.parameters():
        analytic = (
            param.grad.detach().clone()
            if param.grad is not None
            else torch.zeros_like(param)
        )
        flat = param.data.view(-1)
        grad_flat = analytic.view(-1)
        for idx in range(flat.numel()):
            original = flat[idx].item()
            with torch.no_grad():
                flat[idx] = original + eps
                up = closure().item()
                flat[idx] = original - eps
                down = closure().item()
                flat[idx] = original
            fd = (up - down) / (2 * eps)
            a = grad_flat[idx].item()
            denom = max(abs(a), abs(fd), 1e-6)
            worst = max(worst, abs(a - fd) / denom)
    model.zero_grad()
    return worst
