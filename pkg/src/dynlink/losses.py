"""Training objectives: weighted link BCE terms and the local/global
noise-contrastive predictive-coding losses with their negative samplers.

The total objective is  L = L_pred + alpha * L_recon + beta * L_cpc.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import Tensor

from .errors import EmptySupportError
from .model import ForwardOutputs, PreparedSequence

logger = logging.getLogger(__name__)

PROB_EPS = 1e-7

LOCAL_NEG_CATEGORIES = (
    "same-node-different-time",
    "different-node-same-time",
    "different-node-different-time",
)


@dataclass(frozen=True)
class LossWeights:
    """Relative weights of the reconstruction and CPC terms."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("loss weights must be finite")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass(frozen=True)
class NegativeSamplingConfig:
    """Contrastive negative-set size; exhaustive sums over the full set."""

    num_negatives: int = 10
    exhaustive: bool = False


@dataclass(frozen=True)
class ObjectiveConfig:
    """Everything total_loss needs besides the forward outputs."""

    weights: LossWeights = field(default_factory=LossWeights)
    nce: NegativeSamplingConfig = field(default_factory=NegativeSamplingConfig)
    balanced_bce: bool = True
    use_reconstruction: bool = True
    use_local_nce: bool = True
    use_global_nce: bool = True


@dataclass
class LossBreakdown:
    """Total objective plus its logged components (all scalar tensors)."""

    total: Tensor
    prediction: Tensor
    reconstruction: Tensor
    cpc: Tensor
    cpc_local: Tensor
    cpc_global: Tensor

    def values(self) -> dict[str, float]:
        return {
            "total": float(self.total.detach()),
            "prediction": float(self.prediction.detach()),
            "reconstruction": float(self.reconstruction.detach()),
            "cpc": float(self.cpc.detach()),
            "cpc_local": float(self.cpc_local.detach()),
            "cpc_global": float(self.cpc_global.detach()),
        }


@functools.lru_cache(maxsize=32)
def _triu_indices(n: int) -> tuple[Tensor, Tensor]:
    idx = torch.triu_indices(n, n, offset=1)
    return idx[0], idx[1]


def snapshot_pos_weight(A: Tensor) -> float:
    """Class-balance weight (#non-edges / #edges) over unordered pairs."""
    n = A.shape[0]
    pairs = n * (n - 1) / 2
    edges = float(A.sum()) / 2.0
    if edges == 0:
        return 1.0
    return (pairs - edges) / edges


def bce_adjacency(P: Tensor, A: Tensor, pos_weight: float = 1.0) -> Tensor:
    """Binary cross-entropy between a probability matrix and an adjacency.

    Mean over strict upper-triangle pairs of
    -[w * A * log P + (1 - A) * log(1 - P)]; probabilities touching 0/1 are
    clamped at 1e-7 (logged at debug level).
    """
    if P.shape != A.shape:
        raise ValueError(f"shape mismatch: {tuple(P.shape)} vs {tuple(A.shape)}")
    rows, cols = _triu_indices(P.shape[0])
    p = P[rows, cols]
    a = A[rows, cols]
    saturated = int(((p <= 0) | (p >= 1)).sum())
    if saturated:
        logger.debug("clamping %d saturated probabilities at eps=%g", saturated, PROB_EPS)
    p = p.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -(pos_weight * a * torch.log(p) + (1.0 - a) * torch.log(1.0 - p)).mean()


def prediction_loss(
    outputs: ForwardOutputs, prepared: PreparedSequence, balanced: bool = True
) -> Tensor:
    """Average next-step BCE over k = 1..N-1: BCE(prediction_k, A_{k+1})."""
    if prepared.N < 2:
        raise ValueError("prediction loss needs N >= 2")
    terms = []
    for k in range(1, prepared.N):
        target = prepared.A[k]
        w = snapshot_pos_weight(target) if balanced else 1.0
        terms.append(bce_adjacency(outputs.predictions[k - 1], target, w))
    return torch.stack(terms).mean()


def reconstruction_loss(
    outputs: ForwardOutputs, prepared: PreparedSequence, balanced: bool = True
) -> Tensor:
    """Average same-step BCE over k = 1..N: BCE(reconstruction_k, A_k)."""
    terms = []
    for k in range(1, prepared.N + 1):
        target = prepared.A[k - 1]
        w = snapshot_pos_weight(target) if balanced else 1.0
        terms.append(bce_adjacency(outputs.reconstructions[k - 1], target, w))
    return torch.stack(terms).mean()


@dataclass(frozen=True)
class LocalNegativeSet:
    """Drawn (node, step) negatives for one anchor, with category tags."""

    anchor: tuple[int, int]  # (node i, step l), l 1-based
    samples: tuple[tuple[int, int], ...]
    categories: tuple[str, ...]


@dataclass(frozen=True)
class GlobalNegativeSet:
    """Drawn step negatives for one anchor step."""

    anchor: int
    samples: tuple[int, ...]


def local_negative_population(n_nodes: int, n_steps: int) -> int:
    """Size of the local negative set: every (node, step) except the anchor."""
    return n_nodes * n_steps - 1


def _categorize(i: int, l: int, node: int, step: int) -> str:
    if node == i:
        return LOCAL_NEG_CATEGORIES[0]
    if step == l:
        return LOCAL_NEG_CATEGORIES[1]
    return LOCAL_NEG_CATEGORIES[2]


def sample_local_negatives(
    i: int, l: int, n_steps: int, n_nodes: int, budget: int, rng: np.random.Generator
) -> LocalNegativeSet:
    """Uniform draws without replacement from the anchor's negative set.

    The set excludes exactly the anchor (i, l) itself and partitions into the
    three tag categories (same node/different time, different node/same time,
    different node/different time).
    """
    if not 1 <= l <= n_steps:
        raise ValueError(f"anchor step {l} outside 1..{n_steps}")
    if not 0 <= i < n_nodes:
        raise ValueError(f"anchor node {i} outside 0..{n_nodes - 1}")
    population = local_negative_population(n_nodes, n_steps)
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if budget > population:
        raise ValueError(f"budget {budget} exceeds negative-set size {population}")
    anchor_flat = (l - 1) * n_nodes + i
    draws = rng.choice(population, size=budget, replace=False)
    flat = draws + (draws >= anchor_flat)
    nodes = flat % n_nodes
    steps = flat // n_nodes + 1
    samples = tuple(zip(nodes.tolist(), steps.tolist()))
    categories = tuple(_categorize(i, l, node, step) for node, step in samples)
    return LocalNegativeSet(anchor=(i, l), samples=samples, categories=categories)


def sample_global_negatives(
    l: int, n_steps: int, budget: int, rng: np.random.Generator
) -> GlobalNegativeSet:
    """Uniform subset of {1..N} \\ {l}; budget = N-1 yields the full set."""
    if n_steps < 2:
        raise EmptySupportError("no negative steps exist when N = 1")
    if not 1 <= l <= n_steps:
        raise ValueError(f"anchor step {l} outside 1..{n_steps}")
    if budget < 1 or budget > n_steps - 1:
        raise ValueError(f"budget {budget} outside 1..{n_steps - 1}")
    others = np.array([s for s in range(1, n_steps + 1) if s != l])
    picked = rng.choice(others, size=budget, replace=False)
    return GlobalNegativeSet(anchor=l, samples=tuple(int(s) for s in picked))


def sample_local_negative_indices(
    n_nodes: int, n_steps: int, l: int, budget: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized per-anchor draws for all nodes at step l.

    Returns an (n_nodes, budget) array of flat indices into the (N*n, d)
    stack of structural embeddings (flat = (step-1)*n + node), each row a
    uniform without-replacement sample excluding that row's anchor.
    """
    population = local_negative_population(n_nodes, n_steps)
    if budget > population:
        raise ValueError(f"budget {budget} exceeds negative-set size {population}")
    if population <= 2048 or budget * 2 > population:
        keys = rng.random((n_nodes, population))
        draws = np.argpartition(keys, budget - 1, axis=1)[:, :budget]
    else:
        # Rejection on duplicate rows: conditioned on distinctness the draw
        # is exactly uniform without replacement.
        draws = rng.integers(0, population, size=(n_nodes, budget))
        while True:
            ordered = np.sort(draws, axis=1)
            bad = (ordered[:, 1:] == ordered[:, :-1]).any(axis=1)
            if not bad.any():
                break
            draws[bad] = rng.integers(0, population, size=(int(bad.sum()), budget))
    anchors = (l - 1) * n_nodes + np.arange(n_nodes)
    return draws + (draws >= anchors[:, None])


def local_nce(
    predicted: Tensor, target: Tensor, z_flat: Tensor, negatives: np.ndarray | None
) -> Tensor:
    """Node-level infoNCE: softmax cross-entropy of the positive pair
    (predicted[i], target[i]) against negative pairs (predicted[i], z_flat[j]).

    negatives is an (n, K) index array into z_flat, or None to sum over the
    entire (N*n)-row stack (whose anchor rows are the positives themselves).
    """
    pos = (predicted * target).sum(dim=1)
    if negatives is None:
        logits = predicted @ z_flat.T
        lse = torch.logsumexp(logits, dim=1)
    else:
        if negatives.size == 0:
            raise EmptySupportError("local NCE requires at least one negative per node")
        idx = torch.as_tensor(negatives, dtype=torch.long)
        neg_scores = torch.einsum("nd,nkd->nk", predicted, z_flat[idx])
        lse = torch.logsumexp(torch.cat([pos.unsqueeze(1), neg_scores], dim=1), dim=1)
    return (lse - pos).mean()


def global_nce(predicted: Tensor, target: Tensor, negatives: Tensor) -> Tensor:
    """Graph-level infoNCE of one positive pair against negative graph embeddings."""
    if negatives.numel() == 0:
        raise EmptySupportError("global NCE requires at least one negative")
    pos = predicted @ target
    neg_scores = negatives @ predicted
    lse = torch.logsumexp(torch.cat([pos.unsqueeze(0), neg_scores]), dim=0)
    return lse - pos


def cpc_loss(
    outputs: ForwardOutputs,
    nce: NegativeSamplingConfig,
    rng: np.random.Generator,
    use_local: bool = True,
    use_global: bool = True,
) -> tuple[Tensor, Tensor, Tensor]:
    """Contrastive predictive-coding loss over all (context k, future l) pairs:

        (1 / (N-1)) * sum_{k=1}^{N-1} sum_{l=k+1}^{N} [localNCE + globalNCE]

    Returns (total, local part, global part). Negative sets are drawn fresh
    per (k, l) pair from the provided stream unless exhaustive.
    """
    N, n = outputs.N, outputs.n
    if N < 2:
        raise ValueError("CPC loss needs N >= 2")
    Z = torch.stack(outputs.structural)  # (N, n, d_enc)
    z_flat = Z.reshape(N * n, -1)
    z_graph = Z.mean(dim=1)  # (N, d_enc) graph-level structural embeddings
    zero = Z.new_zeros(())
    local_total, global_total = zero, zero
    for k in range(1, N):
        for l in range(k + 1, N + 1):
            if use_local:
                if nce.exhaustive:
                    negatives = None
                else:
                    negatives = sample_local_negative_indices(n, N, l, nce.num_negatives, rng)
                local_total = local_total + local_nce(
                    outputs.local_predictions[(k, l)], Z[l - 1], z_flat, negatives
                )
            if use_global:
                if nce.exhaustive:
                    neg_steps: tuple[int, ...] = tuple(s for s in range(1, N + 1) if s != l)
                else:
                    budget = min(nce.num_negatives, N - 1)
                    neg_steps = sample_global_negatives(l, N, budget, rng).samples
                neg_idx = torch.as_tensor(neg_steps, dtype=torch.long) - 1
                global_total = global_total + global_nce(
                    outputs.global_predictions[(k, l)], z_graph[l - 1], z_graph[neg_idx]
                )
    local_part = local_total / (N - 1)
    global_part = global_total / (N - 1)
    return local_part + global_part, local_part, global_part


def total_loss(
    outputs: ForwardOutputs,
    prepared: PreparedSequence,
    config: ObjectiveConfig,
    rng: np.random.Generator,
) -> LossBreakdown:
    """Weighted sum L = L_pred + alpha * L_recon + beta * L_cpc with components."""
    pred = prediction_loss(outputs, prepared, balanced=config.balanced_bce)
    zero = pred.new_zeros(())
    recon = (
        reconstruction_loss(outputs, prepared, balanced=config.balanced_bce)
        if config.use_reconstruction
        else zero
    )
    if config.use_local_nce or config.use_global_nce:
        cpc, cpc_local, cpc_global = cpc_loss(
            outputs,
            config.nce,
            rng,
            use_local=config.use_local_nce,
            use_global=config.use_global_nce,
        )
    else:
        cpc, cpc_local, cpc_global = zero, zero, zero
    total = pred + config.weights.alpha * recon + config.weights.beta * cpc
    return LossBreakdown(
        total=total,
        prediction=pred,
        reconstruction=recon,
        cpc=cpc,
        cpc_local=cpc_local,
        cpc_global=cpc_global,
    )
