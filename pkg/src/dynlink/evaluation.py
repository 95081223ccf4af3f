"""Dynamic-link-prediction evaluation: the four positive/negative regimes,
rank-based AUC, step-sum AP, pooled MRR, multi-run aggregation, and the
paired t-test used for significance reporting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.stats
import torch

from .data import SnapshotSequence
from .errors import (
    DegenerateTestError,
    EmptySupportError,
    RegimeUnavailableError,
    UndefinedMetricError,
)
from .model import DynamicGraphModel, prepare
from .rng import split_run_streams

REGIMES = ("randpos-randneg", "randpos-histneg", "histpos-randneg", "histpos-histneg")
REGIME_LABELS = {
    "randpos-randneg": "Rand-Pos/Rand-Neg",
    "randpos-histneg": "Rand-Pos/Hist-Neg",
    "histpos-randneg": "Hist-Pos/Rand-Neg",
    "histpos-histneg": "Hist-Pos/Hist-Neg",
}
METRICS = ("auc", "ap", "mrr")


@dataclass(frozen=True)
class EvalConfig:
    regimes: tuple[str, ...] = REGIMES
    negative_ratio: float = 1.0
    mrr_pool_size: int = 100
    n_test: int = 3


@dataclass(frozen=True)
class EvalSubset:
    """Positive and negative node pairs for one regime at one test step."""

    regime: str
    step: int  # 1-based index of the snapshot being predicted
    positives: np.ndarray  # (m, 2) int pairs, i < j
    negatives: np.ndarray


def _pairs_array(pairs: set[tuple[int, int]]) -> np.ndarray:
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(sorted(pairs), dtype=np.int64)


def _sample_rows(pool: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    if count >= len(pool):
        return pool
    idx = rng.choice(len(pool), size=count, replace=False)
    return pool[np.sort(idx)]


def _sample_nonedges(
    n: int, forbidden: set[tuple[int, int]], count: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform non-edges (i < j pairs outside `forbidden`) without replacement."""
    allowed = np.triu(np.ones((n, n), dtype=bool), k=1)
    for i, j in forbidden:
        allowed[i, j] = False
    rows, cols = np.nonzero(allowed)
    pool = np.stack([rows, cols], axis=1).astype(np.int64)
    return _sample_rows(pool, count, rng)


def build_eval_subsets(
    seq: SnapshotSequence,
    k: int,
    regime: str,
    ratio: float = 1.0,
    rng: np.random.Generator | None = None,
) -> EvalSubset:
    """Assemble the regime's positives/negatives for predicting step k+1.

    History is snapshots 1..k. Historical positives are edges of step k+1
    seen in history; historical negatives are history edges absent at step
    k+1. Random positives default to the full edge set at step k+1; random
    negatives are sampled non-edges. |negatives| targets ratio * |positives|
    (capped by the available population).
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; choose from {REGIMES}")
    if not 1 <= k < seq.N:
        raise ValueError(f"history length k={k} outside 1..{seq.N - 1}")
    rng = rng if rng is not None else np.random.default_rng(0)
    step = k + 1
    next_edges = seq.snapshots[step - 1].edge_set()
    history: set[tuple[int, int]] = set()
    for snap in seq.snapshots[:k]:
        history |= snap.edge_set()
    hist_pos = next_edges & history
    hist_neg = history - next_edges

    if regime.startswith("histpos"):
        if not hist_pos:
            raise RegimeUnavailableError(regime, step, "no historical positives")
        positives = _pairs_array(hist_pos)
    else:
        if not next_edges:
            raise RegimeUnavailableError(regime, step, "no edges at prediction step")
        positives = _pairs_array(next_edges)

    want = int(round(ratio * len(positives)))
    if regime.endswith("histneg"):
        if not hist_neg:
            raise RegimeUnavailableError(regime, step, "no historical negatives")
        negatives = _sample_rows(_pairs_array(hist_neg), want, rng)
    else:
        negatives = _sample_nonedges(seq.n, next_edges, want, rng)
        if len(negatives) == 0:
            raise RegimeUnavailableError(regime, step, "no non-edges at prediction step")
    return EvalSubset(regime=regime, step=step, positives=positives, negatives=negatives)


def auc(scores, labels) -> float:
    """Rank-statistic AUC: P(score_pos > score_neg) + 0.5 * P(tie)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = scipy.stats.rankdata(scores)  # average ranks on ties
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def ap(scores, labels) -> float:
    """Average precision: sum_b (Rec_b - Rec_{b-1}) * Prec_b over descending
    unique score thresholds, with Rec_0 = 0 (and the Prec_0 = 1 convention)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise UndefinedMetricError("AP needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels == 1)
    predicted = np.arange(1, len(scores) + 1)
    # Threshold boundaries: last element of each tied-score group.
    boundary = np.nonzero(np.diff(sorted_scores, append=np.inf) != 0)[0]
    recall = tp[boundary] / n_pos
    precision = tp[boundary] / predicted[boundary]
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


def mrr(pos_scores, neg_pools) -> float:
    """Mean reciprocal rank of each positive within {it} + its negative pool,
    ranked descending with rank-averaging on ties."""
    if len(pos_scores) == 0:
        raise UndefinedMetricError("MRR needs at least one positive")
    reciprocal = []
    for score, pool in zip(pos_scores, neg_pools):
        pool = np.asarray(pool, dtype=np.float64)
        if pool.size == 0:
            raise EmptySupportError("each positive needs at least one candidate negative")
        rank = 1.0 + (pool > score).sum() + 0.5 * (pool == score).sum()
        reciprocal.append(1.0 / rank)
    return float(np.mean(reciprocal))


@dataclass(frozen=True)
class MetricRecord:
    regime: str
    step: int
    seed: int
    metric: str
    value: float | None


@dataclass
class MetricsReport:
    """Per regime/step/run metric records plus mean +/- std aggregates."""

    records: list[MetricRecord] = field(default_factory=list)

    def per_run(self, regime: str, metric: str) -> dict[int, float]:
        """Mean over test steps for each run seed (skipping unavailable steps)."""
        by_seed: dict[int, list[float]] = {}
        for rec in self.records:
            if rec.regime == regime and rec.metric == metric and rec.value is not None:
                by_seed.setdefault(rec.seed, []).append(rec.value)
        return {seed: float(np.mean(vals)) for seed, vals in sorted(by_seed.items())}

    def aggregate(self) -> dict[str, dict[str, tuple[float, float] | None]]:
        """(mean, std) over runs of the per-run step-averaged metric.

        std uses ddof=0 so a single run reports 0. Regimes with no available
        steps aggregate to None.
        """
        out: dict[str, dict[str, tuple[float, float] | None]] = {}
        seen = {rec.regime for rec in self.records}
        regimes = [r for r in REGIMES if r in seen] + sorted(seen - set(REGIMES))
        for regime in regimes:
            out[regime] = {}
            for metric in METRICS:
                runs = self.per_run(regime, metric)
                if not runs:
                    out[regime][metric] = None
                    continue
                vals = np.array(list(runs.values()))
                out[regime][metric] = (float(vals.mean()), float(vals.std(ddof=0)))
        return out

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(
                    json.dumps(
                        {
                            "regime": rec.regime,
                            "step": rec.step,
                            "seed": rec.seed,
                            "metric": rec.metric,
                            "value": rec.value,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )

    def summary_json(self) -> str:
        agg = self.aggregate()
        payload = {
            regime: {
                metric: None if pair is None else {"mean": pair[0], "std": pair[1]}
                for metric, pair in metrics.items()
            }
            for regime, metrics in agg.items()
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def format_table(self) -> str:
        agg = self.aggregate()
        lines = [f"{'Regime':<22} {'AUC':>16} {'AP':>16} {'MRR':>16}"]
        for regime, metrics in agg.items():
            cells = []
            for metric in METRICS:
                pair = metrics[metric]
                cells.append(
                    "unavailable" if pair is None else f"{100 * pair[0]:.2f} +/- {100 * pair[1]:.2f}"
                )
            label = REGIME_LABELS.get(regime, regime)
            lines.append(f"{label:<22} {cells[0]:>16} {cells[1]:>16} {cells[2]:>16}")
        return "\n".join(lines)


def evaluate_model_run(
    model: DynamicGraphModel,
    seq: SnapshotSequence,
    test_indices: list[int],
    config: EvalConfig,
    seed: int,
) -> list[MetricRecord]:
    """Score one trained model over all test steps and regimes.

    For each test step t the model sees only snapshots 1..t-1; subset pairs
    are scored through the next-step prediction head. Unavailable regimes
    are recorded as null values.
    """
    rng = split_run_streams(seed).evaluation
    dtype = next(model.parameters()).dtype
    prepared = prepare(seq, dtype)
    records: list[MetricRecord] = []
    model.eval()
    with torch.no_grad():
        for t in test_indices:
            k = t - 1
            if k < 1:
                raise ValueError(f"test step {t} has no history to condition on")
            S = model.infer(prepared.prefix(k))
            for regime in config.regimes:
                try:
                    subset = build_eval_subsets(seq, k, regime, config.negative_ratio, rng)
                except RegimeUnavailableError:
                    for metric in METRICS:
                        records.append(MetricRecord(regime, t, seed, metric, None))
                    continue
                pos_scores = model.score_pairs(S, subset.positives).numpy()
                neg_scores = model.score_pairs(S, subset.negatives).numpy()
                scores = np.concatenate([pos_scores, neg_scores])
                labels = np.concatenate(
                    [np.ones(len(pos_scores), dtype=int), np.zeros(len(neg_scores), dtype=int)]
                )
                pools = _mrr_pools(neg_scores, len(pos_scores), config.mrr_pool_size, rng)
                values = {
                    "auc": auc(scores, labels),
                    "ap": ap(scores, labels),
                    "mrr": mrr(pos_scores, pools),
                }
                for metric in METRICS:
                    records.append(MetricRecord(regime, t, seed, metric, values[metric]))
    return records


def _mrr_pools(
    neg_scores: np.ndarray, n_pos: int, pool_size: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Per-positive candidate pools sampled from the regime's negatives."""
    if len(neg_scores) <= pool_size:
        return [neg_scores] * n_pos
    return [
        neg_scores[rng.choice(len(neg_scores), size=pool_size, replace=False)]
        for _ in range(n_pos)
    ]


def evaluate(
    models: list[tuple[DynamicGraphModel, int]],
    seq: SnapshotSequence,
    test_indices: list[int],
    config: EvalConfig = EvalConfig(),
) -> MetricsReport:
    """Evaluate several independently trained runs and aggregate them."""
    report = MetricsReport()
    for model, seed in models:
        report.records.extend(evaluate_model_run(model, seq, test_indices, config, seed))
    return report


def paired_t_test(sample_a, sample_b) -> tuple[float, float]:
    """Two-sided paired t-test on matched samples.

    Returns (t, p) with p from the Student-t CDF at n-1 degrees of freedom.
    Raises DegenerateTestError when the differences have zero variance.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("paired t-test needs two equal-length 1-D samples of size >= 2")
    diff = a - b
    sd = diff.std(ddof=1)
    if sd == 0:
        raise DegenerateTestError("differences have zero variance")
    t = diff.mean() / (sd / np.sqrt(len(diff)))
    p = 2.0 * scipy.stats.t.sf(abs(t), df=len(diff) - 1)
    return float(t), float(p)
