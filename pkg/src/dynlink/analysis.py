"""Dataset diagnostics: temporal correlation coefficient, edge/time
randomization null models, and the per-step density series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .data import SnapshotSequence
from .errors import ImpossibleRewireError

# Config-visible names of the implemented randomization flavors.
RE_FLAVOR = "edge-resample"  # per-snapshot uniform simple-graph rewiring
RP_FLAVOR = "frame-permutation"  # uniform permutation of snapshot order


def temporal_correlation(seq: SnapshotSequence) -> tuple[float, np.ndarray]:
    """Mean neighborhood overlap of consecutive snapshots.

    Per node i the coefficient averages, over consecutive step pairs,
    sum_j A_k[i,j] A_{k+1}[i,j] / sqrt(deg_k(i) * deg_{k+1}(i)), with the
    0/0 convention -> 0 when the node is isolated in either snapshot.
    Returns (mean over nodes, per-node coefficients).
    """
    if seq.N < 2:
        raise ValueError("temporal correlation needs N >= 2")
    stack = seq.adjacency_stack()
    overlap = (stack[:-1] * stack[1:]).sum(axis=2)  # (N-1, n)
    degrees = stack.sum(axis=2)
    denom = np.sqrt(degrees[:-1] * degrees[1:])
    terms = np.divide(overlap, denom, out=np.zeros_like(overlap, dtype=np.float64), where=denom > 0)
    per_node = terms.mean(axis=0)
    return float(per_node.mean()), per_node


def randomize_edges(seq: SnapshotSequence, rng: np.random.Generator) -> SnapshotSequence:
    """RE null model: resample each snapshot's edge set uniformly at random
    among node pairs, preserving the per-snapshot edge count, simplicity, and
    undirectedness. Destroys structure, preserves per-step activity."""
    n = seq.n
    total_pairs = n * (n - 1) // 2
    rows, cols = np.triu_indices(n, k=1)
    snapshots = []
    for snap in seq.snapshots:
        m = snap.edge_count
        if m > total_pairs:
            raise ImpossibleRewireError(f"{m} edges exceed {total_pairs} simple pairs")
        A = np.zeros_like(snap.A)
        if m > 0:
            picked = rng.choice(total_pairs, size=m, replace=False)
            A[rows[picked], cols[picked]] = 1.0
            A = A + A.T
        snapshots.append(replace(snap, A=A))
    return SnapshotSequence(snapshots, delta_t=seq.delta_t, feature_scheme=seq.feature_scheme)


def permute_times(seq: SnapshotSequence, rng: np.random.Generator) -> SnapshotSequence:
    """RP null model (frame permutation): reassign snapshot order uniformly
    at random. Every edge occurrence moves to a uniformly random step while
    the multiset of per-step topologies (hence the total occurrence count)
    is exactly preserved. Destroys temporal order."""
    if seq.N < 2:
        raise ValueError("time permutation needs N >= 2")
    order = rng.permutation(seq.N)
    snapshots = [
        replace(seq.snapshots[src], index=k) for k, src in enumerate(order.tolist(), start=1)
    ]
    return SnapshotSequence(snapshots, delta_t=seq.delta_t, feature_scheme=seq.feature_scheme)


def density_series(seq: SnapshotSequence) -> list[float]:
    """Per-step edge density |E_k| / C(n, 2)."""
    if seq.n < 2:
        raise ValueError("density needs at least two nodes")
    total_pairs = seq.n * (seq.n - 1) / 2
    return [snap.edge_count / total_pairs for snap in seq.snapshots]


@dataclass
class NullModelReport:
    """Original temporal correlation against RE/RP null distributions."""

    original: float
    re_samples: np.ndarray
    rp_samples: np.ndarray

    @property
    def sample_count(self) -> int:
        return len(self.re_samples)

    @staticmethod
    def _quantiles(values: np.ndarray) -> dict[str, float]:
        qs = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
        return dict(zip(("min", "q1", "median", "q3", "max"), (float(v) for v in qs)))

    def summary(self) -> dict:
        return {
            "original": self.original,
            "samples": self.sample_count,
            "null_models": {
                "RE": {"flavor": RE_FLAVOR, **self._quantiles(self.re_samples)},
                "RP": {"flavor": RP_FLAVOR, **self._quantiles(self.rp_samples)},
            },
        }

    def to_json(self) -> str:
        payload = dict(self.summary())
        payload["null_models"] = {
            name: dict(stats) for name, stats in payload["null_models"].items()
        }
        payload["re_values"] = [float(v) for v in self.re_samples]
        payload["rp_values"] = [float(v) for v in self.rp_samples]
        return json.dumps(payload, indent=2, sort_keys=True)


def null_model_report(
    seq: SnapshotSequence, samples: int, rng: np.random.Generator
) -> NullModelReport:
    """Temporal correlation of the data against `samples` draws from each
    null model, with box-plot quantiles in the summary."""
    if samples < 1:
        raise ValueError("need at least one null sample")
    original, _ = temporal_correlation(seq)
    re_vals = np.array([temporal_correlation(randomize_edges(seq, rng))[0] for _ in range(samples)])
    rp_vals = np.array([temporal_correlation(permute_times(seq, rng))[0] for _ in range(samples)])
    return NullModelReport(original=original, re_samples=re_vals, rp_samples=rp_vals)
