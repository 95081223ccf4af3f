"""Temporal-network data model: events, snapshot discretization, features, splits.

A temporal network is a fixed node set plus a time-ordered list of pairwise
interaction events. Discretization projects the events onto N equal-width
intervals, producing a sequence of static snapshots with binary symmetric
adjacency matrices and per-snapshot node features.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import EdgeListParseError, EmptyInputError, SplitError

logger = logging.getLogger(__name__)

FEATURE_SCHEMES = ("identity", "degree")


@dataclass(frozen=True)
class Event:
    """One undirected interaction (src, dst) at time t, with src < dst."""

    src: int
    dst: int
    t: float

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"self-interaction ({self.src}, {self.dst}) is not allowed")
        if self.src < 0 or self.dst < 0:
            raise ValueError("node indices must be nonnegative")
        if self.t < 0:
            raise ValueError(f"event time must be nonnegative, got {self.t}")
        if self.src > self.dst:
            lo, hi = self.dst, self.src
            object.__setattr__(self, "src", lo)
            object.__setattr__(self, "dst", hi)


@dataclass
class TemporalNetwork:
    """Node count plus events sorted by time (sorted on construction)."""

    n: int
    events: list[Event]
    node_feature_dim: int = 0
    edge_feature_dim: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be >= 1, got {self.n}")
        for ev in self.events:
            if ev.dst >= self.n:
                raise ValueError(f"event {ev} references node >= n={self.n}")
        self.events = sorted(self.events, key=lambda ev: ev.t)

    @property
    def m(self) -> int:
        return len(self.events)

    @property
    def span(self) -> tuple[float, float]:
        if not self.events:
            raise EmptyInputError("network has no events")
        return self.events[0].t, self.events[-1].t


@dataclass
class Snapshot:
    """Static graph at one step: binary symmetric adjacency + node features."""

    A: np.ndarray
    X: np.ndarray
    index: int  # 1-based position in the sequence

    def __post_init__(self):
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {self.A.shape}")
        if self.X.shape[0] != self.A.shape[0]:
            raise ValueError("feature row count must equal node count")
        if np.any(self.A != self.A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(self.A) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if self.index < 1:
            raise ValueError("snapshot index is 1-based")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.A.sum()) // 2

    def edge_set(self) -> set[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.A, 1))
        return set(zip(i.tolist(), j.tolist()))


@dataclass
class SnapshotSequence:
    """Ordered snapshots sharing one node set; delta_t is the bin width."""

    snapshots: list[Snapshot]
    delta_t: float = 1.0
    feature_scheme: str = "identity"

    def __post_init__(self):
        if not self.snapshots:
            raise EmptyInputError("snapshot sequence must not be empty")
        n = self.snapshots[0].n
        d = self.snapshots[0].X.shape[1]
        for snap in self.snapshots:
            if snap.n != n or snap.X.shape[1] != d:
                raise ValueError("all snapshots must share n and feature dim")

    @property
    def N(self) -> int:
        return len(self.snapshots)

    @property
    def n(self) -> int:
        return self.snapshots[0].n

    @property
    def feature_dim(self) -> int:
        return self.snapshots[0].X.shape[1]

    @property
    def total_edges(self) -> int:
        return sum(s.edge_count for s in self.snapshots)

    def adjacency_stack(self) -> np.ndarray:
        return np.stack([s.A for s in self.snapshots])

    def prefix(self, length: int) -> "SnapshotSequence":
        if not 1 <= length <= self.N:
            raise ValueError(f"prefix length {length} outside 1..{self.N}")
        return SnapshotSequence(self.snapshots[:length], self.delta_t, self.feature_scheme)


def _parse_edge_line(line: str, line_number: int) -> tuple[str, str, float]:
    fields = line.split(",") if "," in line else line.split()
    if len(fields) < 3:
        raise EdgeListParseError(f"expected 'src dst t', got {line.strip()!r}", line_number)
    src, dst, raw_t = fields[0].strip(), fields[1].strip(), fields[2].strip()
    try:
        t = float(raw_t)
    except ValueError:
        raise EdgeListParseError(f"timestamp {raw_t!r} is not a number", line_number) from None
    if not math.isfinite(t) or t < 0:
        raise EdgeListParseError(f"timestamp {t} must be finite and nonnegative", line_number)
    return src, dst, t


def load_edge_list(path, undirected: bool = True) -> TemporalNetwork:
    """Parse a whitespace- or comma-separated edge list into a TemporalNetwork.

    One record per line: ``src dst t``; ``#``-prefixed lines are comments.
    Node labels are densified to 0..n-1 (numeric order when every label is an
    integer, else lexicographic). Undirected duplicates within one timestamp
    are removed; self-loop records are dropped with a warning.
    """
    if not undirected:
        raise ValueError("directed datasets are not supported; graphs are undirected")
    records: list[tuple[str, str, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            records.append(_parse_edge_line(stripped, line_number))

    self_loops = sum(1 for src, dst, _ in records if src == dst)
    if self_loops:
        logger.warning("dropping %d self-loop record(s)", self_loops)
        records = [r for r in records if r[0] != r[1]]
    if not records:
        raise EmptyInputError(f"no events found in {path}")

    labels = {lab for src, dst, _ in records for lab in (src, dst)}
    try:
        ordered = sorted(labels, key=int)
    except ValueError:
        ordered = sorted(labels)
    index = {lab: i for i, lab in enumerate(ordered)}

    seen: set[tuple[int, int, float]] = set()
    events: list[Event] = []
    for src, dst, t in records:
        i, j = index[src], index[dst]
        key = (min(i, j), max(i, j), t)
        if key in seen:
            continue
        seen.add(key)
        events.append(Event(key[0], key[1], t))
    return TemporalNetwork(n=len(ordered), events=events)


def identity_features(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.float64)


def discretize(net: TemporalNetwork, n_steps: int) -> SnapshotSequence:
    """Project events onto n_steps equal-width intervals (closed-left bins).

    Times are shifted so the first event is at 0; an event with shifted time
    tau lands in snapshot floor(tau/delta_t)+1, except the final boundary
    tau = N*delta_t which lands in snapshot N. A zero-duration network puts
    every event in snapshot 1 and leaves the rest empty.
    """
    if n_steps <= 0:
        raise ValueError(f"number of snapshots must be positive, got {n_steps}")
    if not net.events:
        raise EmptyInputError("cannot discretize a network with no events")

    t_first, t_last = net.span
    span = t_last - t_first
    delta_t = span / n_steps
    edge_sets: list[set[tuple[int, int]]] = [set() for _ in range(n_steps)]
    for ev in net.events:
        if span == 0.0:
            bin_index = 0
        else:
            bin_index = min(int((ev.t - t_first) // delta_t), n_steps - 1)
        edge_sets[bin_index].add((ev.src, ev.dst))

    X = identity_features(net.n)
    snapshots = []
    for k, edges in enumerate(edge_sets, start=1):
        A = np.zeros((net.n, net.n), dtype=np.float64)
        for i, j in edges:
            A[i, j] = A[j, i] = 1.0
        snapshots.append(Snapshot(A=A, X=X, index=k))
    return SnapshotSequence(snapshots, delta_t=delta_t, feature_scheme="identity")


def sequence_from_adjacency(stack: np.ndarray, delta_t: float = 1.0) -> SnapshotSequence:
    """Build a sequence from an (N, n, n) binary adjacency stack."""
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"expected (N, n, n) stack, got shape {stack.shape}")
    X = identity_features(stack.shape[1])
    snapshots = [
        Snapshot(A=np.asarray(A, dtype=np.float64), X=X, index=k)
        for k, A in enumerate(stack, start=1)
    ]
    return SnapshotSequence(snapshots, delta_t=delta_t, feature_scheme="identity")


def make_node_features(seq: SnapshotSequence, scheme: str) -> SnapshotSequence:
    """Attach node features: 'identity' (one-hot) or 'degree' (normalized)."""
    if scheme not in FEATURE_SCHEMES:
        raise ValueError(f"unknown feature scheme {scheme!r}; choose from {FEATURE_SCHEMES}")
    if scheme == "identity":
        X = identity_features(seq.n)
        snapshots = [replace(s, X=X) for s in seq.snapshots]
    else:
        denom = max(seq.n - 1, 1)
        snapshots = [
            replace(s, X=(s.A.sum(axis=1, keepdims=True) / denom)) for s in seq.snapshots
        ]
    return SnapshotSequence(snapshots, delta_t=seq.delta_t, feature_scheme=scheme)


def split_train_test(
    seq: SnapshotSequence, n_test: int = 3
) -> tuple[SnapshotSequence, list[int]]:
    """Hold out the last n_test snapshots as prediction targets.

    Returns the training prefix and the 1-based indices of the test
    snapshots. Test-time inference may still consume the full history up to
    each test index.
    """
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test}")
    if seq.N <= n_test:
        raise SplitError(f"cannot hold out {n_test} of {seq.N} snapshots")
    train = seq.prefix(seq.N - n_test)
    test_indices = list(range(seq.N - n_test + 1, seq.N + 1))
    return train, test_indices
