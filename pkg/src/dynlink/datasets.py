"""Dataset manifests, canonical snapshot containers, and a built-in
synthetic benchmark for demos and tests.

Raw datasets are either event lists (``src dst t`` text) or pre-discretized
adjacency stacks (.npz with an ``adjacency`` array). The canonical container
written by ingestion is a versioned .npz holding the adjacency stack, bin
width, and feature scheme.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    Event,
    SnapshotSequence,
    TemporalNetwork,
    discretize,
    load_edge_list,
    make_node_features,
    sequence_from_adjacency,
)

CONTAINER_FORMAT_VERSION = 1

DATA_ROOT_ENV = "DYNLINK_DATA"


@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset lives and how to turn it into a snapshot sequence."""

    name: str
    path: str
    format: str  # "events" | "snapshots"
    n_steps: int | None = None  # bin count for event data
    undirected: bool = True
    feature_scheme: str = "identity"
    alpha: float = 1.0  # per-dataset default loss weights
    beta: float = 1.0
    expected_nodes: int | None = None
    expected_total_edges: int | None = None

    def __post_init__(self):
        if self.format not in ("events", "snapshots"):
            raise ValueError(f"manifest format must be events|snapshots, got {self.format!r}")


# Benchmark manifests; the raw files must be placed under the data root
# (see README for sources and conversion). Expected stats guard ingestion.
BUILTIN_MANIFESTS = {
    "enron": DatasetManifest(
        name="enron",
        path="enron.events",
        format="events",
        n_steps=11,
        alpha=1.0,
        beta=1.0,
        expected_nodes=184,
        expected_total_edges=4784,
    ),
    "colab": DatasetManifest(
        name="colab",
        path="colab.events",
        format="events",
        n_steps=10,
        alpha=2.0,
        beta=4.0,
        expected_nodes=315,
        expected_total_edges=5104,
    ),
    "facebook": DatasetManifest(
        name="facebook",
        path="facebook.events",
        format="events",
        n_steps=9,
        alpha=4.0,
        beta=2.0,
        expected_nodes=663,
        expected_total_edges=23394,
    ),
    "synthetic": DatasetManifest(
        name="synthetic",
        path="synthetic.events",
        format="events",
        n_steps=8,
        alpha=1.0,
        beta=1.0,
    ),
}

SYNTHETIC_SEED = 7
SYNTHETIC_NODES = 40
SYNTHETIC_STEPS = 8


def data_root(override: str | None = None) -> Path:
    if override:
        return Path(override)
    return Path(os.environ.get(DATA_ROOT_ENV, "data"))


def resolve_manifest(dataset: str, root: Path | None = None) -> DatasetManifest:
    """Look up a builtin manifest, or read `<dataset>` as a manifest JSON path.

    For builtins, when the raw event file is absent but a pre-discretized
    adjacency stack `<name>.npz` sits under the data root, the manifest is
    switched to snapshots mode (public copies circulate in both forms).
    """
    if dataset in BUILTIN_MANIFESTS:
        manifest = BUILTIN_MANIFESTS[dataset]
        if root is not None:
            stack = root / f"{dataset}.npz"
            if not (root / manifest.path).exists() and stack.exists():
                manifest = dataclasses.replace(manifest, path=str(stack), format="snapshots")
        return manifest
    path = Path(dataset)
    if path.suffix == ".json" and path.exists():
        with open(path, "r", encoding="utf-8") as fh:
            return DatasetManifest(**json.load(fh))
    raise FileNotFoundError(
        f"unknown dataset {dataset!r}: not a builtin ({', '.join(sorted(BUILTIN_MANIFESTS))}) "
        "and not a manifest JSON path"
    )


def synthetic_sequence(
    n_nodes: int = SYNTHETIC_NODES,
    n_steps: int = SYNTHETIC_STEPS,
    seed: int = SYNTHETIC_SEED,
    churn: float = 0.15,
    birth: float = 0.04,
    noise: float = 0.004,
) -> SnapshotSequence:
    """Two persistent communities whose intra-community edges churn slowly.

    The edge set evolves as a Markov chain (drop with prob `churn`, add
    inactive intra-community pairs with prob `birth`, sparse cross-community
    noise), so consecutive snapshots overlap strongly: recurring edges make
    the historical regimes meaningful and the temporal correlation clearly
    exceeds its null models.
    """
    rng = np.random.default_rng(seed)
    half = n_nodes // 2
    community = np.array([0] * half + [1] * (n_nodes - half))
    intra = [
        (i, j)
        for i in range(n_nodes)
        for j in range(i + 1, n_nodes)
        if community[i] == community[j]
    ]
    inter = [
        (i, j)
        for i in range(n_nodes)
        for j in range(i + 1, n_nodes)
        if community[i] != community[j]
    ]
    active = {pair for pair in intra if rng.random() < 0.3}
    stack = np.zeros((n_steps, n_nodes, n_nodes), dtype=np.float64)
    for k in range(n_steps):
        active = {pair for pair in active if rng.random() >= churn}
        active |= {pair for pair in intra if pair not in active and rng.random() < birth}
        edges = set(active)
        edges |= {pair for pair in inter if rng.random() < noise}
        for i, j in edges:
            stack[k, i, j] = stack[k, j, i] = 1.0
    return sequence_from_adjacency(stack, delta_t=1.0)


def events_from_sequence(seq: SnapshotSequence, rng: np.random.Generator) -> list[Event]:
    """Materialize a sequence as events whose uniform re-discretization with
    the same N reproduces the sequence exactly.

    Bin k's events get times k-1 + u with u in [0, 0.89]; one event is pinned
    at t = 0 and one at the final boundary region so the span is exact.
    """
    first_edges = sorted(seq.snapshots[0].edge_set())
    last_edges = sorted(seq.snapshots[-1].edge_set())
    if not first_edges or not last_edges:
        raise ValueError("first and last snapshots must be nonempty to pin the span")
    events: list[Event] = []
    for k, snap in enumerate(seq.snapshots):
        for i, j in sorted(snap.edge_set()):
            events.append(Event(i, j, k + float(rng.uniform(0.0, 0.89))))
    # Pin the span: earliest event at exactly 0, latest near the end of the
    # last bin, so delta_t = (t_m - t_1)/N keeps every bin boundary inside
    # the 0.89..1.0 gap of its interval.
    i0, j0 = first_edges[0]
    events = [ev for ev in events if not (ev.src == i0 and ev.dst == j0 and ev.t < 1.0)]
    events.append(Event(i0, j0, 0.0))
    i1, j1 = last_edges[-1]
    events = [
        ev for ev in events if not (ev.src == i1 and ev.dst == j1 and ev.t >= len(seq.snapshots) - 1)
    ]
    events.append(Event(i1, j1, len(seq.snapshots) - 1 + 0.9))
    return sorted(events, key=lambda ev: ev.t)


def write_event_file(path, events: list[Event]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# src dst t\n")
        for ev in events:
            fh.write(f"{ev.src} {ev.dst} {ev.t!r}\n")


def generate_synthetic_events(path, seed: int = SYNTHETIC_SEED) -> None:
    """Write the builtin synthetic dataset as an event-list file."""
    seq = synthetic_sequence(seed=seed)
    rng = np.random.default_rng(seed + 1)
    write_event_file(path, events_from_sequence(seq, rng))


def load_raw(manifest: DatasetManifest, root: Path) -> SnapshotSequence:
    """Load a dataset per its manifest (raw events or adjacency stack)."""
    path = Path(manifest.path)
    if not path.is_absolute():
        path = root / path
    if manifest.name == "synthetic" and not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        generate_synthetic_events(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file {path} not found (see README for sources)")
    if manifest.format == "events":
        if manifest.n_steps is None:
            raise ValueError(f"manifest {manifest.name!r} needs n_steps for event data")
        net: TemporalNetwork = load_edge_list(path, undirected=manifest.undirected)
        seq = discretize(net, manifest.n_steps)
    else:
        with np.load(path) as bundle:
            stack = bundle["adjacency"].astype(np.float64)
            delta_t = float(bundle["delta_t"]) if "delta_t" in bundle else 1.0
        seq = sequence_from_adjacency(stack, delta_t=delta_t)
    seq = make_node_features(seq, manifest.feature_scheme)
    _check_expected_stats(manifest, seq)
    return seq


def _check_expected_stats(manifest: DatasetManifest, seq: SnapshotSequence) -> None:
    if manifest.n_steps is not None and seq.N != manifest.n_steps:
        raise ValueError(
            f"{manifest.name}: expected {manifest.n_steps} snapshots, got {seq.N}"
        )
    if manifest.expected_nodes is not None and seq.n != manifest.expected_nodes:
        raise ValueError(
            f"{manifest.name}: expected {manifest.expected_nodes} nodes, got {seq.n}"
        )
    if manifest.expected_total_edges is not None and seq.total_edges != manifest.expected_total_edges:
        raise ValueError(
            f"{manifest.name}: expected {manifest.expected_total_edges} edges "
            f"across snapshots, got {seq.total_edges}"
        )


def save_container(path, seq: SnapshotSequence) -> None:
    """Write the canonical versioned snapshot container."""
    np.savez(
        path,
        format_version=np.int64(CONTAINER_FORMAT_VERSION),
        adjacency=seq.adjacency_stack().astype(np.uint8),
        delta_t=np.float64(seq.delta_t),
        feature_scheme=np.str_(seq.feature_scheme),
    )


def load_container(path) -> SnapshotSequence:
    with np.load(path) as bundle:
        version = int(bundle["format_version"])
        if version != CONTAINER_FORMAT_VERSION:
            raise ValueError(f"unsupported container format version {version}")
        stack = bundle["adjacency"].astype(np.float64)
        delta_t = float(bundle["delta_t"])
        scheme = str(bundle["feature_scheme"])
    return make_node_features(sequence_from_adjacency(stack, delta_t=delta_t), scheme)
