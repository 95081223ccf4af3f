import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, settings

from dynlink.data import SnapshotSequence, sequence_from_adjacency
from dynlink.training import TrainConfig

settings.register_profile(
    "suite", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


def random_adjacency(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    upper = np.triu(rng.random((n, n)) < p, k=1)
    A = upper | upper.T
    return A.astype(np.float64)


def random_sequence(n: int, N: int, p: float = 0.4, seed: int = 0) -> SnapshotSequence:
    rng = np.random.default_rng(seed)
    stack = np.stack([random_adjacency(n, p, rng) for _ in range(N)])
    return sequence_from_adjacency(stack)


def sequence_from_edges(n: int, edge_lists: list[list[tuple[int, int]]]) -> SnapshotSequence:
    stack = np.zeros((len(edge_lists), n, n), dtype=np.float64)
    for k, edges in enumerate(edge_lists):
        for i, j in edges:
            stack[k, i, j] = stack[k, j, i] = 1.0
    return sequence_from_adjacency(stack)


def small_train_config(**overrides) -> TrainConfig:
    defaults = dict(
        d_enc=8,
        d_state=8,
        d_time=6,
        epochs=0,
        seed=0,
        dtype="float64",
        nce_negatives=3,
    )
    defaults.update(overrides)
    return TrainConfig(**defaults)


@pytest.fixture
def tiny_seq() -> SnapshotSequence:
    """4 nodes, 3 steps with both persistent and churning edges."""
    return sequence_from_edges(
        4,
        [
            [(0, 1), (2, 3)],
            [(0, 1), (1, 2)],
            [(1, 2), (0, 3)],
        ],
    )


@pytest.fixture(autouse=True)
def _single_threaded_torch():
    torch.set_num_threads(max(1, torch.get_num_threads()))
    yield
