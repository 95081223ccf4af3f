"""Run-level randomness: one named seed, split into purpose-specific streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fixed spawn order; changing it would silently change every seeded run.
_STREAMS = ("init", "negatives", "evaluation", "null_models")


@dataclass(frozen=True)
class RunStreams:
    """Independent generators derived from a single run seed."""

    init: np.random.Generator
    negatives: np.random.Generator
    evaluation: np.random.Generator
    null_models: np.random.Generator


def split_run_streams(seed: int) -> RunStreams:
    """Split a run seed into the four canonical substreams."""
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return RunStreams(**{name: np.random.default_rng(ss) for name, ss in zip(_STREAMS, children)})
