"""Self-supervised recurrent graph representation learning and dynamic link
prediction on discrete-time snapshot sequences.

The model encodes each snapshot with a GCN stack, carries node states through
a graphical GRU with cosine time features, and trains against a combined
next-step link prediction, reconstruction, and local/global contrastive
predictive-coding objective. Evaluation covers the four positive/negative
link-prediction regimes with AUC/AP/MRR, plus temporal-correlation null-model
diagnostics.
"""

from .data import (
    Event,
    Snapshot,
    SnapshotSequence,
    TemporalNetwork,
    discretize,
    load_edge_list,
    make_node_features,
    split_train_test,
)
from .losses import LossWeights, NegativeSamplingConfig, ObjectiveConfig, total_loss
from .model import DynamicGraphModel, ForwardOutputs, ModelConfig, prepare
from .training import TrainConfig, TrainHistory, gradient_check, train_model
from .evaluation import EvalConfig, MetricsReport, ap, auc, evaluate, mrr, paired_t_test
from .analysis import (
    density_series,
    null_model_report,
    permute_times,
    randomize_edges,
    temporal_correlation,
)

__version__ = "0.1.0"

__all__ = [
    "Event",
    "Snapshot",
    "SnapshotSequence",
    "TemporalNetwork",
    "discretize",
    "load_edge_list",
    "make_node_features",
    "split_train_test",
    "LossWeights",
    "NegativeSamplingConfig",
    "ObjectiveConfig",
    "total_loss",
    "DynamicGraphModel",
    "ForwardOutputs",
    "ModelConfig",
    "prepare",
    "TrainConfig",
    "TrainHistory",
    "gradient_check",
    "train_model",
    "EvalConfig",
    "MetricsReport",
    "ap",
    "auc",
    "evaluate",
    "mrr",
    "paired_t_test",
    "density_series",
    "null_model_report",
    "permute_times",
    "randomize_edges",
    "temporal_correlation",
    "__version__",
]
