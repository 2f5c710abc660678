"""Learned vertex-side prediction for coupling graphs.

Generates random coupled quadratic programs, labels them with the solver
pipeline's optimization-based partitioner through its command-line tool,
trains an edge-conditioned graph network on the labels, and writes assignment
files the pipeline can import.
"""

from .features import (
    EDGE_FEATURE_DIM,
    NODE_FEATURE_DIM,
    build_topology,
    edge_feature_vector,
    map_to_dense,
    node_features,
    topology_tensors,
)
from .infer import infer_file, predict_sides, write_assignment
from .model import (
    BipartGnn,
    GineConv,
    GnnBlock,
    ModelConfig,
    build_model,
    desk_config,
)
from .qp import (
    TrainingInstance,
    anchor_vertex,
    canonical_labels,
    featurize_problem,
    gen_dataset,
    gen_problem,
    label_problem,
)
from .train import collate, load_checkpoint, node_accuracy, save_checkpoint, train

__all__ = [
    "EDGE_FEATURE_DIM",
    "NODE_FEATURE_DIM",
    "BipartGnn",
    "GineConv",
    "GnnBlock",
    "ModelConfig",
    "TrainingInstance",
    "anchor_vertex",
    "build_model",
    "desk_config",
    "build_topology",
    "canonical_labels",
    "collate",
    "edge_feature_vector",
    "featurize_problem",
    "gen_dataset",
    "gen_problem",
    "infer_file",
    "label_problem",
    "load_checkpoint",
    "map_to_dense",
    "node_accuracy",
    "node_features",
    "predict_sides",
    "save_checkpoint",
    "topology_tensors",
    "train",
    "write_assignment",
]
