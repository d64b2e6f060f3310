from src.graphfilter.losses import compatibility_loss, cross_entropy, focal_loss
from src.graphfilter.network import (
    EdgeFeature,
    GarmentGraph,
    LayerNodeFeatures,
    NetworkOutput,
    NetworkParams,
    build_graph,
    edge_conv_layer,
    edge_feature,
    forward,
    forward_batch,
    init_params,
    load_network,
    predict_style,
    save_network,
)
from src.graphfilter.training import GraphTrainingResult, train_graph

__all__ = [
    "EdgeFeature",
    "GarmentGraph",
    "GraphTrainingResult",
    "LayerNodeFeatures",
    "NetworkOutput",
    "NetworkParams",
    "build_graph",
    "compatibility_loss",
    "cross_entropy",
    "edge_conv_layer",
    "edge_feature",
    "focal_loss",
    "forward",
    "forward_batch",
    "init_params",
    "load_network",
    "predict_style",
    "save_network",
    "train_graph",
]
