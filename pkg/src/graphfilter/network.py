"""Edge-centric graph network scoring a garment set.

A set of n items is a complete undirected graph. Each EdgeConv layer maps
every node through h (two affine+ReLU maps), pools each edge's two endpoint
vectors into min, max and mean blocks, maps the result through g (two
affine+ReLU maps) and aggregates each node's incident edges with min and
max. After the last layer a position-wise node map is pooled over nodes
(max and mean) and a fully connected head produces one compatibility logit
and one logit per style.

Graphs of different sizes are batched without padding: nodes of all graphs
are stacked and every per-node or per-graph reduction is a segment
reduction.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from src.autodiff import tensor as T
from src.autodiff.checkpoint import load_model, save_model
from src.autodiff.tensor import Tensor
from src.config import AggregationMode, NetworkConfig
from src.errors import ContractError, DataError
from src.styles import STYLE_ORDER, StyleLabel

logger = logging.getLogger(__name__)

MODEL_KIND = "graph"
STYLE_GROUP = "head.style"
COMPAT_GROUP = "head.compat"


# ------------------------------------------------------------------ topology


@dataclass(frozen=True)
class GarmentGraph:
    nodes: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]

    def permuted(self, order: Sequence[int]) -> "GarmentGraph":
        return GarmentGraph(self.nodes[np.asarray(order)])


def build_graph(items: Sequence) -> GarmentGraph:
    if len(items) < 2:
        raise ContractError(f"A garment graph needs at least 2 items, got {len(items)}")
    dims = {len(np.ravel(v)) for v in items}
    if len(dims) != 1:
        raise ContractError(f"Item vectors have ragged dimensions: {sorted(dims)}")
    nodes = np.array([np.ravel(v) for v in items], dtype=np.float64)
    if not np.all(np.isfinite(nodes)):
        raise ContractError("Item vectors must be finite")
    nodes.flags.writeable = False
    return GarmentGraph(nodes)


@dataclass(frozen=True)
class _Topology:
    """Index arrays for a batch of complete graphs stacked node-wise."""
    sizes: np.ndarray
    graph_starts: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    incident: np.ndarray
    incident_starts: np.ndarray

    @classmethod
    def of(cls, sizes: Sequence[int]) -> "_Topology":
        sizes = np.asarray(sizes, dtype=np.int64)
        graph_starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        edge_i, edge_j = [], []
        for start, n in zip(graph_starts, sizes):
            i, j = np.triu_indices(int(n), k=1)
            edge_i.append(i + start)
            edge_j.append(j + start)
        edge_i = np.concatenate(edge_i)
        edge_j = np.concatenate(edge_j)

        endpoints = np.concatenate([edge_i, edge_j])
        edge_ids = np.concatenate([np.arange(edge_i.size)] * 2)
        order = np.argsort(endpoints, kind="stable")
        counts = np.bincount(endpoints, minlength=int(sizes.sum()))
        incident_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        return cls(sizes, graph_starts, edge_i, edge_j, edge_ids[order], incident_starts)


# ---------------------------------------------------------------- parameters


def _layer_widths(config: NetworkConfig, mode: AggregationMode) -> list[dict[str, int]]:
    pair_factor = 1 if mode is AggregationMode.NODE else 3
    agg_factor = 2 if mode is AggregationMode.HIERARCHICAL else 1
    layers = []
    width = config.input_dim
    for (h1, h2), (g1, g2) in zip(config.h_widths, config.g_widths):
        layers.append({"in": width, "h1": h1, "h2": h2, "g_in": pair_factor * h2, "g1": g1, "g2": g2})
        width = agg_factor * g2
    return layers


def expected_shapes(config: NetworkConfig, mode: Optional[AggregationMode] = None) -> dict[str, tuple]:
    """Parameter name -> shape, in creation order."""
    mode = mode or config.mode
    shapes: dict[str, tuple] = {}
    layers = _layer_widths(config, mode)
    for p, w in enumerate(layers):
        shapes[f"h{p}.W1"] = (w["in"], w["h1"])
        shapes[f"h{p}.b1"] = (w["h1"],)
        shapes[f"h{p}.W2"] = (w["h1"], w["h2"])
        shapes[f"h{p}.b2"] = (w["h2"],)
        shapes[f"g{p}.W1"] = (w["g_in"], w["g1"])
        shapes[f"g{p}.b1"] = (w["g1"],)
        shapes[f"g{p}.W2"] = (w["g1"], w["g2"])
        shapes[f"g{p}.b2"] = (w["g2"],)
    agg_factor = 2 if mode is AggregationMode.HIERARCHICAL else 1
    width = agg_factor * layers[-1]["g2"]
    shapes["node.W"] = (width, config.node_width)
    shapes["node.b"] = (config.node_width,)
    width = 2 * config.node_width
    for k, out in enumerate(config.head_widths):
        shapes[f"head.fc{k}.W"] = (width, out)
        shapes[f"head.fc{k}.b"] = (out,)
        width = out
    shapes[f"{COMPAT_GROUP}.W"] = (width, 1)
    shapes[f"{COMPAT_GROUP}.b"] = (1,)
    shapes[f"{STYLE_GROUP}.W"] = (width, config.num_styles)
    shapes[f"{STYLE_GROUP}.b"] = (config.num_styles,)
    return shapes


def group_of(name: str) -> str:
    return name.rsplit(".", 1)[0]


@dataclass
class NetworkParams:
    config: NetworkConfig
    tensors: dict[str, Tensor]

    def names(self, exclude_groups: Sequence[str] = ()) -> list[str]:
        return [n for n in self.tensors if group_of(n) not in exclude_groups]

    @property
    def groups(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for name in self.tensors:
            out.setdefault(group_of(name), []).append(name)
        return out

    def copy(self, requires_grad: bool = True) -> "NetworkParams":
        return NetworkParams(
            self.config,
            {k: Tensor(v.values, requires_grad=requires_grad) for k, v in self.tensors.items()},
        )

    def values(self) -> dict[str, np.ndarray]:
        return {k: v.values for k, v in self.tensors.items()}

    def validate(self, mode: Optional[AggregationMode] = None) -> None:
        expected = expected_shapes(self.config, mode)
        missing = sorted(set(expected) - set(self.tensors))
        extra = sorted(set(self.tensors) - set(expected))
        wrong = [
            f"{name} {self.tensors[name].shape} != {shape}"
            for name, shape in expected.items()
            if name in self.tensors and self.tensors[name].shape != shape
        ]
        if missing or extra or wrong:
            raise ContractError(
                "Network parameters do not match the configuration: "
                + "; ".join(
                    ([f"missing {', '.join(missing)}"] if missing else [])
                    + ([f"unexpected {', '.join(extra)}"] if extra else [])
                    + wrong
                )
            )


def init_params(config: NetworkConfig, seed: int) -> NetworkParams:
    """He-normal weights and zero biases."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in expected_shapes(config).items():
        if len(shape) == 2:
            values = rng.normal(0.0, math.sqrt(2.0 / shape[0]), size=shape)
        else:
            values = np.zeros(shape)
        tensors[name] = Tensor(values, requires_grad=True)
    return NetworkParams(config, tensors)


def save_network(path: Union[str, Path], params: NetworkParams, metadata: Optional[dict] = None) -> None:
    save_model(path, params.tensors, {"kind": MODEL_KIND, "network": params.config.to_dict(), **(metadata or {})})


def load_network(path: Union[str, Path]) -> tuple[NetworkParams, dict]:
    tensors, metadata = load_model(path)
    if metadata.get("kind") != MODEL_KIND or "network" not in metadata:
        raise DataError(f"{path} is not a graph network checkpoint")
    params = NetworkParams(NetworkConfig.from_dict(metadata["network"]), tensors)
    params.validate()
    return params, metadata


# ------------------------------------------------------------------- layers


def _two_maps(x: Tensor, tensors: Mapping[str, Tensor], prefix: str) -> Tensor:
    hidden = T.relu(T.affine(x, tensors[f"{prefix}.W1"], tensors[f"{prefix}.b1"]))
    return T.relu(T.affine(hidden, tensors[f"{prefix}.W2"], tensors[f"{prefix}.b2"]))


def _pair_pool(a: Tensor, b: Tensor) -> Tensor:
    pair = T.stack([a, b], axis=0)
    return T.concat([T.reduce(pair, 0, "min"), T.reduce(pair, 0, "max"), T.reduce(pair, 0, "mean")], axis=-1)


def _edge_conv(
    x: Tensor,
    topo: _Topology,
    tensors: Mapping[str, Tensor],
    layer: int,
    mode: AggregationMode,
) -> Tensor:
    transformed = _two_maps(x, tensors, f"h{layer}")
    if mode is AggregationMode.NODE:
        return _two_maps(transformed, tensors, f"g{layer}")

    edges = _pair_pool(T.gather(transformed, topo.edge_i), T.gather(transformed, topo.edge_j))
    mapped = _two_maps(edges, tensors, f"g{layer}")
    per_node = T.gather(mapped, topo.incident)
    if mode is AggregationMode.HIERARCHICAL:
        return T.concat([
            T.segment_reduce(per_node, topo.incident_starts, "min"),
            T.segment_reduce(per_node, topo.incident_starts, "max"),
        ], axis=1)
    kind = "max" if mode is AggregationMode.EDGE_MAX else "mean"
    return T.segment_reduce(per_node, topo.incident_starts, kind)


@dataclass(frozen=True)
class EdgeFeature:
    endpoints: tuple[int, int]
    feature: np.ndarray


def edge_feature(
    xi,
    xj,
    params: NetworkParams,
    layer: int = 0,
    endpoints: tuple[int, int] = (0, 1),
) -> EdgeFeature:
    """h() of one node pair: min, max and mean of the two mapped endpoints."""
    xi, xj = np.ravel(xi), np.ravel(xj)
    if xi.shape != xj.shape:
        raise ContractError(f"Edge endpoints differ in dimension: {xi.shape} vs {xj.shape}")
    a = _two_maps(Tensor(xi[None, :]), params.tensors, f"h{layer}")
    b = _two_maps(Tensor(xj[None, :]), params.tensors, f"h{layer}")
    pooled = _pair_pool(a, b)
    return EdgeFeature(endpoints, pooled.numpy()[0])


@dataclass(frozen=True)
class LayerNodeFeatures:
    layer: int
    values: np.ndarray

    @property
    def count(self) -> int:
        return self.values.shape[0]


def edge_conv_layer(
    prev: LayerNodeFeatures,
    params: NetworkParams,
    mode: Optional[AggregationMode] = None,
) -> LayerNodeFeatures:
    if prev.count < 2:
        raise ContractError(f"EdgeConv needs at least 2 nodes, got {prev.count}")
    mode = mode or params.config.mode
    out = _edge_conv(Tensor(prev.values), _Topology.of([prev.count]), params.tensors, prev.layer, mode)
    return LayerNodeFeatures(prev.layer + 1, out.numpy())


# ------------------------------------------------------------------ forward


@dataclass(frozen=True)
class NetworkOutput:
    compatibility: float
    style_distribution: np.ndarray

    @property
    def style(self) -> StyleLabel:
        return STYLE_ORDER[int(np.argmax(self.style_distribution))]


def forward_tensors(
    graphs: Sequence[GarmentGraph],
    tensors: Mapping[str, Tensor],
    config: NetworkConfig,
    mode: Optional[AggregationMode] = None,
) -> tuple[Tensor, Tensor]:
    """Compatibility probabilities [B, 1] and style distributions [B, S]."""
    if not graphs:
        raise ContractError("forward needs at least one graph")
    mode = mode or config.mode
    dims = {g.dim for g in graphs}
    if dims != {config.input_dim}:
        raise ContractError(f"Graph node dim {sorted(dims)} does not match network input_dim {config.input_dim}")
    topo = _Topology.of([g.n for g in graphs])

    x = Tensor(np.concatenate([g.nodes for g in graphs], axis=0))
    for layer in range(len(config.h_widths)):
        x = _edge_conv(x, topo, tensors, layer, mode)
    x = T.relu(T.affine(x, tensors["node.W"], tensors["node.b"]))
    pooled = T.concat([
        T.segment_reduce(x, topo.graph_starts, "max"),
        T.segment_reduce(x, topo.graph_starts, "mean"),
    ], axis=1)
    for k in range(len(config.head_widths)):
        pooled = T.relu(T.affine(pooled, tensors[f"head.fc{k}.W"], tensors[f"head.fc{k}.b"]))
    compat = T.sigmoid(T.affine(pooled, tensors[f"{COMPAT_GROUP}.W"], tensors[f"{COMPAT_GROUP}.b"]))
    style = T.softmax(T.affine(pooled, tensors[f"{STYLE_GROUP}.W"], tensors[f"{STYLE_GROUP}.b"]), axis=1)
    return compat, style


def forward_batch(
    graphs: Sequence[GarmentGraph],
    params: NetworkParams,
    mode: Optional[AggregationMode] = None,
) -> list[NetworkOutput]:
    params.validate(mode)
    compat, style = forward_tensors(graphs, params.tensors, params.config, mode)
    return [
        NetworkOutput(float(c), s.copy())
        for c, s in zip(compat.numpy()[:, 0], style.numpy())
    ]


def forward(graph: GarmentGraph, params: NetworkParams, mode: Optional[AggregationMode] = None) -> NetworkOutput:
    return forward_batch([graph], params, mode)[0]


def predict_style(out: NetworkOutput, threshold: float = 0.5) -> Optional[StyleLabel]:
    """Style of a set judged compatible; None when the score is at or below threshold."""
    if out.compatibility <= threshold:
        return None
    return out.style
