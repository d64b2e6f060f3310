"""Gradient check of the full forward + BCE + focal pipeline."""

import logging
from typing import Optional, Sequence

import numpy as np

from src.autodiff import tensor as T
from src.autodiff.gradcheck import GradCheckReport, finite_diff_check
from src.config import NetworkConfig
from src.graphfilter.losses import compatibility_loss, focal_loss
from src.graphfilter.network import GarmentGraph, build_graph, forward_tensors, init_params

logger = logging.getLogger(__name__)

CHECK_SIZES = (2, 3, 5)
# Small enough that every coordinate of every group can be perturbed quickly.
CHECK_CONFIG = NetworkConfig(
    input_dim=6,
    h_widths=((4, 4), (5, 5)),
    g_widths=((4, 4), (5, 5)),
    node_width=6,
    head_widths=(5, 4),
)


def random_graph(rng: np.random.Generator, n: int, dim: int) -> GarmentGraph:
    return build_graph(list(rng.normal(size=(n, dim))))


def check_network_gradients(
    seed: int,
    config: NetworkConfig = CHECK_CONFIG,
    sizes: Sequence[int] = CHECK_SIZES,
    epsilon: float = 1e-4,
    rel_tol: float = 1e-4,
    max_coords: Optional[int] = None,
) -> GradCheckReport:
    """Finite-difference check over every parameter group, one graph per size."""
    rng = np.random.default_rng(seed)
    params = init_params(config, seed)
    # Non-zero biases so no group sits at a trivially symmetric point.
    tensors = {
        name: T.Tensor(t.values + (0.1 * rng.normal(size=t.shape) if t.values.ndim == 1 else 0.0))
        for name, t in params.tensors.items()
    }

    report = GradCheckReport()
    for n in sizes:
        graph = random_graph(rng, n, config.input_dim)
        label = float(rng.integers(2))
        target = np.zeros((1, config.num_styles))
        target[0, int(rng.integers(config.num_styles))] = 1.0

        def objective(p, graph=graph, label=label, target=target):
            compat, style = forward_tensors([graph], p, config)
            return T.add(compatibility_loss(compat, [label]), focal_loss(style, target, config.gamma))

        part = finite_diff_check(
            objective, tensors, epsilon=epsilon, rel_tol=rel_tol,
            max_coords=max_coords, seed=seed,
        )
        logger.debug("n=%d: max rel error %.3e over %d coordinate(s)", n, part.max_rel_error, part.checked)
        report = report.merge(part)
    return report
