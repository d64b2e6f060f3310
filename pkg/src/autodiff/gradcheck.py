import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from src.autodiff.tensor import Tensor, backward
from src.errors import ContractError, NumericError

logger = logging.getLogger(__name__)

Objective = Callable[[Mapping[str, Tensor]], Tensor]


@dataclass
class CoordinateCheck:
    param: str
    index: tuple
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    max_rel_error: float = 0.0
    max_abs_error: float = 0.0
    checked: int = 0
    failures: list[CoordinateCheck] = field(default_factory=list)
    non_smooth: list[CoordinateCheck] = field(default_factory=list)
    worst: Optional[CoordinateCheck] = None
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "GradCheckReport") -> "GradCheckReport":
        merged = GradCheckReport(
            max_rel_error=max(self.max_rel_error, other.max_rel_error),
            max_abs_error=max(self.max_abs_error, other.max_abs_error),
            checked=self.checked + other.checked,
            failures=self.failures + other.failures,
            non_smooth=self.non_smooth + other.non_smooth,
            per_param=dict(self.per_param),
        )
        for name, err in other.per_param.items():
            merged.per_param[name] = max(err, merged.per_param.get(name, 0.0))
        candidates = [w for w in (self.worst, other.worst) if w is not None]
        merged.worst = max(candidates, key=lambda c: c.rel_error) if candidates else None
        return merged

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_rel_error": self.max_rel_error,
            "max_abs_error": self.max_abs_error,
            "checked": self.checked,
            "failures": len(self.failures),
            "non_smooth": len(self.non_smooth),
            "worst": None if self.worst is None else {
                "param": self.worst.param,
                "index": list(self.worst.index),
                "analytic": self.worst.analytic,
                "numeric": self.worst.numeric,
                "rel_error": self.worst.rel_error,
            },
            "per_param": dict(sorted(self.per_param.items())),
        }


def _evaluate(f: Objective, params: Mapping[str, Tensor]) -> float:
    value = f(params).item()
    if not np.isfinite(value):
        raise NumericError("objective is not finite during gradient check")
    return value


def _kink_in_stencil(
    f: Objective,
    leaves: Mapping[str, Tensor],
    name: str,
    index: tuple,
    base: float,
    outer: tuple[float, float],
    epsilon: float,
    kink_tol: float,
) -> bool:
    """True when second differences at epsilon, epsilon/2 and epsilon/4 disagree.

    On a smooth objective (f(x+h) + f(x-h) - 2 f(x)) / h^2 is the same
    curvature at every step up to O(h^2). A kink within the stencil adds a
    term that scales with 1/h, so the three estimates cannot all agree.
    """
    values = leaves[name].values.copy()
    original = values[index]
    curvatures = [(outer[0] + outer[1] - 2 * base) / epsilon ** 2]
    for step in (epsilon / 2, epsilon / 4):
        values[index] = original + step
        f_plus = _evaluate(f, {**leaves, name: Tensor(values)})
        values[index] = original - step
        f_minus = _evaluate(f, {**leaves, name: Tensor(values)})
        curvatures.append((f_plus + f_minus - 2 * base) / step ** 2)

    spread = max(curvatures) - min(curvatures)
    noise = 1e3 * np.finfo(float).eps * max(abs(base), 1.0) / (epsilon / 4) ** 2
    return spread > kink_tol * max(abs(c) for c in curvatures) + noise


def finite_diff_check(
    f: Objective,
    params: Mapping[str, Tensor],
    epsilon: float = 1e-4,
    rel_tol: float = 1e-4,
    abs_tol: float = 1e-8,
    kink_tol: float = 0.1,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare backward() gradients against central differences.

    Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8). A
    coordinate fails when it exceeds ``rel_tol`` and its absolute error
    exceeds ``abs_tol``. A failing coordinate is re-evaluated at smaller steps;
    if those show a kink inside the stencil it is reported as non-smooth
    instead of failed. Passing coordinates are always counted.
    ``max_coords`` samples that many coordinates per parameter.
    """
    if epsilon <= 0:
        raise ContractError(f"epsilon must be > 0, got {epsilon}")
    rng = np.random.default_rng(seed)

    leaves = {name: Tensor(t.values, requires_grad=True) for name, t in params.items()}
    loss = f(leaves)
    if not np.isfinite(loss.item()):
        raise NumericError("objective is not finite during gradient check")
    backward(loss)
    base = loss.item()

    report = GradCheckReport()
    for name, leaf in leaves.items():
        analytic_all = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.values)
        flat_size = leaf.values.size
        coords = np.arange(flat_size)
        if max_coords is not None and flat_size > max_coords:
            coords = np.sort(rng.choice(flat_size, size=max_coords, replace=False))

        worst_here = 0.0
        for flat in coords:
            index = np.unravel_index(flat, leaf.shape)
            values = leaf.values.copy()
            original = values[index]

            values[index] = original + epsilon
            f_plus = _evaluate(f, {**leaves, name: Tensor(values)})
            values[index] = original - epsilon
            f_minus = _evaluate(f, {**leaves, name: Tensor(values)})

            numeric = (f_plus - f_minus) / (2 * epsilon)
            analytic = float(analytic_all[index])
            abs_err = abs(analytic - numeric)
            rel_err = abs_err / max(abs(analytic), abs(numeric), 1e-8)
            check = CoordinateCheck(name, tuple(int(i) for i in index), analytic, numeric, rel_err)

            failing = rel_err > rel_tol and abs_err > abs_tol
            if failing and _kink_in_stencil(
                f, leaves, name, index, base, (f_plus, f_minus), epsilon, kink_tol
            ):
                report.non_smooth.append(check)
                continue

            report.checked += 1
            report.max_abs_error = max(report.max_abs_error, abs_err)
            # Errors below abs_tol are float noise and do not count toward the maximum.
            tracked = rel_err if abs_err > abs_tol else 0.0
            worst_here = max(worst_here, tracked)
            if tracked > 0 and (report.worst is None or tracked > report.worst.rel_error):
                report.worst = check
            if failing:
                report.failures.append(check)

        report.per_param[name] = worst_here
        report.max_rel_error = max(report.max_rel_error, worst_here)

    if report.non_smooth:
        logger.debug("%d coordinate(s) sit at non-smooth points", len(report.non_smooth))
    return report
