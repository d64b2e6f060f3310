import numpy as np
import pytest

from src.autodiff import tensor as T
from src.autodiff.gradcheck import GradCheckReport, finite_diff_check
from src.autodiff.tensor import Tensor
from src.errors import ContractError, NumericError


def _square_sum(p):
    return T.total(T.mul(p["w"], p["w"]))


def test_square_passes():
    report = finite_diff_check(_square_sum, {"w": Tensor([3.0])})
    assert report.passed
    assert report.checked == 1
    assert report.max_rel_error < 1e-6


def test_constant_objective_has_zero_error():
    report = finite_diff_check(
        lambda p: T.add(T.mul(T.total(p["w"]), 0.0), 5.0), {"w": Tensor([1.0, -2.0])}
    )
    assert report.passed
    assert report.max_rel_error == 0.0


def test_kink_inside_stencil_is_reported_non_smooth():
    # |w| at w = 3e-5: analytic slope 1, central difference over the kink 0.3.
    report = finite_diff_check(lambda p: T.total(T.absolute(p["w"])), {"w": Tensor([3e-5])})
    assert report.passed
    assert len(report.non_smooth) == 1
    assert report.checked == 0


def test_kink_at_point_with_matching_subgradient_is_checked():
    report = finite_diff_check(lambda p: T.total(T.absolute(p["w"])), {"w": Tensor([0.0])})
    assert report.passed
    assert report.checked == 1
    assert report.non_smooth == []


def _half_gradient_square(p):
    w = p["w"]
    # Missing the factor of two.
    return T.total(Tensor(w.values ** 2, op="bad", parents=(w,), grad_fn=lambda g: (g * w.values,)))


def test_wrong_gradient_fails():
    report = finite_diff_check(_half_gradient_square, {"w": Tensor([1.5, -2.0])})
    assert not report.passed
    assert len(report.failures) == 2
    assert report.worst.rel_error == pytest.approx(0.5, rel=1e-4)


@pytest.mark.parametrize("w", [1e-5, 2e-4, -5e-5])
def test_wrong_gradient_near_minimum_fails(w):
    report = finite_diff_check(_half_gradient_square, {"w": Tensor([w])})
    assert not report.passed
    assert report.non_smooth == []
    assert report.checked == 1
    assert report.max_rel_error == pytest.approx(0.5, rel=1e-3)


def test_smooth_objective_near_minimum_passes():
    report = finite_diff_check(_square_sum, {"w": Tensor([1e-5, -2e-4, 0.0])})
    assert report.passed
    assert report.checked == 3
    assert report.non_smooth == []


@pytest.mark.parametrize("epsilon", [0.0, -1e-4])
def test_non_positive_epsilon_rejected(epsilon):
    with pytest.raises(ContractError):
        finite_diff_check(_square_sum, {"w": Tensor([1.0])}, epsilon=epsilon)


def test_non_finite_objective():
    with pytest.raises(NumericError):
        finite_diff_check(lambda p: T.total(T.mul(p["w"], np.inf)), {"w": Tensor([1.0])})


def test_max_coords_samples_per_param():
    report = finite_diff_check(_square_sum, {"w": Tensor(np.linspace(1.0, 2.0, 10))}, max_coords=3)
    assert report.checked == 3


def test_merge_keeps_worst_and_sums_counts():
    a = finite_diff_check(_square_sum, {"w": Tensor([3.0])})
    b = GradCheckReport(max_rel_error=0.2, checked=4, per_param={"w": 0.2})
    merged = a.merge(b)
    assert merged.checked == 5
    assert merged.max_rel_error == 0.2
    assert merged.per_param["w"] == 0.2
    assert merged.to_dict()["passed"] is True
