import numpy as np
import pytest

from src.autodiff import tensor as T
from src.autodiff.tensor import Tensor, backward, reduce
from src.errors import ContractError, DimensionError, DomainError, NumericError


def test_affine_identity_input():
    out = T.affine(Tensor(np.eye(2)), Tensor([[2.0, 0.0], [0.0, 3.0]]), Tensor([0.0, 0.0]))
    np.testing.assert_array_equal(out.values, [[2.0, 0.0], [0.0, 3.0]])


def test_affine_hand_expansion():
    out = T.affine(Tensor([[1.0, 1.0]]), Tensor([[1.0], [1.0]]), Tensor([0.5]))
    np.testing.assert_array_equal(out.values, [[2.5]])


def test_affine_zero_weights_annihilate():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 4)))
    out = T.affine(x, Tensor(np.zeros((4, 2))), Tensor(np.zeros(2)))
    np.testing.assert_array_equal(out.values, np.zeros((3, 2)))


def test_affine_shape_mismatch():
    with pytest.raises(DimensionError):
        T.affine(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))), Tensor(np.ones(2)))


@pytest.mark.parametrize("kind,expected", [("max", [3.0, 5.0]), ("mean", [2.0, 3.5]), ("min", [1.0, 2.0])])
def test_reduce_axis0(kind, expected):
    out = reduce(Tensor([[1.0, 5.0], [3.0, 2.0]]), 0, kind)
    np.testing.assert_array_equal(out.values, expected)


@pytest.mark.parametrize("kind", ["min", "max", "mean"])
def test_reduce_single_row_is_identity(kind):
    out = reduce(Tensor([[1.5, -2.0, 7.0]]), 0, kind)
    np.testing.assert_array_equal(out.values, [1.5, -2.0, 7.0])


def test_reduce_tie_routes_gradient_to_first_index():
    x = Tensor([[2.0], [2.0], [1.0]], requires_grad=True)
    backward(T.total(reduce(x, 0, "max")))
    np.testing.assert_array_equal(x.grad, [[1.0], [0.0], [0.0]])


@pytest.mark.parametrize("kind", ["min", "max", "mean"])
def test_reduce_is_permutation_invariant(kind):
    rng = np.random.default_rng(5)
    x = rng.normal(size=(6, 3))
    base = reduce(Tensor(x), 0, kind).values
    for _ in range(10):
        shuffled = reduce(Tensor(x[rng.permutation(6)]), 0, kind).values
        np.testing.assert_allclose(shuffled, base, rtol=0, atol=1e-12)


def test_reduce_unknown_kind():
    with pytest.raises(ContractError):
        reduce(Tensor([[1.0]]), 0, "median")


def test_backward_sum_gives_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    backward(T.total(x))
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_sigmoid_at_zero():
    w = Tensor([0.0], requires_grad=True)
    backward(T.total(T.sigmoid(w)))
    assert w.grad[0] == pytest.approx(0.25)


def test_backward_constant_loss_gives_zero_grad():
    x = Tensor([1.0, 2.0], requires_grad=True)
    loss = T.add(T.total(T.mul(x, 0.0)), 3.0)
    backward(loss)
    np.testing.assert_array_equal(x.grad, [0.0, 0.0])


def test_backward_accumulates_without_reset():
    x = Tensor([1.0, 2.0], requires_grad=True)
    backward(T.total(x))
    backward(T.total(x))
    np.testing.assert_array_equal(x.grad, [2.0, 2.0])
    x.zero_grad()
    assert x.grad is None


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ContractError):
        backward(T.mul(x, 2.0))


def test_backward_matches_path_enumeration_on_depth3_tree():
    # loss = a*b + a*c + (b*c)*a with shared leaves: derivative is the sum over all paths.
    a = Tensor([1.5], requires_grad=True)
    b = Tensor([-2.0], requires_grad=True)
    c = Tensor([0.5], requires_grad=True)
    loss = T.total(T.add(T.add(T.mul(a, b), T.mul(a, c)), T.mul(T.mul(b, c), a)))
    backward(loss)
    av, bv, cv = 1.5, -2.0, 0.5
    assert a.grad[0] == pytest.approx(bv + cv + bv * cv)
    assert b.grad[0] == pytest.approx(av + cv * av)
    assert c.grad[0] == pytest.approx(av + bv * av)


def test_topological_order_visits_each_node_once():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = T.mul(x, x)
    z = T.add(y, y)
    order = T.topological_order(T.total(z))
    ids = [id(n) for n in order]
    assert len(ids) == len(set(ids))
    assert ids.index(id(x)) < ids.index(id(y)) < ids.index(id(z))


def test_checked_mode_rejects_non_finite():
    with pytest.raises(NumericError):
        Tensor([1.0, np.inf])


def test_checked_mode_rejects_zero_extent():
    with pytest.raises(DimensionError):
        Tensor(np.zeros((0, 3)))


def test_values_are_read_only():
    x = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        x.values[0] = 5.0


def test_log_of_non_positive_is_domain_error():
    with pytest.raises(DomainError):
        T.log(Tensor([0.0]))


def test_segment_reduce_matches_per_segment_reduce():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(7, 3))
    starts = np.array([0, 2, 3])
    bounds = [(0, 2), (2, 3), (3, 7)]
    for kind in ("min", "max", "mean"):
        out = T.segment_reduce(Tensor(x), starts, kind).values
        for k, (lo, hi) in enumerate(bounds):
            np.testing.assert_allclose(out[k], reduce(Tensor(x[lo:hi]), 0, kind).values, atol=1e-12)


def test_segment_reduce_rejects_empty_segment():
    with pytest.raises(DomainError):
        T.segment_reduce(Tensor(np.ones((3, 1))), np.array([0, 0, 2]), "max")


def test_softmax_rows_on_simplex():
    out = T.softmax(Tensor([[1.0, 2.0, 3.0], [1000.0, 0.0, -1000.0]]), axis=1)
    np.testing.assert_allclose(out.values.sum(axis=1), [1.0, 1.0], atol=1e-12)
    assert np.all(out.values >= 0)


def test_gather_accumulates_repeated_rows():
    x = Tensor([[1.0], [2.0]], requires_grad=True)
    backward(T.total(T.gather(x, [0, 0, 1])))
    np.testing.assert_array_equal(x.grad, [[2.0], [1.0]])


def test_columns_gradient_reaches_only_sliced_part():
    parts = [Tensor(np.full((2, 1), float(k)), requires_grad=True) for k in range(3)]
    joined = T.concat(parts, axis=1)
    backward(T.total(T.columns(joined, 1, 2)))
    assert parts[1].grad is not None and np.all(parts[1].grad == 1.0)
    assert parts[0].grad is None or np.all(parts[0].grad == 0.0)
