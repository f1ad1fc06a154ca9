import pytest
import torch

from algorithms.network.jets import (
    JetTable,
    MultiIndex,
    downward_closure,
    multi_indices,
    sin_derivatives,
    tanh_derivatives,
)


def _coordinates(values, max_order=3):
    n = len(values)
    return [JetTable.variable(torch.tensor([v], dtype=torch.float64), k, n, max_order) for k, v in enumerate(values)]


def test_mixed_partials_share_one_entry():
    """d/dt d/dx and d/dx d/dt normalize to the same multi-index."""
    assert MultiIndex.from_variables([0, 1], 3) == MultiIndex.from_variables([1, 0], 3)
    assert MultiIndex((1, 2, 0)).variables() == (0, 1, 1)
    assert MultiIndex((1, 2, 0)).order == 3


def test_negative_exponent_rejected():
    """Multi-indices are nonnegative."""
    with pytest.raises(ValueError):
        MultiIndex((0, -1))


def test_multi_indices_count_and_order_limit():
    """Two variables up to order 3 give 10 indices; order 4 is refused."""
    assert len(multi_indices(2, 3)) == 10
    with pytest.raises(ValueError):
        multi_indices(2, 4)


def test_downward_closure_contains_all_lower_indices():
    """Closure of (1, 2) holds (0,0), (1,0), (0,1), (1,1), (0,2), (1,2)."""
    closure = {tuple(a) for a in downward_closure([(1, 2)])}
    assert closure == {(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)}


def test_product_rule_on_monomial():
    """t x^3 has d_x = 3 t x^2, d_xx = 6 t x, d_txx = 6 x."""
    t, x = _coordinates([2.0, 0.5])
    jet = t * x * x * x
    assert jet[(0, 0)].item() == pytest.approx(2.0 * 0.125)
    assert jet[(0, 1)].item() == pytest.approx(3 * 2.0 * 0.25)
    assert jet[(0, 2)].item() == pytest.approx(6 * 2.0 * 0.5)
    assert jet[(1, 2)].item() == pytest.approx(6 * 0.5)
    assert jet[(0, 3)].item() == pytest.approx(6 * 2.0)


def test_composition_matches_autograd():
    """tanh(t x) derivatives agree with repeated autograd."""
    t, x = _coordinates([0.3, -0.7])
    jet = (t * x).apply(tanh_derivatives)

    point = torch.tensor([0.3, -0.7], dtype=torch.float64, requires_grad=True)
    value = torch.tanh(point[0] * point[1])
    (g,) = torch.autograd.grad(value, point, create_graph=True)
    (gx,) = torch.autograd.grad(g[1], point, create_graph=True)
    (gxx,) = torch.autograd.grad(gx[1], point, create_graph=True)
    assert jet[(0, 1)].item() == pytest.approx(g[1].item())
    assert jet[(1, 1)].item() == pytest.approx(gx[0].item())
    assert jet[(0, 3)].item() == pytest.approx(gxx[1].item())
    assert jet[(1, 2)].item() == pytest.approx(gxx[0].item())


def test_reciprocal_and_division():
    """d/dx (1 / x) = -1 / x^2 and x / x = 1 with vanishing derivatives."""
    (x,) = _coordinates([2.0])
    inverse = 1.0 / x
    assert inverse[(1,)].item() == pytest.approx(-0.25)
    assert inverse[(2,)].item() == pytest.approx(0.25)
    ratio = x / x
    assert ratio.value.item() == pytest.approx(1.0)
    assert ratio[(3,)].item() == pytest.approx(0.0, abs=1e-12)


def test_derivative_drops_one_order():
    """Differentiating sin(x) gives cos(x) with order 2 left."""
    (x,) = _coordinates([0.4])
    jet = x.apply(sin_derivatives).derivative(0)
    assert jet.max_order == 2
    assert jet.value.item() == pytest.approx(torch.cos(torch.tensor(0.4)).item())
    assert jet[(2,)].item() == pytest.approx(-torch.cos(torch.tensor(0.4)).item())


def test_derivative_of_plain_value_fails():
    """A jet without first-order entries cannot be differentiated."""
    jet = JetTable({(0,): torch.ones(1, dtype=torch.float64)}, 1)
    with pytest.raises(ValueError):
        jet.derivative(0)


def test_stack_keeps_common_entries():
    """Stacking adds a trailing feature axis over the shared keys."""
    t, x = _coordinates([1.0, 2.0], max_order=2)
    stacked = JetTable.stack([t, x.restrict([(0, 1)])])
    assert stacked.value.shape == (1, 2)
    assert {tuple(k) for k in stacked.keys()} == {(0, 0), (0, 1)}
