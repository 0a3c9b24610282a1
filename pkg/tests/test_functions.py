import numpy as np
import pytest

from trajlse import (DifferenceMap, GLMMap, LinearMap, RBFExpansion, ScaledTanh,
                     Tabulated1D, ZeroMap, get_link)
from trajlse.functions import as_points, evaluate


def test_as_points_shapes():
    assert as_points(0.5, 1).shape == (1, 1)
    assert as_points([1.0, 2.0, 3.0], 1).shape == (3, 1)
    assert as_points([1.0, 2.0, 3.0], 3).shape == (1, 3)
    assert as_points(np.zeros((4, 2)), 2).shape == (4, 2)
    with pytest.raises(ValueError):
        as_points(np.zeros((4, 2)), 3)


def test_linear_and_zero_maps():
    A = np.array([[0.5, 0.0], [0.2, -0.1]])
    f = LinearMap(A)
    x = np.array([[1.0, 2.0]])
    assert np.allclose(f(x), x @ A.T)
    assert np.allclose(ZeroMap(2, 2)(x), 0.0)


def test_tabulated_interp_and_clamping():
    f = Tabulated1D([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    assert f(np.array([[-0.5]]))[0, 0] == pytest.approx(0.5)
    # constant extrapolation outside the node range
    assert f(np.array([[5.0]]))[0, 0] == pytest.approx(0.0)
    assert f.lipschitz_constant() == pytest.approx(1.0)


def test_tabulated_validation():
    with pytest.raises(ValueError):
        Tabulated1D([0.0, 0.0], [1.0, 2.0])


def test_rbf_expansion_matches_manual():
    rng = np.random.default_rng(0)
    centers = rng.standard_normal((5, 2))
    weights = rng.standard_normal((5, 3))
    f = RBFExpansion(centers, weights, bandwidth=1.3)
    x = rng.standard_normal((4, 2))
    manual = np.zeros((4, 3))
    for i in range(4):
        for j in range(5):
            k = np.exp(-0.5 * np.sum((x[i] - centers[j]) ** 2) / 1.3**2)
            manual[i] += k * weights[j]
    assert np.allclose(f(x), manual)


def test_glm_map_and_links():
    A = np.array([[0.3, -0.2], [0.1, 0.4]])
    f = GLMMap(A, "tanh")
    x = np.array([[1.0, -1.0]])
    assert np.allclose(f(x), np.tanh(x @ A.T))
    ident = get_link("identity")
    assert np.allclose(ident.deriv(np.array([1.0, 2.0])), 1.0)
    with pytest.raises(ValueError):
        get_link("logit")


def test_difference_map():
    f = ScaledTanh(0.7)
    g = ScaledTanh(0.2)
    d = DifferenceMap(f, g)
    x = np.linspace(-1, 1, 7).reshape(-1, 1)
    assert np.allclose(d(x), f(x) - g(x))


def test_evaluate_accepts_predict_objects():
    class Stub:
        def predict(self, X):
            return np.ones(len(X))

    out = evaluate(Stub(), np.zeros((3, 1)), 1)
    assert out.shape == (3, 1)
