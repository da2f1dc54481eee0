import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmusafe.analytic import coverage_factor, propagate_correlated, propagate_uncorrelated
from pmusafe.distributions import InputSet
from pmusafe.errors import PMUError
from pmusafe.model import Distance3D, ExpressionModel, LinearCombination


def test_quadrature_345():
    r = propagate_uncorrelated(LinearCombination([1, 1]), InputSet.independent(["x1", "x2"], [0, 0], [3, 4]))
    assert r.u_prop == pytest.approx(5.0, rel=1e-12)
    assert r.method == "analytic-uncorrelated"
    lo, hi = r.interval
    assert hi - lo == pytest.approx(2 * 1.96 * 5.0)


def test_zero_sigma_gives_zero():
    inputs = InputSet.independent(["xH", "yH", "zH", "xR", "yR", "zR"], [1, 2, 3, 0, 0, 0], [0] * 6)
    assert propagate_uncorrelated(Distance3D(), inputs).u_prop == 0
    assert propagate_correlated(Distance3D(), inputs).u_prop == 0


def test_zero_sigma_at_singular_point_is_not_an_error():
    inputs = InputSet.independent(["xH", "yH", "zH", "xR", "yR", "zR"], [0] * 6, [0] * 6)
    assert propagate_uncorrelated(Distance3D(), inputs).u_prop == 0


def test_distance_unit_gradient():
    rng = np.random.default_rng(1)
    for _ in range(20):
        h = rng.normal(size=3) * 2
        r = rng.normal(size=3) * 2
        inputs = InputSet.independent(
            ["xH", "yH", "zH", "xR", "yR", "zR"], [*h, *r], [0.01, 0.01, 0.01, 0, 0, 0]
        )
        assert propagate_uncorrelated(Distance3D(), inputs).u_prop == pytest.approx(0.01, abs=1e-6)


def test_perfect_correlation():
    cov = [[1.0, 1.0], [1.0, 1.0]]
    inputs = InputSet.gaussian(["x1", "x2"], [0, 0], cov)
    assert propagate_correlated(LinearCombination([1, 1]), inputs).u_prop == pytest.approx(2.0, rel=1e-12)
    assert propagate_correlated(LinearCombination([1, -1]), inputs).u_prop == pytest.approx(0.0, abs=1e-12)


def test_uncorrelated_rejects_covariance():
    inputs = InputSet.gaussian(["x1", "x2"], [0, 0], [[1, 0.5], [0.5, 1]])
    with pytest.raises(PMUError) as err:
        propagate_uncorrelated(LinearCombination([1, 1]), inputs)
    assert err.value.kind == "correlated-inputs-rejected"


def random_psd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + 1e-3 * np.eye(n)


def test_correlated_matches_quadratic_form():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        c = rng.normal(size=n)
        cov = random_psd(rng, n)
        inputs = InputSet.gaussian([f"x{i+1}" for i in range(n)], rng.normal(size=n), cov)
        expect = math.sqrt(c @ cov @ c)
        assert propagate_correlated(LinearCombination(c), inputs).u_prop == pytest.approx(expect, rel=1e-10)


def test_diagonal_covariance_reduces_to_uncorrelated():
    rng = np.random.default_rng(12)
    models = [Distance3D(), ExpressionModel("(mul xH (add yH zH xR yR zR))", names=list(Distance3D().names))]
    for model in models:
        for _ in range(20):
            inputs = InputSet.independent(list(model.names), rng.normal(size=6), rng.uniform(0, 0.1, size=6))
            a = propagate_uncorrelated(model, inputs).u_prop
            b = propagate_correlated(model, inputs).u_prop
            assert b == pytest.approx(a, rel=1e-12, abs=1e-15)


def test_input_order_does_not_matter():
    rng = np.random.default_rng(2)
    model = ExpressionModel("(div (mul a b) (add c 4))")
    cov = random_psd(rng, 3) * 0.01
    inputs = InputSet.gaussian(["a", "b", "c"], [1.0, 2.0, 0.5], cov)
    perm = inputs.reordered(["c", "a", "b"])
    assert propagate_correlated(model, perm).u_prop == pytest.approx(
        propagate_correlated(model, inputs).u_prop, rel=1e-12
    )


def test_coverage_factor():
    assert coverage_factor(0.95) == 1.96
    assert coverage_factor(0.99) == pytest.approx(2.5758, abs=1e-4)
    with pytest.raises(ValueError):
        coverage_factor(1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-10, 10), min_size=1, max_size=5),
    st.floats(0.01, 100),
)
def test_uncertainty_scales_linearly_with_sigma(coeffs, scale):
    n = len(coeffs)
    names = [f"x{i+1}" for i in range(n)]
    base = InputSet.independent(names, [0.0] * n, [1.0] * n)
    scaled = InputSet.independent(names, [0.0] * n, [scale] * n)
    m = LinearCombination(coeffs)
    assert propagate_uncorrelated(m, scaled).u_prop == pytest.approx(
        scale * propagate_uncorrelated(m, base).u_prop, rel=1e-9, abs=1e-12
    )
