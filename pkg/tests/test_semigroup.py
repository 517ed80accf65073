import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import holder_sup_constant, series_exp
from regcalc.semigroup import DiagonalGenerator, apply_generator_adjoint, apply_semigroup, graph_norm, holder_constant
from regcalc.spectral_space import basis_vector, norm


def test_semigroup_examples():
    gen = DiagonalGenerator.dirichlet_laplacian(4)
    v = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_array_equal(apply_semigroup(0.0, v, gen).coeffs, v)
    out = apply_semigroup(0.1, basis_vector(1, 4), gen).coeffs
    assert out[0] == pytest.approx(series_exp(-0.1 * np.pi**2), rel=1e-14)
    assert np.all(out[1:] == 0.0)
    with pytest.raises(ValueError):
        apply_semigroup(-1e-3, v, gen)


@given(st.floats(0, 2), st.floats(0, 2))
def test_semigroup_law_and_contraction(s, t):
    gen = DiagonalGenerator.dirichlet_laplacian(6)
    v = np.linspace(-1.0, 2.0, 6)
    two = apply_semigroup(s, apply_semigroup(t, v, gen), gen).coeffs
    np.testing.assert_allclose(two, apply_semigroup(s + t, v, gen).coeffs, rtol=1e-13, atol=1e-14)
    assert norm(apply_semigroup(t, v, gen)) <= norm(v)


def test_generator_examples():
    gen = DiagonalGenerator.dirichlet_laplacian(3)
    e1 = basis_vector(1, 3)
    np.testing.assert_array_equal(apply_generator_adjoint(e1, gen).coeffs, [-np.pi**2, 0.0, 0.0])
    assert graph_norm(e1, gen) == pytest.approx(np.sqrt(1.0 + np.pi**4))
    z = DiagonalGenerator.zero(3)
    v = np.array([1.0, 2.0, 2.0])
    assert not np.any(apply_generator_adjoint(v, z).coeffs)
    assert graph_norm(v, z) == pytest.approx(3.0)
    assert graph_norm(np.zeros(3), gen) == 0.0


def test_generator_validation():
    with pytest.raises(ValueError):
        DiagonalGenerator([-1.0, 2.0])
    with pytest.raises(ValueError):
        DiagonalGenerator([np.inf])


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5, 0.75, 1.0])
def test_holder_constant_matches_grid_sup(alpha):
    assert holder_constant(alpha) == pytest.approx(holder_sup_constant(alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9, 1.0])
def test_holder_bound_on_sampled_pairs(alpha):
    gen = DiagonalGenerator.dirichlet_laplacian(16)
    rng = np.random.default_rng(7)
    C = holder_constant(alpha)
    for _ in range(2000):
        s, t = np.sort(rng.uniform(0, 1, 2))
        k = rng.integers(1, 17)
        e = basis_vector(int(k), 16)
        diff = norm(apply_semigroup(t, e, gen).coeffs - apply_semigroup(s, e, gen).coeffs)
        assert diff <= C * (t - s) ** alpha * gen.mu[k - 1] ** alpha * (1 + 1e-12)
