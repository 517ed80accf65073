import numpy as np
import pytest

from oracles import linear_path_qv
from regcalc.convolution import ConvolutionSpec, compute_remainder_Y, simulate_mild
from regcalc.noise import QSpectrum, TimeGrid, sample_brownian, sample_fbm, sample_q_wiener
from regcalc.regular_calculus import (
    EpsLadder,
    RefinementError,
    a_eps_curve,
    a_eps_statistic,
    chi_cov_eps,
    covariation_eps,
    fit_rate,
    forward_integral_eps,
    ito_sum,
    scalar_qv_eps,
    tensor_cov_eps,
    young_integral,
)
from regcalc.semigroup import DiagonalGenerator

G = TimeGrid(1.0, 2.0**-12)
LADDER = EpsLadder((4, 16, 64), G)


def bm(i=0, grid=G):
    return sample_brownian(grid, 99, i).values


def test_ladder_validation():
    np.testing.assert_allclose(LADDER.values, np.array([4, 16, 64]) * G.dt)
    for bad in [(4, 16), (4, 4, 16), (2, 8, 16), (4, 16, 2048)]:
        with pytest.raises(ValueError):
            EpsLadder(bad, G)


def test_forward_constant_integrand_tracks_path():
    devs = np.median([forward_integral_eps(np.ones(G.J + 1), bm(i), LADDER, grid=G).sup_deviation(bm(i)) for i in range(50)], axis=0)
    assert devs[0] < devs[1] < devs[2]


def test_forward_polynomial_pair():
    e = 4 * G.dt
    Y = G.times[:, None] ** 2 * np.eye(3)[0]
    v = forward_integral_eps(G.times, Y, e, grid=G).final[0]
    assert v[0] == pytest.approx(2.0 / 3.0, abs=2 * e)
    assert v[1] == v[2] == 0.0


def test_off_grid_eps_rejected():
    with pytest.raises(ValueError):
        forward_integral_eps(np.ones(G.J + 1), bm(), 1e-3, grid=G)


def test_ito_sum_examples():
    ends = []
    for i in range(200):
        w = bm(i)
        ends.append(ito_sum(w, w, grid=G)[-1] - 0.5 * (w[-1] ** 2 - 1.0))
    assert abs(np.mean(ends)) < 0.01 and np.std(ends) < 0.05
    assert not np.any(ito_sum(np.zeros(G.J + 1), bm(), grid=G))
    assert ito_sum(G.times, G.times**2, grid=G)[-1] == pytest.approx(2.0 / 3.0, abs=2 * G.dt)


def test_covariation_examples():
    w = bm()
    qv = covariation_eps(w, w, LADDER, grid=G)
    assert abs(qv.final[0] - 1.0) < 0.15
    g = TimeGrid(1.0, 1.0 / 4000)
    v = scalar_qv_eps(g.times[:, None] * np.eye(2)[0], 0.01, grid=g).final[0]
    assert v == pytest.approx(linear_path_qv(0.01, 1.0), rel=1e-3)
    assert not np.any(covariation_eps(np.full(G.J + 1, 3.0), w, LADDER, grid=G).final)


def test_boundary_convention():
    w = bm()
    for est in (forward_integral_eps(w, w, LADDER, grid=G), covariation_eps(w, w, LADDER, grid=G)):
        assert all(c[0] == 0.0 for c in est.curves)


def test_unknown_norm_tag():
    with pytest.raises(ValueError):
        scalar_qv_eps(np.zeros((G.J + 1, 2)), LADDER, norm="L1")


def test_tensor_cov_examples():
    q = QSpectrum.power_law(3)
    fins = np.array([tensor_cov_eps(W, W, 4 * G.dt, grid=G).final[0] for W in (sample_q_wiener(G, q, 5, i).values for i in range(100))])
    med = np.median(fins, axis=0)
    np.testing.assert_allclose(np.diag(med), q.lam, rtol=0.1)
    assert np.max(np.abs(med - np.diag(np.diag(med)))) < 0.05
    det = np.sin(G.times)[:, None] * np.ones(3)
    ent = [np.max(np.abs(tensor_cov_eps(det, sample_q_wiener(G, q, 6, i).values, LADDER, grid=G).final), axis=(1, 2)) for i in range(40)]
    m = np.median(ent, axis=0)
    assert m[0] < m[1] < m[2]
    const = np.ones((G.J + 1, 3))
    assert not np.any(tensor_cov_eps(const, const, LADDER, grid=G).final)
    with pytest.raises(ValueError):
        tensor_cov_eps(const, np.ones((G.J + 1, 2)), LADDER, grid=G)


def test_chi_cov_examples():
    w = bm()
    X = np.zeros((G.J + 1, 3))
    X[:, 0] = w
    phi = np.zeros((3, 3))
    phi[0, 0] = 1.0
    c = chi_cov_eps(X, X, phi, LADDER, grid=G)
    np.testing.assert_allclose(c.curves[0], covariation_eps(w, w, LADDER, grid=G).curves[0])
    phi2 = np.zeros((3, 3))
    phi2[1, 1] = phi2[2, 1] = 1.0
    assert not np.any(chi_cov_eps(X, X, phi2, LADDER, grid=G).final)
    with pytest.raises(ValueError):
        chi_cov_eps(X, X, np.full((3, 3), np.nan), LADDER, grid=G)


def _remainder(i, n=8):
    spec = ConvolutionSpec(np.eye(n)[0], DiagonalGenerator.dirichlet_laplacian(n), QSpectrum.power_law(n), sigma=np.ones(n))
    p = simulate_mild(spec, sample_q_wiener(G, spec.q, 31, i))
    return p, compute_remainder_Y(p)


def test_chi_cov_of_remainder_vanishes():
    vals = []
    for i in range(30):
        _, Y = _remainder(i)
        phi = np.diag(DiagonalGenerator.dirichlet_laplacian(8).dual_weights ** 2)
        vals.append(np.abs(chi_cov_eps(Y, Y, phi, LADDER).final))
    m = np.median(vals, axis=0)
    assert m[0] < m[1] < m[2]


def test_a_eps_examples():
    gen = DiagonalGenerator.dirichlet_laplacian(3)
    const = np.ones((G.J + 1, 3))
    assert a_eps_statistic(const, const, 4 * G.dt, gen, grid=G) == 0.0
    ends = []
    for i in range(100):
        X = np.zeros((G.J + 1, 3))
        X[:, 0] = bm(i)
        ends.append(a_eps_statistic(X, X, 4 * G.dt, gen, grid=G))
    assert np.median(ends) == pytest.approx(1.0 / (1.0 + np.pi**4), rel=0.1)
    for i in range(20):
        p, Y = _remainder(i)
        for e in LADDER.values:
            assert a_eps_statistic(Y, Y, e, p.spec.gen) <= 1.05 * e * np.max(np.sum(p.X**2, axis=1))


def test_bilinearity_positivity_cauchy_schwarz():
    q = QSpectrum.power_law(4)
    gen = DiagonalGenerator.dirichlet_laplacian(4)
    X, Y, Z = (sample_q_wiener(G, q, 77, i).values for i in range(3))
    a, b = 1.7, -0.4
    for est in (forward_integral_eps, covariation_eps):
        x, y, z = X[:, 0], Y[:, 0], Z[:, 0]
        lhs = est(a * x + b * z, y, LADDER, grid=G).final
        rhs = a * est(x, y, LADDER, grid=G).final + b * est(z, y, LADDER, grid=G).final
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    lhs = tensor_cov_eps(a * X + b * Z, Y, LADDER, grid=G).final
    rhs = a * tensor_cov_eps(X, Y, LADDER, grid=G).final + b * tensor_cov_eps(Z, Y, LADDER, grid=G).final
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    for e in LADDER.values:
        assert np.all(np.diff(scalar_qv_eps(X, e, grid=G).curves[0]) >= 0)
        axy, axx, ayy = (a_eps_curve(P, R, e, gen, grid=G) for P, R in ((X, Y), (X, X), (Y, Y)))
        assert np.all(np.diff(axy) >= 0)
        assert np.all(axy**2 <= axx * ayy * (1 + 1e-12) + 1e-300)


def test_young_trivial_cases():
    y = np.sin(3 * G.times)
    r = young_integral(G.times, y, grid=G)
    exact = np.sin(3.0) + (np.cos(3.0) - 1.0) / 3.0  # int t d(sin 3t) = [t sin 3t] - int sin 3t dt
    assert r.value == pytest.approx(exact, abs=1e-6)
    B = sample_fbm(TimeGrid(1.0, 2.0**-10), 0.75, 3, 0).values
    c = young_integral(np.full(B.size, 2.5), B, grid=TimeGrid(1.0, 2.0**-10))
    assert c.value == pytest.approx(2.5 * (B[-1] - B[0]), rel=1e-13)


def test_young_gate_and_refinement_error():
    w = bm()
    with pytest.raises(ValueError):
        young_integral(w, w, grid=G)
    g = TimeGrid(1.0, 2.0**-10)
    B = sample_fbm(g, 0.75, 3, 1).values
    with pytest.raises(RefinementError):
        young_integral(B, B, grid=g, tol=1e-9)


def test_young_fbm_chain_rule():
    g = TimeGrid(1.0, 2.0**-13)
    rel = []
    for i in range(20):
        B = sample_fbm(g, 0.75, 12, i).values
        rel.append(abs(young_integral(B, B, grid=g).value / (0.5 * B[-1] ** 2) - 1.0))
    assert np.median(rel) < 1e-3


def test_fit_rate():
    e = np.array([1e-3, 4e-3, 1.6e-2])
    assert fit_rate(e, 3 * e**0.5) == pytest.approx(0.5)
    assert np.isnan(fit_rate(e, [1.0, 0.0, 2.0]))
