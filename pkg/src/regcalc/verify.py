"""Pathwise checks of the chain rule, Ito formulas, Dirichlet structure and
the Fukushima-type decomposition for convolution-type processes.

Each check works on one path and returns a DecompositionReport holding one
statistic per eps (or a single residual). Monte Carlo aggregation is done by
merge_reports, which takes medians over paths in path order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .convolution import MildPath, _cumtrapz
from .regular_calculus import (
    _multiples,
    _values_grid,
    a_eps_ladder,
    chi_cov_eps,
    covariation_eps,
    ito_sum,
)
from .spectral_space import trace_pair_path

__all__ = [
    "TestFunction",
    "DecompositionReport",
    "constant_function",
    "linear_functional",
    "squared_functional",
    "c01_power_family",
    "classical_bracket",
    "monotone_decrease",
    "merge_reports",
    "chain_rule_check",
    "ito_mild_residual",
    "ito_chi_residual",
    "fukushima_orthogonality",
    "dirichlet_structure_report",
]


@dataclass(frozen=True)
class TestFunction:
    """F(t, x) with its derivatives, all vectorized over grid nodes.

    Callables take t of shape (n,) and x of shape (n, N) and return arrays of
    shape (n,), (n,), (n, N) and (n, N, N) respectively.
    """

    __test__ = False  # keep pytest from collecting this class

    value: Callable
    time_derivative: Callable
    gradient: Callable
    hessian: Optional[Callable] = None
    tag: str = "C12"

    def __post_init__(self):
        if self.tag not in ("C01", "C12"):
            raise ValueError(f"unknown smoothness tag {self.tag!r}")
        if self.tag == "C12" and self.hessian is None:
            raise ValueError("a C12 test function needs a Hessian")


def constant_function(c: float, tag: str = "C12") -> TestFunction:
    return TestFunction(
        value=lambda t, x: np.full(len(t), float(c)),
        time_derivative=lambda t, x: np.zeros(len(t)),
        gradient=lambda t, x: np.zeros_like(x),
        hessian=lambda t, x: np.zeros((len(t), x.shape[1], x.shape[1])),
        tag=tag,
    )


def linear_functional(z) -> TestFunction:
    z = np.asarray(z, dtype=float)
    return TestFunction(
        value=lambda t, x: x @ z,
        time_derivative=lambda t, x: np.zeros(len(t)),
        gradient=lambda t, x: np.broadcast_to(z, x.shape).copy(),
        hessian=lambda t, x: np.zeros((len(t), z.size, z.size)),
    )


def squared_functional(z) -> TestFunction:
    """F(t, x) = <x, z>^2."""
    z = np.asarray(z, dtype=float)
    zz = 2.0 * np.outer(z, z)
    return TestFunction(
        value=lambda t, x: (x @ z) ** 2,
        time_derivative=lambda t, x: np.zeros(len(t)),
        gradient=lambda t, x: 2.0 * (x @ z)[:, None] * z[None, :],
        hessian=lambda t, x: np.broadcast_to(zz, (len(t),) + zz.shape).copy(),
    )


def c01_power_family(z, radius: float = 0.0, time_factor: Callable = lambda t: 1.0 + t) -> TestFunction:
    """F(t, x) = g(t) h(<x, z>) with h'(u) = sqrt(|u| + radius).

    h is C^1 but h' has unbounded difference quotients at 0 when radius = 0
    (bounded but large ones for small radius), so F is C^{0,1} and not C^{1,2}.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    z = np.asarray(z, dtype=float)
    r32 = radius**1.5

    def h(u):
        return np.sign(u) * (2.0 / 3.0) * ((np.abs(u) + radius) ** 1.5 - r32)

    def dh(u):
        return np.sqrt(np.abs(u) + radius)

    return TestFunction(
        value=lambda t, x: time_factor(t) * h(x @ z),
        time_derivative=lambda t, x: np.zeros(len(t)),
        gradient=lambda t, x: (time_factor(t) * dh(x @ z))[:, None] * z[None, :],
        tag="C01",
    )


@dataclass
class DecompositionReport:
    experiment: str
    eps: np.ndarray
    stats: dict
    verdict: Optional[bool] = None
    curves: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def monotone_decrease(values_by_eps: Sequence[float]) -> bool:
    """True when the statistic strictly decreases as eps shrinks.

    values are ordered by increasing eps, so this is a strict increase.
    """
    v = np.asarray(values_by_eps, dtype=float)
    return bool(np.all(np.diff(v) > 0))


def merge_reports(reports: Sequence[DecompositionReport], key: str) -> tuple:
    """Per-path table (paths x eps) of stats[key] and its median over paths."""
    table = np.array([np.atleast_1d(r.stats[key]) for r in reports], dtype=float)
    return table, np.median(table, axis=0)


def _grad_values(F: TestFunction, t: np.ndarray, X: np.ndarray) -> np.ndarray:
    g = np.asarray(F.gradient(t, X), dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient of F is not finite on the path")
    return g


def classical_bracket(path: MildPath) -> np.ndarray:
    """[M, M]^cl(t) = int_0^t (sigma Q^{1/2})(sigma Q^{1/2})^* dr, shape (J+1, N, N)."""
    G = _covariance_rates(path)
    if callable(path.spec.sigma):
        return _cumtrapz(np.array(G), path.grid.dt)
    return path.grid.times[:, None, None] * G[0][None]


def _covariance_rates(path: MildPath) -> np.ndarray:
    times = path.grid.times
    if callable(path.spec.sigma):
        return np.array([path.spec.covariance_rate(t) for t in times])
    G0 = path.spec.covariance_rate(0.0)
    return np.broadcast_to(G0, (len(times),) + G0.shape)


def chain_rule_check(Z, M, N, bracket, eps, grid=None) -> DecompositionReport:
    """[X, N] against int <Z, d[M, N]^cl> for X = int <Z, dM>.

    bracket is the analytic vector curve [M, N]^cl (one entry per mode).
    """
    z, g = _values_grid(Z, grid)
    m, _ = _values_grid(M, g)
    n, _ = _values_grid(N, g)
    br = np.asarray(bracket, dtype=float)
    X = ito_sum(z, m, grid=g, pairing=True)
    ref = np.zeros(g.J + 1)
    np.cumsum(np.einsum("jk,jk->j", z[:-1], np.diff(br, axis=0)), out=ref[1:])
    est = covariation_eps(X, n, eps, grid=g)
    dev = est.sup_deviation(ref)
    return DecompositionReport(
        "chain_rule",
        est.eps,
        {"sup_residual": dev, "reference_final": ref[-1], "estimate_final": est.final},
        monotone_decrease(dev),
        curves={"reference": ref},
    )


def _ito_terms(path: MildPath, F: TestFunction):
    times = path.grid.times
    X = path.X
    dt = path.grid.dt
    grad = _grad_values(F, times, X)
    lhs = F.value(times, X) - F.value(times[:1], X[:1])[0]
    t_term = _cumtrapz(np.asarray(F.time_derivative(times, X), dtype=float), dt)
    gen_term = _cumtrapz(np.einsum("jk,jk->j", grad * (-path.spec.gen.mu), X), dt)
    b = path.spec.b0_values(times)
    if path.spec.feedback is not None:
        b = b + path.spec.feedback * X
    drift_term = _cumtrapz(np.einsum("jk,jk->j", grad, b), dt)
    mart_term = ito_sum(grad, path.stoch_int, grid=path.grid, pairing=True)
    return lhs, t_term + gen_term + drift_term + mart_term


def ito_mild_residual(path: MildPath, F: TestFunction, eps=None, drop_trace: bool = False) -> DecompositionReport:
    """Residual of the Ito formula for mild processes, node by node.

    F(t, X(t)) - F(0, x) minus the time-derivative, generator, drift, trace and
    martingale integrals. drop_trace omits the trace term (a control).
    """
    if F.hessian is None:
        raise ValueError("the Ito formula needs a Hessian (C12 test function)")
    lhs, rhs = _ito_terms(path, F)
    if not drop_trace:
        hess = np.asarray(F.hessian(path.grid.times, path.X), dtype=float)
        rhs = rhs + 0.5 * _cumtrapz(trace_pair_path(_covariance_rates(path), hess), path.grid.dt)
    res = lhs - rhs
    sup = float(np.max(np.abs(res)))
    return DecompositionReport("ito_mild", np.atleast_1d(eps if eps is not None else np.nan), {"sup_residual": sup}, curves={"residual": res})


def ito_chi_residual(path: MildPath, F: TestFunction, C, eps=None) -> DecompositionReport:
    """Same residual with the Hessian term as a Stieltjes pairing against C.

    C is a (J+1, N, N) bounded-variation tensor curve, normally the
    classical bracket [M, M]^cl.
    """
    if F.hessian is None:
        raise ValueError("the Ito formula needs a Hessian (C12 test function)")
    C = np.asarray(C, dtype=float)
    n = path.spec.size
    if C.shape != (path.grid.J + 1, n, n):
        raise ValueError(f"C must have shape {(path.grid.J + 1, n, n)}")
    tr = np.trace(C, axis1=1, axis2=2)
    if np.any(np.diff(tr) < -1e-12 * max(1.0, np.abs(tr).max())):
        raise ValueError("C is not a bracket curve: its trace decreases")
    lhs, rhs = _ito_terms(path, F)
    hess = np.asarray(F.hessian(path.grid.times, path.X), dtype=float)
    dC = np.diff(C, axis=0)
    mid = 0.5 * (hess[1:] + hess[:-1])
    pair = np.zeros(path.grid.J + 1)
    np.cumsum(trace_pair_path(dC, mid), out=pair[1:])
    res = lhs - (rhs + 0.5 * pair)
    return DecompositionReport(
        "ito_chi", np.atleast_1d(eps if eps is not None else np.nan), {"sup_residual": float(np.max(np.abs(res)))}, curves={"residual": res}
    )


def fukushima_orthogonality(path: MildPath, F: TestFunction, N, eps, power_ratio: float = 5.0) -> DecompositionReport:
    """[A_F, N]^eps for A_F = F(t, X) - F(0, x) - int <d_x F, dM>.

    The control is [F(., X), N]^eps, which must stay away from 0 when N is
    correlated with the driving noise.
    """
    g = path.grid
    n, _ = _values_grid(N, g)
    times = g.times
    grad = _grad_values(F, times, path.X)
    Fx = np.asarray(F.value(times, path.X), dtype=float)
    R = Fx[0] + ito_sum(grad, path.stoch_int, grid=g, pairing=True)
    A_F = Fx - R
    ortho = covariation_eps(A_F, n, eps, grid=g)
    control = covariation_eps(Fx, n, eps, grid=g)
    o = ortho.sup_deviation(0.0)
    c = control.sup_deviation(0.0)
    verdict = monotone_decrease(o) and o[0] * power_ratio < c[0]
    return DecompositionReport(
        "fukushima", ortho.eps, {"orthogonality": o, "control": c}, verdict, curves={"A_F": A_F}
    )


def dirichlet_structure_report(
    path: MildPath,
    eps,
    phis: Optional[Sequence[tuple]] = None,
    z=None,
    martingales: Optional[dict] = None,
) -> DecompositionReport:
    """Three checks of the decomposition X = M + (V + Y).

    (a) A(eps) of V + Y in the chi-bar norm; (b) chi-covariation of X against
    that of M on a panel of basis functionals e_i* (x) e_j*, as a gap
    relative to T * sqrt(G_ii G_jj); (c) covariation of <V + Y, z> with the
    given real martingales.
    """
    g = path.grid
    n = path.spec.size
    gen = path.spec.gen
    ms = _multiples(eps, g)
    eps_vals = np.asarray(ms) * g.dt
    A = path.X - path.M
    stats = {"a_eps_VY": a_eps_ladder(A, A, eps_vals, gen, grid=g)}

    G = path.spec.covariance_rate(0.0)
    if phis is None:
        phis = [(i, i) for i in range(min(n, 2))] + ([(0, 1)] if n > 1 else [])
    gaps = []
    for i, j in phis:
        phi = np.zeros((n, n))
        phi[i, j] = 1.0
        cx = chi_cov_eps(path.X, path.X, phi, eps_vals, grid=g)
        cm = chi_cov_eps(path.M, path.M, phi, eps_vals, grid=g)
        scale = g.T * np.sqrt(G[i, i] * G[j, j])
        gap = np.array([np.max(np.abs(a - b)) for a, b in zip(cx.curves, cm.curves)])
        gaps.append(gap / scale if scale > 0 else gap)
    stats["chi_gap"] = np.max(np.array(gaps), axis=0)

    if z is None:
        z = np.zeros(n)
        z[0] = 1.0
    pairing = A @ np.asarray(z, dtype=float)
    for name, mart in (martingales or {}).items():
        stats[f"orth_{name}"] = covariation_eps(pairing, mart, eps_vals, grid=g).sup_deviation(0.0)
    verdict = monotone_decrease(stats["a_eps_VY"])
    return DecompositionReport("dirichlet", eps_vals, stats, verdict)
