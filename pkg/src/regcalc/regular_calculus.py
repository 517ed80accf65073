"""Regularized (epsilon) estimators of forward integrals and covariations.

All estimators share one discretization. On the grid t_j = j dt and for
eps = m dt,

    I_eps(t_n) = sum_{j < n} dt * f(X(t_j), (Y(t_j + eps) - Y(t_j)) / eps),

with paths frozen at X(T) beyond T. Every curve is 0 at t = 0 and is exactly
bilinear in (X, Y).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .noise import TimeGrid, holder_exponent_estimate
from .semigroup import DiagonalGenerator

__all__ = [
    "EpsLadder",
    "RefinementError",
    "EpsEstimate",
    "YoungResult",
    "forward_integral_eps",
    "ito_sum",
    "covariation_eps",
    "scalar_qv_eps",
    "tensor_cov_eps",
    "chi_cov_eps",
    "a_eps_curve",
    "a_eps_statistic",
    "a_eps_ladder",
    "young_integral",
    "fit_rate",
    "median_sup",
]

MIN_LADDER_MULTIPLE = 4


class RefinementError(RuntimeError):
    """Riemann sums on successive grids failed the Cauchy criterion."""


@dataclass(frozen=True)
class EpsLadder:
    """Regularization scales eps = m dt for strictly increasing multiples m."""

    multiples: tuple
    grid: TimeGrid

    def __post_init__(self):
        ms = tuple(int(m) for m in self.multiples)
        if len(ms) < 3:
            raise ValueError("an eps ladder needs at least 3 rungs")
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError(f"ladder multiples must be strictly increasing, got {ms}")
        if ms[0] < MIN_LADDER_MULTIPLE:
            raise ValueError(f"ladder multiples must be >= {MIN_LADDER_MULTIPLE}, got {ms[0]}")
        if ms[-1] * self.grid.dt >= self.grid.T / 4:
            raise ValueError(f"largest eps {ms[-1] * self.grid.dt} must be below T/4")
        object.__setattr__(self, "multiples", ms)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.multiples) * self.grid.dt

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.multiples)


@dataclass
class EpsEstimate:
    """Curves of one estimator, one per eps, on the common grid."""

    name: str
    eps: np.ndarray
    curves: list
    grid: TimeGrid
    flags: dict = field(default_factory=dict)

    def curve(self, eps: Optional[float] = None) -> np.ndarray:
        if eps is None:
            if len(self.curves) != 1:
                raise ValueError("several eps present; pass one")
            return self.curves[0]
        i = int(np.argmin(np.abs(self.eps - eps)))
        return self.curves[i]

    @property
    def final(self) -> np.ndarray:
        """Values at t = T, one row per eps."""
        return np.array([c[-1] for c in self.curves])

    def sup_deviation(self, reference) -> np.ndarray:
        """sup_t |curve - reference| per eps (norm over trailing axes)."""
        ref = np.asarray(reference, dtype=float)
        out = []
        for c in self.curves:
            d = np.abs(c - ref)
            if d.ndim > 1:
                d = np.sqrt(np.sum(d.reshape(d.shape[0], -1) ** 2, axis=1))
            out.append(float(d.max()))
        return np.asarray(out)

    @property
    def slope(self) -> float:
        """Fitted rate of log|value(T)| against log eps."""
        vals = self.final
        if vals.ndim > 1:
            vals = np.sqrt(np.sum(vals.reshape(len(vals), -1) ** 2, axis=1))
        return fit_rate(self.eps, np.abs(vals))


def fit_rate(eps: Sequence[float], values: Sequence[float]) -> float:
    eps, values = np.asarray(eps, float), np.asarray(values, float)
    if len(eps) < 2 or np.any(values <= 0):
        return float("nan")
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])


def median_sup(stats: np.ndarray) -> np.ndarray:
    """Median over paths (axis 0) of per-path sup statistics."""
    return np.median(np.asarray(stats, dtype=float), axis=0)


def _values_grid(P, grid: Optional[TimeGrid]):
    if hasattr(P, "values") and hasattr(P, "grid"):
        vals, g = np.asarray(P.values, dtype=float), P.grid
    elif hasattr(P, "X") and hasattr(P, "grid"):
        vals, g = np.asarray(P.X, dtype=float), P.grid
    else:
        vals, g = np.asarray(P, dtype=float), grid
    if g is None:
        raise ValueError("raw arrays need an explicit grid")
    if vals.shape[0] != g.J + 1:
        raise ValueError(f"path has {vals.shape[0]} nodes, grid has {g.J + 1}")
    return vals, g


def _common(X, Y, grid):
    x, gx = _values_grid(X, grid)
    y, gy = _values_grid(Y, grid if grid is not None else gx)
    if gx != gy:
        raise ValueError("paths live on different grids")
    return x, y, gx


def _multiples(eps, grid: TimeGrid) -> list:
    if isinstance(eps, EpsLadder):
        if eps.grid != grid:
            raise ValueError("ladder grid differs from path grid")
        return list(eps.multiples)
    if np.ndim(eps) == 0:
        return [grid.multiple(float(eps))]
    return [grid.multiple(float(e)) for e in eps]


def _incr(values: np.ndarray, m: int) -> np.ndarray:
    """values(t_j + m dt) - values(t_j) for j < J, frozen at T."""
    J = values.shape[0] - 1
    idx = np.minimum(np.arange(J) + m, J)
    return values[idx] - values[:-1]


def _accumulate(integrand: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros((integrand.shape[0] + 1,) + integrand.shape[1:])
    np.cumsum(integrand * dt, axis=0, out=out[1:])
    return out


def _apply(x: np.ndarray, dy: np.ndarray, pairing: bool) -> np.ndarray:
    """Action of the integrand on an increment: scalar, diagonal operator or pairing."""
    if x.ndim == 1 and dy.ndim == 2:
        return x[:, None] * dy
    if x.ndim == 2 and dy.ndim == 1:
        return x * dy[:, None]
    if pairing:
        if x.ndim != 2 or dy.shape != x.shape:
            raise ValueError("pairing needs two vector paths of equal width")
        return np.einsum("jk,jk->j", x, dy)
    if x.ndim == 3:
        return np.einsum("jkl,jl->jk", x, dy)
    if x.shape != dy.shape:
        raise ValueError(f"integrand {x.shape} and increment {dy.shape} do not match")
    return x * dy


def _estimate(name, grid, ms, fn) -> EpsEstimate:
    curves = [fn(m, m * grid.dt) for m in ms]
    return EpsEstimate(name, np.asarray(ms) * grid.dt, curves, grid)


def forward_integral_eps(X, Y, eps, grid: Optional[TimeGrid] = None, pairing: bool = False) -> EpsEstimate:
    """int_0^t X(r) (Y(r + eps) - Y(r)) / eps dr.

    X may be scalar, a vector path (diagonal operator, or the functional
    <X, .> when pairing=True) or a (J+1, N, N) operator path.
    """
    x, y, g = _common(X, Y, grid)
    ms = _multiples(eps, g)
    return _estimate("forward_integral", g, ms, lambda m, e: _accumulate(_apply(x[:-1], _incr(y, m), pairing) / e, g.dt))


def ito_sum(X, M, grid: Optional[TimeGrid] = None, pairing: bool = False) -> np.ndarray:
    """Left-point sums sum_{j<n} X(t_j) (M(t_{j+1}) - M(t_j))."""
    x, mv, g = _common(X, M, grid)
    inc = _apply(x[:-1], np.diff(mv, axis=0), pairing)
    out = np.zeros((g.J + 1,) + inc.shape[1:])
    np.cumsum(inc, axis=0, out=out[1:])
    return out


def covariation_eps(X, Y, eps, grid: Optional[TimeGrid] = None) -> EpsEstimate:
    """int_0^t (X(r+eps) - X(r)) (Y(r+eps) - Y(r)) / eps dr for real paths."""
    x, y, g = _common(X, Y, grid)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("covariation_eps takes real-valued paths")
    ms = _multiples(eps, g)
    return _estimate("covariation", g, ms, lambda m, e: _accumulate(_incr(x, m) * _incr(y, m) / e, g.dt))


def _weights(norm: str, gen: Optional[DiagonalGenerator], n: int) -> Optional[np.ndarray]:
    if norm == "H":
        return None
    if norm in ("nu0*", "dual_graph", "chi_bar"):
        if gen is None:
            raise ValueError(f"norm {norm!r} needs a generator")
        if gen.size != n:
            raise ValueError("generator size differs from path width")
        return gen.dual_weights
    raise ValueError(f"unknown norm tag {norm!r}")


def scalar_qv_eps(
    X, eps, norm: str = "H", gen: Optional[DiagonalGenerator] = None, grid: Optional[TimeGrid] = None
) -> EpsEstimate:
    """int_0^t |X(r+eps) - X(r)|^2 / eps dr in the H norm or the dual graph norm."""
    x, g = _values_grid(X, grid)
    x2 = x if x.ndim == 2 else x[:, None]
    w = _weights(norm, gen, x2.shape[1])

    def curve(m, e):
        d = _incr(x2, m)
        if w is not None:
            d = d * w
        return _accumulate(np.sum(d**2, axis=1) / e, g.dt)

    return _estimate(f"scalar_qv[{norm}]", g, _multiples(eps, g), curve)


def tensor_cov_eps(X, Y, eps, grid: Optional[TimeGrid] = None) -> EpsEstimate:
    """int_0^t (dX_eps (x) dY_eps) / eps dr as a (J+1, N, N) tensor curve."""
    x, y, g = _common(X, Y, grid)
    if x.ndim != 2 or y.shape != x.shape:
        raise ValueError("tensor_cov_eps needs two vector paths of equal width")

    def curve(m, e):
        return _accumulate(np.einsum("ji,jk->jik", _incr(x, m), _incr(y, m)) / e, g.dt)

    return _estimate("tensor_covariation", g, _multiples(eps, g), curve)


def chi_cov_eps(X, Y, phi, eps, grid: Optional[TimeGrid] = None) -> EpsEstimate:
    """[X, Y]^eps evaluated on the functional phi: int <phi, dX (x) dY> / eps dr."""
    x, y, g = _common(X, Y, grid)
    if x.ndim != 2 or y.shape != x.shape:
        raise ValueError("chi_cov_eps needs two vector paths of equal width")
    ph = np.asarray(getattr(phi, "mat", phi), dtype=float)
    n = x.shape[1]
    if ph.shape != (n, n) or not np.all(np.isfinite(ph)):
        raise ValueError(f"phi must be a finite {n} x {n} tensor")

    def curve(m, e):
        return _accumulate(np.einsum("ji,ik,jk->j", _incr(x, m), ph, _incr(y, m)) / e, g.dt)

    return _estimate("chi_covariation", g, _multiples(eps, g), curve)


def a_eps_curve(
    X, Y, eps: float, gen: Optional[DiagonalGenerator] = None, chi: str = "chi_bar", grid: Optional[TimeGrid] = None
) -> np.ndarray:
    """Running A(eps): int_0^t |dX_eps (x) dY_eps|_{chi*} / eps dr.

    For chi_bar = D(A*) (x)_pi D(A*) the dual norm of a product tensor is the
    product of the dual graph norms of the factors. chi="H" uses |.|_H.
    """
    x, y, g = _common(X, Y, grid)
    if x.ndim == 1:
        x, y = x[:, None], y[:, None]
    w = _weights(chi, gen, x.shape[1])
    (m,) = _multiples(eps, g)
    dx, dy = _incr(x, m), _incr(y, m)
    if w is not None:
        dx, dy = dx * w, dy * w
    return _accumulate(np.linalg.norm(dx, axis=1) * np.linalg.norm(dy, axis=1) / (m * g.dt), g.dt)


def a_eps_statistic(X, Y, eps: float, gen: Optional[DiagonalGenerator] = None, chi: str = "chi_bar", grid=None) -> float:
    return float(a_eps_curve(X, Y, eps, gen, chi, grid)[-1])


def a_eps_ladder(X, Y, eps, gen: Optional[DiagonalGenerator] = None, chi: str = "chi_bar", grid=None) -> np.ndarray:
    _, g = _values_grid(X, grid)
    return np.array([a_eps_statistic(X, Y, m * g.dt, gen, chi, grid) for m in _multiples(eps, g)])


@dataclass(frozen=True)
class YoungResult:
    value: float
    level_sums: np.ndarray
    steps: np.ndarray
    rate: float
    cauchy: float
    holder: tuple

    @property
    def raw(self) -> float:
        """Left-point sum on the finest level."""
        return float(self.level_sums[-1])


def _holder_or_lipschitz(v: np.ndarray, dt: float) -> float:
    try:
        return min(1.0, holder_exponent_estimate(v, dt=dt))
    except ValueError:
        return 1.0


def young_integral(
    X, Y, levels: int = 6, grid: Optional[TimeGrid] = None, tol: float = 1e-2, rate: Optional[float] = None
) -> YoungResult:
    """int_0^T X d^y Y from left-point sums on dyadic refinements of the grid.

    Level l uses every 2^(levels-1-l)-th node; the finest level is the grid
    itself. The left-point error decays like h^(a+g-1) with a, g the Hoelder
    exponents, so the last two levels are combined by Richardson
    extrapolation with that rate (estimated when not given). The Cauchy
    criterion compares the extrapolants of the two finest level pairs.
    """
    x, y, g = _common(X, Y, grid)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("young_integral takes real-valued paths")
    if levels < 3:
        raise ValueError("need at least 3 refinement levels")
    steps = 2 ** np.arange(levels - 1, -1, -1)
    if g.J % steps[0]:
        raise ValueError(f"J={g.J} is not divisible by {steps[0]}")
    ax, ay = _holder_or_lipschitz(x, g.dt), _holder_or_lipschitz(y, g.dt)
    if ax + ay <= 1.0:
        raise ValueError(f"Hoelder exponents {ax:.3f} + {ay:.3f} do not exceed 1; Young integral undefined")
    sums = np.array([np.dot(x[::s][:-1], np.diff(y[::s])) for s in steps])
    p = min(1.0, ax + ay - 1.0) if rate is None else float(rate)
    r = 2.0**p
    ext = sums[1:] + (sums[1:] - sums[:-1]) / (r - 1.0)
    scale = max(abs(ext[-1]), np.max(np.abs(x)) * np.max(np.abs(y - y[0])), np.finfo(float).tiny)
    cauchy = float(abs(ext[-1] - ext[-2]) / scale)
    if cauchy > tol:
        raise RefinementError(f"Young sums not converged: successive levels differ by {cauchy:.3g} (relative)")
    return YoungResult(float(ext[-1]), sums, steps * g.dt, p, cauchy, (ax, ay))
