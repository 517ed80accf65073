"""Convolution-type processes X(t) = e^{tA}x + int e^{(t-r)A} b dr + int e^{(t-r)A} sigma dW_Q.

The scheme is exponential Euler per mode,

    X(t_{j+1}) = e^{-mu dt} (X(t_j) + b(t_j) dt + sigma(t_j) dW_Q(j)),

which is exact for the semigroup part and consumes the same increments dW_Q
as the running Ito sum int sigma dW_Q, so X and its martingale part live on
one realization.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.signal import lfilter

from .noise import NoisePath, QSpectrum, SamplePath, TimeGrid
from .regular_calculus import RefinementError
from .semigroup import DiagonalGenerator

__all__ = [
    "ConvolutionSpec",
    "MildPath",
    "RefinementError",
    "FractionalExtension",
    "simulate_mild",
    "compute_remainder_Y",
    "ondrejat_check",
    "simulate_fractional_extension",
    "write_mild_csv",
]

Coefficient = Union[np.ndarray, Callable[[float], np.ndarray]]


def _tabulate(coef: Optional[Coefficient], times: np.ndarray, shape: tuple) -> np.ndarray:
    """Coefficient values at every node, shape (len(times),) + shape."""
    if coef is None:
        return np.zeros((len(times),) + shape)
    if callable(coef):
        vals = np.array([np.asarray(coef(t), dtype=float) for t in times])
    else:
        vals = np.broadcast_to(np.asarray(coef, dtype=float), (len(times),) + np.shape(coef))
    if vals.shape[1:] != shape:
        raise ValueError(f"coefficient has shape {vals.shape[1:]}, expected {shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("coefficient must be bounded on [0, T]")
    return vals


@dataclass(frozen=True)
class ConvolutionSpec:
    """Data of a convolution-type process.

    b0 and sigma are constants or functions of t. sigma is either a vector
    (diagonal operator) or an N x N matrix acting on the Q-Wiener increment.
    feedback, when given, adds the diagonal state feedback b = b0 + feedback * X.
    """

    x0: np.ndarray
    gen: DiagonalGenerator
    q: QSpectrum
    b0: Optional[Coefficient] = None
    sigma: Optional[Coefficient] = None
    feedback: Optional[np.ndarray] = None

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float)
        n = self.gen.size
        if x0.shape != (n,) or self.q.size != n:
            raise ValueError(f"x0 {x0.shape}, generator ({n},) and Q ({self.q.size},) must agree")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if self.feedback is not None:
            fb = np.array(self.feedback, dtype=float)
            if fb.shape != (n,):
                raise ValueError("feedback must be a diagonal of length N")
            object.__setattr__(self, "feedback", fb)

    @property
    def size(self) -> int:
        return self.gen.size

    def sigma_values(self, times: np.ndarray) -> np.ndarray:
        if self.sigma is None:
            return np.zeros((len(times), self.size))
        probe = self.sigma(times[0]) if callable(self.sigma) else self.sigma
        shape = np.shape(probe)
        if shape not in ((self.size,), (self.size, self.size)):
            raise ValueError(f"sigma must be ({self.size},) or ({self.size}, {self.size}), got {shape}")
        return _tabulate(self.sigma, times, shape)

    def b0_values(self, times: np.ndarray) -> np.ndarray:
        return _tabulate(self.b0, times, (self.size,))

    def covariance_rate(self, t: float = 0.0) -> np.ndarray:
        """Matrix of (sigma Q^{1/2})(sigma Q^{1/2})^* at time t."""
        s = self.sigma_values(np.array([t]))[0]
        sq = np.sqrt(self.q.lam)
        g = np.diag(s * sq) if s.ndim == 1 else s * sq[None, :]
        return g @ g.T


@dataclass(frozen=True)
class MildPath:
    spec: ConvolutionSpec
    grid: TimeGrid
    X: np.ndarray
    W: NoisePath
    stoch_int: np.ndarray
    drift_int: np.ndarray
    sigma: np.ndarray = field(repr=False)

    @property
    def M(self) -> np.ndarray:
        """Martingale part x + int sigma dW_Q."""
        return self.spec.x0 + self.stoch_int

    @property
    def noise_increments(self) -> np.ndarray:
        """sigma(t_j) dW_Q(j), shape (J, N)."""
        return np.diff(self.stoch_int, axis=0)


def _apply_sigma(sig: np.ndarray, dw: np.ndarray) -> np.ndarray:
    if sig.ndim == 2:
        return sig * dw
    return np.einsum("jkl,jl->jk", sig, dw)


def simulate_mild(spec: ConvolutionSpec, noise: NoisePath, grid: Optional[TimeGrid] = None) -> MildPath:
    grid = noise.grid if grid is None else grid
    if noise.grid != grid:
        raise ValueError("noise was sampled on a different grid")
    if not noise.is_vector or noise.values.shape[1] != spec.size:
        raise ValueError(f"need a Q-Wiener path with {spec.size} modes")
    times = grid.times
    dt = grid.dt
    sig = spec.sigma_values(times[:-1])
    noise_inc = _apply_sigma(sig, noise.increments)
    b0 = spec.b0_values(times[:-1])
    c = spec.gen.decay(dt)

    J, n = grid.J, spec.size
    X = np.empty((J + 1, n))
    X[0] = spec.x0
    if spec.feedback is None:
        drift = b0 * dt
        forcing = c * (drift + noise_inc)
        for k in range(n):
            X[1:, k], _ = lfilter([1.0], [1.0, -c[k]], forcing[:, k], zi=[c[k] * spec.x0[k]])
    else:
        drift = np.empty((J, n))
        for j in range(J):
            drift[j] = (b0[j] + spec.feedback * X[j]) * dt
            X[j + 1] = c * (X[j] + drift[j] + noise_inc[j])

    stoch_int = np.zeros((J + 1, n))
    np.cumsum(noise_inc, axis=0, out=stoch_int[1:])
    drift_int = np.zeros((J + 1, n))
    np.cumsum(drift, axis=0, out=drift_int[1:])
    for a in (X, stoch_int, drift_int):
        a.setflags(write=False)
    return MildPath(spec, grid, X, noise, stoch_int, drift_int, sig)


def compute_remainder_Y(path: MildPath) -> SamplePath:
    """Y = X - int b - int sigma dW_Q - x, node by node."""
    Y = path.X - path.drift_int - path.stoch_int - path.spec.x0
    return SamplePath(path.grid, Y)


@dataclass(frozen=True)
class OndrejatResult:
    residual: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual)))


def _cumtrapz(f: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(f, dtype=float)
    np.cumsum(0.5 * dt * (f[1:] + f[:-1]), axis=0, out=out[1:])
    return out


def ondrejat_check(path: MildPath, z) -> OndrejatResult:
    """Residual <Y(t), z> - int_0^t <X(r), A* z> dr with trapezoidal quadrature."""
    z = np.asarray(z, dtype=float)
    if z.shape != (path.spec.size,):
        raise ValueError("z must be a vector of length N")
    lhs = compute_remainder_Y(path).values @ z
    rhs = _cumtrapz(path.X @ (-path.spec.gen.mu * z), path.grid.dt)
    return OndrejatResult(lhs - rhs, lhs, rhs)


@dataclass(frozen=True)
class FractionalExtension:
    X1: SamplePath
    term: SamplePath
    cauchy_rel: float


def _convolve_modes(gen: DiagonalGenerator, dt: float, modes, n_nodes: int, step: int) -> np.ndarray:
    """Left-point sums Z(t_n) = sum_{j<n} e^{(t_n - s_j)A} h dbeta_j, on every step-th node."""
    c = gen.decay(dt * step)
    out = np.zeros(((n_nodes - 1) // step + 1, gen.size))
    for h, beta in modes:
        h = np.asarray(h, dtype=float)
        db = np.diff(np.asarray(beta.values)[::step])
        forcing = c[None, :] * h[None, :] * db[:, None]
        for k in np.flatnonzero(h):
            y, _ = lfilter([1.0], [1.0, -c[k]], forcing[:, k], zi=[0.0])
            out[1:, k] += y
    return out


def simulate_fractional_extension(
    path: MildPath, modes: Sequence[tuple], tol: float = 1e-3, check: bool = True
) -> FractionalExtension:
    """X1(t) = X(t) + sum_i int_0^t e^{(t-s)A} h_i d beta_i(s) with Young-Riemann sums.

    The sums on the path grid are compared with those on the grid of twice
    the step; their relative sup distance must be below tol.
    """
    grid = path.grid
    n_nodes = grid.J + 1
    for h, beta in modes:
        if beta.grid != grid:
            raise ValueError("fractional drivers must share the path grid")
        if beta.kind == "fbm" and not (beta.hurst or 0) > 0.5:
            raise ValueError("fractional drivers need Hurst index > 1/2")
        if np.shape(h) != (path.spec.size,):
            raise ValueError("h_i must be vectors of length N")
    if not modes:
        return FractionalExtension(SamplePath(grid, path.X), SamplePath(grid, np.zeros_like(path.X)), 0.0)
    fine = _convolve_modes(path.spec.gen, grid.dt, modes, n_nodes, 1)
    rel = 0.0
    if grid.J % 2 == 0:
        coarse = _convolve_modes(path.spec.gen, grid.dt, modes, n_nodes, 2)
        scale = np.max(np.abs(fine))
        rel = float(np.max(np.abs(fine[::2] - coarse)) / scale) if scale > 0 else 0.0
    if check and rel > tol:
        raise RefinementError(
            f"Young-Riemann sums moved by {rel:.3g} (relative) between dt and 2dt; "
            "the integrand/driver Hoelder exponents may not sum above 1"
        )
    return FractionalExtension(SamplePath(grid, path.X + fine), SamplePath(grid, fine), rel)


def write_mild_csv(fh, paths: Sequence[MildPath], path_ids: Optional[Sequence[int]] = None, stride: int = 1) -> None:
    """Columns (curve, path_id, t, mode, value) for the X, Y and stoch_int curves."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["curve", "path_id", "t", "mode", "value"])
    for i, p in enumerate(paths):
        pid = i if path_ids is None else path_ids[i]
        curves = {"X": p.X, "Y": compute_remainder_Y(p).values, "stoch_int": p.stoch_int}
        times = p.grid.times
        for name, vals in curves.items():
            for j in range(0, len(times), stride):
                for k, v in enumerate(vals[j]):
                    w.writerow([name, pid, repr(float(times[j])), k + 1, repr(float(v))])
