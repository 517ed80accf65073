"""Driving noises on a uniform time grid.

Every path is generated from its own counter-based stream keyed by
(master_seed, path_index, stream), so a path never depends on how many other
paths were drawn before it or on which thread drew it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "TimeGrid",
    "QSpectrum",
    "NoisePath",
    "SamplePath",
    "Stream",
    "CovarianceFactorizationError",
    "path_rng",
    "sample_brownian",
    "sample_q_wiener",
    "sample_fbm",
    "fbm_covariance",
    "holder_exponent_estimate",
    "write_noise_csv",
]

MAX_FBM_STEPS = 2**14


class CovarianceFactorizationError(ValueError):
    """The dense fBm covariance could not be Cholesky-factorized; retry with jitter."""


class Stream:
    """Stream ids that keep the noises of one path independent."""

    W = 0
    N_INDEPENDENT = 1
    FBM = 2
    PILOT = 3


@dataclass(frozen=True)
class TimeGrid:
    T: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0):
            raise ValueError(f"need T > 0 and dt > 0, got T={self.T}, dt={self.dt}")
        J = round(self.T / self.dt)
        if J < 1 or abs(J * self.dt - self.T) > 1e-12 * self.T:
            raise ValueError(f"dt={self.dt} does not divide T={self.T}")

    @property
    def J(self) -> int:
        return round(self.T / self.dt)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.J + 1) * self.dt

    def multiple(self, eps: float) -> int:
        """Grid multiple m with eps = m * dt; rejects off-grid eps."""
        m = round(eps / self.dt)
        if m < 1 or abs(m * self.dt - eps) > 1e-9 * eps:
            raise ValueError(f"eps={eps} is not a positive multiple of dt={self.dt}")
        return m

    def coarsen(self, factor: int) -> "TimeGrid":
        if self.J % factor:
            raise ValueError(f"cannot coarsen J={self.J} by {factor}")
        return TimeGrid(self.T, self.dt * factor)

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.dt / factor)


@dataclass(frozen=True)
class QSpectrum:
    """Eigenvalues of the covariance Q on the basis of H."""

    lam: np.ndarray
    alpha_q: Optional[float] = None

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.ndim != 1 or not np.all(np.isfinite(lam)):
            raise ValueError("Q eigenvalues must be a finite 1-d sequence")
        if np.any(lam < 0):
            raise ValueError("Q eigenvalues must be non-negative")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def power_law(cls, n: int, alpha_q: float = 2.0) -> "QSpectrum":
        k = np.arange(1, n + 1, dtype=float)
        return cls(k**-alpha_q, alpha_q)

    @property
    def size(self) -> int:
        return self.lam.shape[0]

    @property
    def trace(self) -> float:
        return float(self.lam.sum())


@dataclass(frozen=True)
class NoisePath:
    """Sampled noise: values has shape (J+1,) for scalar kinds, (J+1, N) for q_wiener."""

    grid: TimeGrid
    values: np.ndarray
    kind: str
    seed: tuple = ()
    hurst: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != self.grid.J + 1:
            raise ValueError(f"values have {v.shape[0]} nodes, grid has {self.grid.J + 1}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2

    def coarsen(self, factor: int) -> "NoisePath":
        """Same realization observed on every factor-th node."""
        return NoisePath(self.grid.coarsen(factor), self.values[::factor], self.kind, self.seed, self.hurst)


@dataclass(frozen=True)
class SamplePath:
    """Grid-indexed real or H_N-valued path; shape (J+1,) or (J+1, N)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != self.grid.J + 1:
            raise ValueError(f"values have {v.shape[0]} nodes, grid has {self.grid.J + 1}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def shifted(self, m: int) -> np.ndarray:
        """values at t_j + m*dt, frozen at the end point beyond T."""
        J = self.grid.J
        idx = np.minimum(np.arange(J + 1) + m, J)
        return self.values[idx]


def path_rng(master_seed: int, path_index: int, stream: int = Stream.W) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(path_index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def _brownian_values(grid: TimeGrid, rng: np.random.Generator, width: Optional[int]) -> np.ndarray:
    shape = (grid.J,) if width is None else (grid.J, width)
    inc = rng.standard_normal(shape) * np.sqrt(grid.dt)
    out = np.zeros((grid.J + 1,) + shape[1:])
    np.cumsum(inc, axis=0, out=out[1:])
    return out


def sample_brownian(grid: TimeGrid, master_seed: int, path_index: int = 0, stream: int = Stream.W) -> NoisePath:
    rng = path_rng(master_seed, path_index, stream)
    return NoisePath(grid, _brownian_values(grid, rng, None), "brownian", (master_seed, path_index, stream))


def sample_q_wiener(
    grid: TimeGrid, q: QSpectrum, master_seed: int, path_index: int = 0, stream: int = Stream.W
) -> NoisePath:
    """Q-Wiener path: mode k is sqrt(lambda_k) times an independent Brownian motion."""
    rng = path_rng(master_seed, path_index, stream)
    w = _brownian_values(grid, rng, q.size)
    return NoisePath(grid, w * np.sqrt(q.lam), "q_wiener", (master_seed, path_index, stream))


def fbm_covariance(times: np.ndarray, hurst: float) -> np.ndarray:
    s, t = times[:, None], times[None, :]
    h2 = 2.0 * hurst
    return 0.5 * (s**h2 + t**h2 - np.abs(t - s) ** h2)


@lru_cache(maxsize=2)
def _fbm_factor(J: int, dt: float, hurst: float, jitter: float) -> np.ndarray:
    times = np.arange(1, J + 1) * dt
    cov = fbm_covariance(times, hurst)
    if jitter:
        cov[np.diag_indices_from(cov)] += jitter
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise CovarianceFactorizationError(
            f"fBm covariance (J={J}, H={hurst}) is not numerically PSD; pass a small jitter"
        ) from exc
    L.setflags(write=False)
    return L


def sample_fbm(
    grid: TimeGrid,
    hurst: float,
    master_seed: int,
    path_index: int = 0,
    stream: int = Stream.FBM,
    jitter: float = 0.0,
) -> NoisePath:
    """Exact fBm path via the Cholesky factor of its covariance on the grid."""
    if not 0.5 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0.5, 1), got {hurst}")
    if grid.J > MAX_FBM_STEPS:
        raise ValueError(f"dense fBm limited to J <= {MAX_FBM_STEPS}, got {grid.J}")
    L = _fbm_factor(grid.J, grid.dt, float(hurst), float(jitter))
    z = path_rng(master_seed, path_index, stream).standard_normal(grid.J)
    values = np.concatenate([[0.0], L @ z])
    return NoisePath(grid, values, "fbm", (master_seed, path_index, stream), hurst)


def holder_exponent_estimate(
    path, scales: Sequence[int] = (1, 2, 4, 8, 16, 32, 64), dt: Optional[float] = None, statistic: str = "mean"
) -> float:
    """Log-log slope of the increment size against the lag.

    ``statistic="mean"`` uses the mean absolute increment at each lag, which is
    unbiased for self-similar Gaussian paths. ``"max"`` uses the largest
    increment (the empirical modulus of continuity); it carries a
    sqrt(log(1/h)) factor that biases the slope low at desk-scale grids.

    scales are lags in grid steps; at least three are required.
    """
    if isinstance(path, NoisePath):
        values, dt = path.values, path.grid.dt
    else:
        values = np.asarray(path, dtype=float)
        if dt is None:
            dt = 1.0 / (values.shape[0] - 1)
    scales = np.asarray(sorted(set(int(s) for s in scales)))
    if scales.size < 3 or scales[0] < 1 or scales[-1] >= values.shape[0]:
        raise ValueError("need at least three lags in [1, J)")
    sizes = []
    for lag in scales:
        d = np.abs(values[lag:] - values[:-lag])
        if d.ndim > 1:
            d = np.linalg.norm(d, axis=1)
        if statistic == "mean":
            sizes.append(d.mean())
        elif statistic == "max":
            sizes.append(d.max())
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
    sizes = np.asarray(sizes)
    if np.any(sizes <= 0):
        raise ValueError("degenerate path: zero increments at some lag")
    return float(np.polyfit(np.log(scales * dt), np.log(sizes), 1)[0])


def write_noise_csv(fh, paths: Sequence[NoisePath], path_ids: Optional[Sequence[int]] = None) -> None:
    """Dump paths with columns (path_id, t, mode, value); scalar paths use mode 0."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["path_id", "t", "mode", "value"])
    for i, p in enumerate(paths):
        pid = i if path_ids is None else path_ids[i]
        vals = p.values if p.is_vector else p.values[:, None]
        for t, row in zip(p.grid.times, vals):
            for k, v in enumerate(row):
                w.writerow([pid, repr(float(t)), k + (1 if p.is_vector else 0), repr(float(v))])
