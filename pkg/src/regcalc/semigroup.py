"""Diagonal self-adjoint generators and their semigroups.

A e_k = -mu_k e_k, so A* = A and e^{tA} acts coefficient-wise by e^{-mu_k t}.
The default is the Dirichlet Laplacian on (0, 1), mu_k = (k pi)^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral_space import SpectralVector, _vec

__all__ = [
    "DiagonalGenerator",
    "apply_semigroup",
    "apply_generator_adjoint",
    "graph_norm",
    "holder_constant",
]


@dataclass(frozen=True)
class DiagonalGenerator:
    mu: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size == 0:
            raise ValueError("mu must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(mu)) or np.any(mu < 0):
            raise ValueError("mu must be finite and non-negative")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def dirichlet_laplacian(cls, n: int) -> "DiagonalGenerator":
        k = np.arange(1, n + 1)
        return cls((k * np.pi) ** 2)

    @classmethod
    def zero(cls, n: int) -> "DiagonalGenerator":
        return cls(np.zeros(n))

    @property
    def size(self) -> int:
        return self.mu.shape[0]

    @cached_property
    def dual_weights(self) -> np.ndarray:
        """Per-mode weights (1 + mu_k^2)^{-1/2} of the dual graph norm."""
        return 1.0 / np.sqrt(1.0 + self.mu**2)

    def decay(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"semigroup time must be >= 0, got {t}")
        return np.exp(-self.mu * t)


def apply_semigroup(t: float, v, gen: DiagonalGenerator) -> SpectralVector:
    x = _vec(v)
    if x.shape != gen.mu.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs generator size {gen.size}")
    return SpectralVector(gen.decay(t) * x)


def apply_generator_adjoint(v, gen: DiagonalGenerator) -> SpectralVector:
    x = _vec(v)
    if x.shape != gen.mu.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs generator size {gen.size}")
    return SpectralVector(-gen.mu * x)


def graph_norm(v, gen: DiagonalGenerator) -> float:
    """|v|_{D(A*)} = sqrt(|v|^2 + |A* v|^2)."""
    x = _vec(v)
    if x.shape != gen.mu.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs generator size {gen.size}")
    return float(np.sqrt(np.sum((1.0 + gen.mu**2) * x**2)))


def holder_constant(alpha: float) -> float:
    """Constant C in |e^{tA} e_k - e^{sA} e_k| <= C (t - s)^alpha mu_k^alpha.

    Writing the difference as an integral of A e^{rA} and splitting off
    (-A)^alpha gives C = sup_{x >= 0} x^{1-alpha} e^{-x} / alpha.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    beta = 1.0 - alpha
    sup = 1.0 if beta == 0 else (beta / np.e) ** beta
    return float(sup / alpha)
