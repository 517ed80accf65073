"""Truncated Hilbert space H_N, its tensor square and the usual operator norms.

Everything is expressed in coordinates on a fixed orthonormal basis
e_1..e_N, with H identified with its dual. A tensor u = sum x_i (x) y_i is
stored as the N x N matrix sum x_i y_i^T, which is also the matrix of the
associated nuclear operator T_u.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

if TYPE_CHECKING:
    from .semigroup import DiagonalGenerator

__all__ = [
    "SpectralVector",
    "TensorElement",
    "OperatorDiagonal",
    "basis_vector",
    "inner",
    "norm",
    "cross_tensor",
    "projective_norm",
    "trace_pair",
    "trace_pair_path",
    "nuclear_trace",
    "hs_norm",
    "dual_graph_norm",
]


def _frozen(arr, ndim: int, what: str) -> np.ndarray:
    a = np.array(arr, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"{what} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralVector:
    """Element of H_N given by its basis coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, 1, "SpectralVector"))

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.coeffs if dtype is None else self.coeffs.astype(dtype)


@dataclass(frozen=True)
class TensorElement:
    """Element of H_N (x) H_N as an N x N coefficient matrix."""

    mat: np.ndarray

    def __post_init__(self):
        m = _frozen(self.mat, 2, "TensorElement")
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"TensorElement must be square, got {m.shape}")
        object.__setattr__(self, "mat", m)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.mat, self.mat.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(self.mat).max())))

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


@dataclass(frozen=True)
class OperatorDiagonal:
    """Diagonal operator on the basis, stored by its eigenvalues."""

    diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", _frozen(self.diag, 1, "OperatorDiagonal"))

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.diag)


VectorLike = Union[SpectralVector, np.ndarray, list, tuple]
TensorLike = Union[TensorElement, np.ndarray]
OperatorLike = Union[OperatorDiagonal, np.ndarray]


def _vec(a) -> np.ndarray:
    if isinstance(a, SpectralVector):
        return a.coeffs
    return _frozen(a, 1, "vector")


def _mat(u) -> np.ndarray:
    if isinstance(u, TensorElement):
        return u.mat
    m = _frozen(u, 2, "tensor")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"tensor must be square, got {m.shape}")
    return m


def _operator_matrix(L) -> np.ndarray:
    if isinstance(L, OperatorDiagonal):
        return L.as_matrix()
    a = np.asarray(L, dtype=float)
    if a.ndim == 1:
        return np.diag(a)
    return _mat(a)


def basis_vector(k: int, n: int) -> SpectralVector:
    """Unit vector e_k (1-based, as in the usual notation)."""
    if not 1 <= k <= n:
        raise ValueError(f"basis index {k} outside 1..{n}")
    v = np.zeros(n)
    v[k - 1] = 1.0
    return SpectralVector(v)


def inner(a: VectorLike, b: VectorLike) -> float:
    x, y = _vec(a), _vec(b)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(x @ y)


def norm(a: VectorLike) -> float:
    return float(np.linalg.norm(_vec(a)))


def cross_tensor(a: VectorLike, b: VectorLike) -> TensorElement:
    x, y = _vec(a), _vec(b)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return TensorElement(np.outer(x, y))


def projective_norm(u: TensorLike) -> float:
    """Projective tensor norm, i.e. the nuclear norm of the coefficient matrix.

    On a Hilbert tensor square the infimum over decompositions is attained by
    the singular value decomposition, so this is exact.
    """
    m = _mat(u)
    if not m.any():
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False).sum())


def trace_pair(L: OperatorLike, u: TensorLike) -> float:
    """Duality pairing <l, u> = Tr(L T_u) for self-adjoint T_u."""
    m = _mat(u)
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError("trace_pair needs a symmetric tensor (self-adjoint T_u)")
    lm = _operator_matrix(L)
    if lm.shape != m.shape:
        raise ValueError(f"shape mismatch: operator {lm.shape} vs tensor {m.shape}")
    return float(np.einsum("ij,ji->", lm, m))


def nuclear_trace(u: TensorLike) -> float:
    return float(np.trace(_mat(u)))


def hs_norm(S: OperatorLike) -> float:
    """Hilbert-Schmidt norm, sqrt(Tr(S S*))."""
    if isinstance(S, OperatorDiagonal):
        return float(np.linalg.norm(S.diag))
    a = np.asarray(S, dtype=float)
    if a.ndim == 1:
        return float(np.linalg.norm(a))
    return float(np.linalg.norm(_mat(a), "fro"))


def dual_graph_norm(h: VectorLike, gen: "DiagonalGenerator") -> float:
    """Norm of h in the dual of D(A*) equipped with the graph norm.

    For diagonal A this is sqrt(sum h_k^2 / (1 + mu_k^2)).
    """
    x = _vec(h)
    if x.shape != gen.mu.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs generator size {gen.mu.shape[0]}")
    return float(np.sqrt(np.sum(x**2 * gen.dual_weights**2)))



def trace_pair_path(L: np.ndarray, u: np.ndarray) -> np.ndarray:
    """trace_pair node by node for stacks L, u of shape (n, N, N)."""
    L = np.asarray(L, dtype=float)
    u = np.asarray(u, dtype=float)
    if L.shape != u.shape or u.ndim != 3:
        raise ValueError(f"need matching (n, N, N) stacks, got {L.shape} and {u.shape}")
    scale = max(1.0, float(np.abs(u).max()) if u.size else 1.0)
    if np.abs(u - u.transpose(0, 2, 1)).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("trace_pair needs symmetric tensors (self-adjoint T_u)")
    return np.einsum("jkl,jlk->j", L, u)
