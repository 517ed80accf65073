"""Independent reference computations used by the tests.

Nothing here calls the code under test: each oracle reaches its answer by a
different route (random decompositions, series summation, constrained
optimization, closed forms).
"""
import math

import numpy as np
from scipy import optimize


def random_decomposition_cost(u, rank, rng):
    """sum |x_i| |y_i| over a random decomposition u = sum_i x_i (x) y_i.

    Draw x_1..x_r at random (full row rank for r >= n) and solve for the y_i;
    every such choice is a valid decomposition, so the cost bounds the
    projective norm from above.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    X = rng.standard_normal((n, max(rank, n)))
    Y = np.linalg.pinv(X) @ u
    assert np.allclose(X @ Y, u, atol=1e-9)
    return float(np.sum(np.linalg.norm(X, axis=0) * np.linalg.norm(Y, axis=1)))


def minimized_decomposition_cost(u, rank=4, restarts=20, seed=0):
    """Smallest decomposition cost found by local search over rank-r factors."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    rng = np.random.default_rng(seed)

    def cost(flat):
        X = flat.reshape(n, rank)
        Y = np.linalg.pinv(X) @ u
        return np.sum(np.linalg.norm(X, axis=0) * np.linalg.norm(Y, axis=1))

    best = np.inf
    for _ in range(restarts):
        r = optimize.minimize(cost, rng.standard_normal(n * rank), method="Nelder-Mead",
                              options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 40000, "maxfev": 40000})
        X = r.x.reshape(n, rank)
        if np.allclose(X @ (np.linalg.pinv(X) @ u), u, atol=1e-9):
            best = min(best, r.fun)
    return float(best)


def series_exp(x, terms=60):
    """exp(x) by direct Taylor summation."""
    return math.fsum(x**k / math.factorial(k) for k in range(terms))


def dual_norm_by_optimization(h, mu):
    """sup <h, phi> over phi with sum (1 + mu^2) phi^2 <= 1, by SLSQP."""
    h = np.asarray(h, dtype=float)
    w = 1.0 + np.asarray(mu, dtype=float) ** 2
    cons = {"type": "ineq", "fun": lambda p: 1.0 - np.sum(w * p**2)}
    r = optimize.minimize(lambda p: -h @ p, np.full(h.size, 0.01), constraints=[cons], method="SLSQP",
                          options={"ftol": 1e-14, "maxiter": 500})
    return float(-r.fun)


def ou_variance(sigma, lam, mu, T):
    return sigma**2 * lam * (1.0 - math.exp(-2.0 * mu * T)) / (2.0 * mu)


def linear_path_qv(eps, T):
    """int_0^T (X(r + eps) - X(r))^2 / eps dr for X(r) = r frozen at T."""
    return eps * (T - eps) + eps**2 / 3.0


def holder_sup_constant(alpha, n=200001):
    """sup_x x^(1 - alpha) e^(-x) / alpha on a fine grid."""
    x = np.linspace(0.0, 20.0, n)
    return float(np.max(x ** (1.0 - alpha) * np.exp(-x)) / alpha)
