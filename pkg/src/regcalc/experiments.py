"""Experiment suite E1-E8.

Each experiment maps a per-path function over path indices (optionally on a
thread pool; results come back in path order) and reduces the per-path
statistics with medians. Paths are seeded by (master_seed, path_index,
stream), so the artifacts do not depend on the thread count.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import EXPERIMENTS, RunConfig
from .convolution import ConvolutionSpec, compute_remainder_Y, ondrejat_check, simulate_fractional_extension, simulate_mild
from .noise import QSpectrum, Stream, TimeGrid, holder_exponent_estimate, sample_brownian, sample_fbm, sample_q_wiener
from .regular_calculus import (
    a_eps_statistic,
    fit_rate,
    forward_integral_eps,
    ito_sum,
    scalar_qv_eps,
    tensor_cov_eps,
    young_integral,
)
from .semigroup import DiagonalGenerator
from .verify import c01_power_family, fukushima_orthogonality, ito_mild_residual, monotone_decrease, squared_functional

__all__ = ["ExperimentResult", "run_experiment", "run_suite", "write_report_csv", "write_summary_csv", "e1_pilot"]

STATEMENTS = {
    "E1": "forward integral against a martingale coincides with the Ito integral",
    "E2": "remainder of a mild process has zero chi-bar quadratic variation with A(eps) <= eps sup|X|^2",
    "E3": "scalar quadratic variation diverges with N while the chi-bar statistic stays bounded",
    "E4": "Ito formula for mild processes including the trace term",
    "E5": "C^{0,1} functionals of mild processes are weak Dirichlet processes",
    "E6": "tensor covariation of the stochastic integral equals t (sigma Q^1/2)(sigma Q^1/2)^*",
    "E7": "remainder Y solves <Y(t), z> = int <X, A* z> dr with first-order quadrature error",
    "E8": "fractional extension: Young integral, Hoelder regularity and zero scalar QV of the added term",
}

E1_BLOCKS = 16  # step integrand is constant on T / E1_BLOCKS
E1_PILOT_MARGIN = 1.5
E1_PILOT_PATHS = 200
E3_GROWTH = 1.25
A_EPS_SLACK = 1.05
E4_RATIO = (1.5, 3.0)
E7_RATIO = (1.7, 2.5)
POWER_RATIO = 5.0
E6_MIN_PATHS = 200
E6_REL_TOL = 0.10
YOUNG_REL_TOL = 1e-3
HOLDER_TOL = 0.05


@dataclass
class ExperimentResult:
    name: str
    rows: list = field(default_factory=list)  # (path_id, epsilon, statistic, value, verdict)
    summary: list = field(default_factory=list)  # (statistic, value, threshold, verdict)
    statement: str = ""

    @property
    def passed(self) -> bool:
        return all(v != "fail" for *_, v in self.summary)

    def add(self, statistic, value, threshold=None, verdict="info"):
        if isinstance(verdict, (bool, np.bool_)):
            verdict = "pass" if verdict else "fail"
        self.summary.append((statistic, float(value), threshold, verdict))


def _pmap(fn: Callable, n: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _spec(cfg: RunConfig, n: Optional[int] = None, sigma=None, x0=None) -> ConvolutionSpec:
    n = cfg.N if n is None else n
    b0, fb = cfg.b_parts(n)
    return ConvolutionSpec(
        x0=cfg.x0_vector(n) if x0 is None else x0,
        gen=DiagonalGenerator.dirichlet_laplacian(n),
        q=QSpectrum.power_law(n, cfg.q_alpha),
        b0=b0,
        sigma=np.full(n, cfg.sigma_scale) if sigma is None else sigma,
        feedback=fb,
    )


def _eps(cfg: RunConfig, dt: Optional[float] = None) -> np.ndarray:
    return np.asarray(cfg.eps_multiples) * (cfg.dt if dt is None else dt)


def _mild(cfg, spec, grid, i):
    return simulate_mild(spec, sample_q_wiener(grid, spec.q, cfg.master_seed, i, Stream.W))


# E1 ------------------------------------------------------------------------


def _e1_path(cfg: RunConfig, i: int, stream: int = Stream.W) -> np.ndarray:
    grid = cfg.grid
    W = sample_brownian(grid, cfg.master_seed, i, stream).values
    block = max(1, grid.J // E1_BLOCKS)
    X = W[(np.arange(grid.J + 1) // block) * block]
    ito = ito_sum(X, W, grid=grid)
    return forward_integral_eps(X, W, _eps(cfg), grid=grid).sup_deviation(ito)


def e1_pilot(cfg: RunConfig, n_paths: int = E1_PILOT_PATHS, threads: int = 1) -> float:
    """Threshold for E1: margin times the final-rung median of a pilot run on its own stream."""
    devs = np.array(_pmap(lambda i: _e1_path(cfg, i, Stream.PILOT), n_paths, threads))
    return float(E1_PILOT_MARGIN * np.median(devs[:, 0]))


def e1(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E1"])
    eps = _eps(cfg)
    devs = np.array(_pmap(lambda i: _e1_path(cfg, i), cfg.n_paths, threads))
    for i, d in enumerate(devs):
        for e, v in zip(eps, d):
            res.rows.append((i, e, "sup_fwd_minus_ito", v, ""))
    med = np.median(devs, axis=0)
    for e, v in zip(eps, med):
        res.add(f"median_sup_dev[eps={float(e)!r}]", v)
    res.add("fitted_rate", fit_rate(eps, med))
    res.add("monotone_decrease", float(monotone_decrease(med)), None, monotone_decrease(med))
    thr = cfg.thresholds.get("E1", 0.0)
    res.add("final_rung_median", med[0], thr, bool(med[0] < thr))
    return res


# E2 ------------------------------------------------------------------------


def _a_eps_bound_rows(path, eps, T):
    Y = compute_remainder_Y(path)
    supx2 = float(np.max(np.sum(path.X**2, axis=1)))
    out = []
    for e in eps:
        a = a_eps_statistic(Y, Y, e, path.spec.gen)
        out.append((e, a, A_EPS_SLACK * e * T * supx2))
    return out


def e2(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E2"])
    spec, grid, eps = _spec(cfg), cfg.grid, _eps(cfg)
    per = _pmap(lambda i: _a_eps_bound_rows(_mild(cfg, spec, grid, i), eps, cfg.T), cfg.n_paths, threads)
    viol = 0
    for i, rows in enumerate(per):
        for e, a, bound in rows:
            ok = a <= bound
            viol += not ok
            res.rows.append((i, e, "A_eps", a, "pass" if ok else "fail"))
            res.rows.append((i, e, "bound", bound, ""))
    A = np.array([[a for _, a, _ in rows] for rows in per])
    med = np.median(A, axis=0)
    for e, v in zip(eps, med):
        res.add(f"median_A_eps[eps={float(e)!r}]", v)
    res.add("bound_violations", viol, 0.0, viol == 0)
    slope = fit_rate(eps, med)
    res.add("slope_log_A_vs_log_eps", slope, 0.8, bool(slope >= 0.8))
    return res


# E3 ------------------------------------------------------------------------


def _e3_path(cfg, spec, grid, e, i):
    path = _mild(cfg, spec, grid, i)
    qv = float(scalar_qv_eps(path.X, e, "H", grid=grid).final[0])
    ((_, a, bound),) = _a_eps_bound_rows(path, [e], cfg.T)
    return qv, a, bound


def e3(cfg: RunConfig, threads: int) -> ExperimentResult:
    """Rank-one noise sigma = h (x) e_1 with h_k = sigma_scale, started at 0."""
    res = ExperimentResult(EXPERIMENTS["E3"])
    grid = TimeGrid(cfg.T, cfg.e3_dt)
    e = cfg.eps_multiples[0] * cfg.e3_dt
    meds = []
    for n in cfg.e3_modes:
        sigma = np.zeros((n, n))
        sigma[:, 0] = cfg.sigma_scale
        spec = _spec(cfg, n, sigma=sigma, x0=np.zeros(n))
        per = _pmap(lambda i: _e3_path(cfg, spec, grid, e, i), cfg.n_paths, threads)
        viol = 0
        for i, (qv, a, bound) in enumerate(per):
            ok = a <= bound
            viol += not ok
            res.rows.append((i, e, f"scalar_qv[N={n}]", qv, ""))
            res.rows.append((i, e, f"A_eps[N={n}]", a, "pass" if ok else "fail"))
        meds.append(float(np.median([p[0] for p in per])))
        res.add(f"median_scalar_qv[N={n}]", meds[-1])
        res.add(f"A_eps_bound_violations[N={n}]", viol, 0.0, viol == 0)
    for (n0, q0), (n1, q1) in zip(zip(cfg.e3_modes, meds), list(zip(cfg.e3_modes, meds))[1:]):
        per_doubling = (q1 / q0) ** (1.0 / np.log2(n1 / n0))
        res.add(f"qv_growth_per_doubling[N={n0}->{n1}]", per_doubling, E3_GROWTH, bool(per_doubling >= E3_GROWTH))
    return res


# E4 / E7 -------------------------------------------------------------------


def _halving_pair(cfg, spec, i):
    """The same noise realization on dt and dt/2."""
    fine = sample_q_wiener(cfg.grid.refine(2), spec.q, cfg.master_seed, i, Stream.W)
    return simulate_mild(spec, fine.coarsen(2)), simulate_mild(spec, fine)


def _e4_path(cfg, spec, F, i):
    out = []
    for p in _halving_pair(cfg, spec, i):
        out.append(ito_mild_residual(p, F).stats["sup_residual"])
        out.append(ito_mild_residual(p, F, drop_trace=True).stats["sup_residual"])
    return out


def e4(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E4"])
    spec = _spec(cfg)
    e1v = np.zeros(cfg.N)
    e1v[0] = 1.0
    F = squared_functional(e1v)
    m0 = cfg.eps_multiples[0]
    eps = (m0 * cfg.dt, m0 * cfg.dt / 2)
    vals = np.array(_pmap(lambda i: _e4_path(cfg, spec, F, i), cfg.n_paths, threads))
    names = ("sup_residual", "sup_residual_no_trace")
    for i, row in enumerate(vals):
        for k, v in enumerate(row):
            res.rows.append((i, eps[k // 2], names[k % 2], v, ""))
    med = np.median(vals, axis=0)
    res.add("median_sup_residual[dt]", med[0])
    res.add("median_sup_residual[dt/2]", med[2])
    ratio = med[0] / med[2]
    res.add("residual_ratio_dt_halved", ratio, E4_RATIO[0], bool(E4_RATIO[0] <= ratio <= E4_RATIO[1]))
    for lvl, (r, c) in zip(("dt", "dt/2"), ((med[0], med[1]), (med[2], med[3]))):
        res.add(f"control_over_residual[{lvl}]", c / r, POWER_RATIO, bool(c >= POWER_RATIO * r))
    return res


def e7(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E7"])
    spec = _spec(cfg)
    z = 1.0 / np.arange(1, cfg.N + 1)
    vals = np.array(_pmap(lambda i: [ondrejat_check(p, z).max_abs for p in _halving_pair(cfg, spec, i)], cfg.n_paths, threads))
    for i, (a, b) in enumerate(vals):
        res.rows.append((i, cfg.dt, "max_residual", a, ""))
        res.rows.append((i, cfg.dt / 2, "max_residual", b, ""))
    med = np.median(vals, axis=0)
    res.add("median_max_residual[dt]", med[0])
    res.add("median_max_residual[dt/2]", med[1])
    ratio = med[0] / med[1]
    res.add("richardson_ratio", ratio, E7_RATIO[0], bool(E7_RATIO[0] <= ratio <= E7_RATIO[1]))
    return res


# E5 ------------------------------------------------------------------------


def e5(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E5"])
    spec, grid, eps = _spec(cfg), cfg.grid, _eps(cfg)
    z = np.zeros(cfg.N)
    z[0] = 1.0
    F = c01_power_family(z, cfg.e5_radius)

    def one(i):
        path = _mild(cfg, spec, grid, i)
        r = fukushima_orthogonality(path, F, path.stoch_int[:, 0], eps, POWER_RATIO)
        return r.stats["orthogonality"], r.stats["control"]

    per = _pmap(one, cfg.n_paths, threads)
    for i, (o, c) in enumerate(per):
        for e, ov, cv in zip(eps, o, c):
            res.rows.append((i, e, "orthogonality", ov, ""))
            res.rows.append((i, e, "control", cv, ""))
    med_o = np.median([p[0] for p in per], axis=0)
    med_c = np.median([p[1] for p in per], axis=0)
    for e, v in zip(eps, med_o):
        res.add(f"median_orthogonality[eps={float(e)!r}]", v)
    res.add("fitted_rate", fit_rate(eps, med_o))
    res.add("monotone_decrease", float(monotone_decrease(med_o)), None, monotone_decrease(med_o))
    res.add("control_over_final", med_c[0] / med_o[0], POWER_RATIO, bool(med_c[0] >= POWER_RATIO * med_o[0]))
    return res


# E6 ------------------------------------------------------------------------


def e6(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E6"])
    spec, grid = _spec(cfg), cfg.grid
    e = cfg.eps_multiples[0] * cfg.dt
    n_paths = max(cfg.n_paths, E6_MIN_PATHS)

    def one(i):
        M = _mild(cfg, spec, grid, i).M
        return np.diag(tensor_cov_eps(M, M, e, grid=grid).final[0]).copy()

    diag = np.array(_pmap(one, n_paths, threads))
    for i, d in enumerate(diag):
        for k, v in enumerate(d):
            res.rows.append((i, e, f"tensor_cov_diag[k={k + 1}]", v, ""))
    target = cfg.T * np.diag(spec.covariance_rate(0.0))
    med = np.median(diag, axis=0)
    for k in np.flatnonzero(target > 0):
        rel = abs(med[k] - target[k]) / target[k]
        res.add(f"median_rel_error[k={k + 1}]", rel, E6_REL_TOL, bool(rel <= E6_REL_TOL))
    return res


# E8 ------------------------------------------------------------------------


def e8(cfg: RunConfig, threads: int) -> ExperimentResult:
    res = ExperimentResult(EXPERIMENTS["E8"])
    grid = TimeGrid(cfg.T, cfg.e8_dt)
    spec = _spec(cfg)
    eps = _eps(cfg, cfg.e8_dt)
    h = cfg.sigma_scale / np.arange(1, cfg.N + 1)
    sample_fbm(grid, cfg.hurst, cfg.master_seed, 0)  # factorize once before fanning out

    def one(i):
        B = sample_fbm(grid, cfg.hurst, cfg.master_seed, i)
        y = young_integral(B.values, B.values, levels=cfg.young_levels, grid=grid)
        target = 0.5 * B.values[-1] ** 2
        rel = abs(y.value - target) / target
        ext = simulate_fractional_extension(_mild(cfg, spec, grid, i), [(h, B)])
        qv = scalar_qv_eps(ext.term, eps, "H").sup_deviation(0.0)
        return rel, holder_exponent_estimate(B), qv, ext.cauchy_rel

    per = _pmap(one, cfg.fbm_paths, threads)
    for i, (rel, hol, qv, cr) in enumerate(per):
        res.rows.append((i, cfg.e8_dt, "young_rel_error", rel, ""))
        res.rows.append((i, cfg.e8_dt, "holder_estimate", hol, ""))
        res.rows.append((i, cfg.e8_dt, "convolution_refinement_rel", cr, ""))
        for e, v in zip(eps, qv):
            res.rows.append((i, e, "scalar_qv_fractional_term", v, ""))
    rel = np.median([p[0] for p in per])
    res.add("median_young_rel_error", rel, YOUNG_REL_TOL, bool(rel <= YOUNG_REL_TOL))
    hol = np.array([p[1] for p in per])
    dev = float(abs(np.median(hol) - cfg.hurst))
    res.add("median_holder_estimate", np.median(hol))
    res.add("abs_holder_deviation_of_median", dev, HOLDER_TOL, bool(dev <= HOLDER_TOL))
    res.add("max_abs_holder_deviation_per_path", np.max(np.abs(hol - cfg.hurst)))
    med = np.median([p[2] for p in per], axis=0)
    for e, v in zip(eps, med):
        res.add(f"median_scalar_qv_term[eps={float(e)!r}]", v)
    res.add("fitted_rate", fit_rate(eps, med))
    res.add("monotone_decrease", float(monotone_decrease(med)), None, monotone_decrease(med))
    return res


RUNNERS = {"E1": e1, "E2": e2, "E3": e3, "E4": e4, "E5": e5, "E6": e6, "E7": e7, "E8": e8}


def run_experiment(name: str, cfg: RunConfig, threads: int = 1) -> ExperimentResult:
    key = name.split("-", 1)[0].upper()
    res = RUNNERS[key](cfg, threads)
    res.statement = STATEMENTS[key]
    return res


def run_suite(cfg: RunConfig, threads: Optional[int] = None) -> list:
    threads = cfg.threads if threads is None else threads
    return [run_experiment(name, cfg, threads) for name in cfg.experiments]


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_report_csv(path: str, result: ExperimentResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "path_id", "epsilon", "statistic", "value", "verdict"])
        for pid, e, stat, val, verdict in result.rows:
            w.writerow([result.name, pid, _fmt(e), stat, _fmt(val), verdict])


def write_summary_csv(path: str, results) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "statistic", "value", "threshold", "verdict", "statement"])
        for r in results:
            for stat, val, thr, verdict in r.summary:
                w.writerow([r.name, stat, _fmt(val), _fmt(thr), verdict, r.statement])


def write_results(out_dir: str, results) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for r in results:
        write_report_csv(os.path.join(out_dir, f"{r.name}.csv"), r)
    write_summary_csv(os.path.join(out_dir, "summary.csv"), results)
