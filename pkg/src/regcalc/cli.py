"""Command-line harness: simulate, estimate, verify, report.

Exit status: 0 when every selected check passes, 1 on any fail verdict,
2 on a configuration error (including an empty experiment list).
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from importlib import resources

import numpy as np

from .config import ConfigError, load_config
from .convolution import compute_remainder_Y, write_mild_csv
from .experiments import _eps, _mild, _spec, run_experiment, write_report_csv, write_summary_csv
from .noise import Stream, sample_q_wiener, write_noise_csv
from .regular_calculus import a_eps_ladder, fit_rate, forward_integral_eps, ito_sum, scalar_qv_eps

log = logging.getLogger("regcalc")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
    common.add_argument("--threads", metavar="K", type=int, help="worker threads for path-level work")
    common.add_argument("--experiments", metavar="LIST", help="comma separated experiment names (E1,...,E8)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="regcalc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="dump noise and mild paths")
    s.add_argument("--max-paths", type=int, default=4)
    s.add_argument("--stride", type=int, default=16, help="write every stride-th node")
    e = sub.add_parser("estimate", parents=[common], help="run the eps-estimators on mild paths")
    e.add_argument("--stride", type=int, default=64)
    sub.add_parser("verify", parents=[common], help="run the experiment suite")
    sub.add_parser("report", parents=[common], help="print the summary of a finished verify run")
    sub.add_parser("schema", help="print the bundled CSV schema")
    return p


def _config(args):
    experiments = None
    if getattr(args, "experiments", None) is not None:
        experiments = tuple(x.strip() for x in args.experiments.split(",") if x.strip())
    return load_config(args.config, out_dir=args.out, threads=args.threads, experiments=experiments)


def cmd_simulate(cfg, args) -> int:
    spec, grid = _spec(cfg), cfg.grid
    n = min(cfg.n_paths, args.max_paths)
    noises = [sample_q_wiener(grid, spec.q, cfg.master_seed, i, Stream.W) for i in range(n)]
    paths = [_mild(cfg, spec, grid, i) for i in range(n)]
    with open(os.path.join(cfg.out_dir, "noise.csv"), "w", newline="") as fh:
        write_noise_csv(fh, [w.coarsen(args.stride) if grid.J % args.stride == 0 else w for w in noises])
    with open(os.path.join(cfg.out_dir, "mild.csv"), "w", newline="") as fh:
        write_mild_csv(fh, paths, stride=args.stride)
    return EXIT_OK


def cmd_estimate(cfg, args) -> int:
    """Estimator curves on default mild paths, with sup deviation from an exact reference."""
    spec, grid, eps = _spec(cfg), cfg.grid, _eps(cfg)
    trace_rate = float(np.trace(spec.covariance_rate(0.0)))
    rows, devs = [], {"forward_vs_ito": [], "scalar_qv_M": [], "a_eps_Y": []}
    for i in range(cfg.n_paths):
        p = _mild(cfg, spec, grid, i)
        m1 = p.M[:, 0]
        est = {
            "forward_vs_ito": (forward_integral_eps(m1, m1, eps, grid=grid), ito_sum(m1, m1, grid=grid)),
            "scalar_qv_M": (scalar_qv_eps(p.M, eps, "H", grid=grid), grid.times * trace_rate),
        }
        for name, (e, ref) in est.items():
            devs[name].append(e.sup_deviation(ref))
            for k, c in enumerate(e.curves):
                rows += [(name, i, eps[k], grid.times[j], c[j]) for j in range(0, grid.J + 1, args.stride)]
        Y = compute_remainder_Y(p)
        a = a_eps_ladder(Y, Y, eps, spec.gen)
        devs["a_eps_Y"].append(a)
        rows += [("a_eps_Y", i, eps[k], cfg.T, a[k]) for k in range(len(eps))]
    with open(os.path.join(cfg.out_dir, "estimates.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["estimator", "path_id", "epsilon", "t", "value"])
        for name, pid, e, t, v in rows:
            w.writerow([name, pid, repr(float(e)), repr(float(t)), repr(float(v))])
    with open(os.path.join(cfg.out_dir, "estimates_summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["estimator", "epsilon", "median_sup_dev", "fitted_rate"])
        for name, d in devs.items():
            med = np.median(np.array(d), axis=0)
            rate = fit_rate(eps, med)
            for e, v in zip(eps, med):
                w.writerow([name, repr(float(e)), repr(float(v)), repr(rate)])
    return EXIT_OK


def cmd_verify(cfg, args) -> int:
    results = []
    for name in cfg.experiments:
        log.info("running %s", name)
        r = run_experiment(name, cfg, cfg.threads)
        write_report_csv(os.path.join(cfg.out_dir, f"{r.name}.csv"), r)
        results.append(r)
        print(f"{r.name}: {'pass' if r.passed else 'fail'}")
    write_summary_csv(os.path.join(cfg.out_dir, "summary.csv"), results)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_report(cfg, args) -> int:
    path = os.path.join(cfg.out_dir, "summary.csv")
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError:
        print(f"no summary at {path}; run `regcalc verify` first", file=sys.stderr)
        return EXIT_CONFIG
    rows = [r for r in rows if r["experiment"] in cfg.experiments]
    if not rows:
        print("summary holds none of the selected experiments", file=sys.stderr)
        return EXIT_CONFIG
    width = max(len(r["experiment"]) + len(r["statistic"]) for r in rows) + 3
    failed = False
    for r in rows:
        thr = f" (threshold {r['threshold']})" if r["threshold"] else ""
        print(f"{r['experiment'] + ' / ' + r['statistic']:<{width}} {r['verdict']:>4}  {r['value']}{thr}")
        failed |= r["verdict"] == "fail"
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "verify": cmd_verify, "report": cmd_report}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        print(resources.files("regcalc").joinpath("csv_schema.txt").read_text(), end="")
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(cfg.out_dir, exist_ok=True)
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
