"""Batch command-line interface.

Subcommands:
  converge      run ensembles across qubit counts, write curve CSVs + manifest
  nstar-fit     extract n*(n_q, eps) from curve CSVs and fit f1/f2/f3
  gap           moment-operator spectral gap report (JSON)
  oracle-check  simulator-vs-dense-oracle and estimator-vs-reference suites
  dump-circuit  print the text serialization of one sampled circuit

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 verification
failure. The default output directory can be set via UCESIM_OUT.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from collections import defaultdict

import numpy as np

from . import __version__
from .column_sim import MAX_N_Q, dense_unitary_oracle, initial_column, simulate_first_column
from .cue_ref import cue_correlator, cue_moment, sample_haar_first_column
from .ensemble_stats import (
    ConvergenceCurve,
    StatisticKind,
    correlator_estimate,
    moment_estimate,
    saturation_floor,
)
from .gateset import EnsembleConfig, circuit_to_text, sample_circuit
from .runner import geometric_checkpoints, run_ensemble
from .scaling import MODELS, NStarPoint, fit_model, n_star
from .column_sim import StateColumn

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return "%.17g" % x


def _parse_int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _load_config_file(path: str) -> dict:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]  # accept an emitted manifest as config
    return data


def _effective_config(args) -> dict:
    cfg = {
        "n_q": [3, 4],
        "statistics": ["pl"],
        "checkpoints": None,
        "n_r": None,
        "sizing": [10, 20],
        "master_seed": 20260823,
        "p_g": 0.5,
        "max_n_q": MAX_N_Q,
    }
    if args.config:
        cfg.update(_load_config_file(args.config))
    if args.nq is not None:
        cfg["n_q"] = _parse_int_list(args.nq)
    if args.statistics is not None:
        cfg["statistics"] = [s.strip() for s in args.statistics.split(",") if s.strip()]
    if args.checkpoints is not None:
        cfg["checkpoints"] = _parse_int_list(args.checkpoints)
    if args.nr is not None:
        cfg["n_r"] = args.nr
        cfg["sizing"] = None
    if args.sizing is not None:
        cfg["sizing"] = _parse_int_list(args.sizing)
        cfg["n_r"] = None
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.pg is not None:
        cfg["p_g"] = args.pg
    for nq in cfg["n_q"]:
        if nq > cfg["max_n_q"]:
            raise UsageError(f"n_q={nq} exceeds memory cap {cfg['max_n_q']}")
    for label in cfg["statistics"]:
        StatisticKind.parse(label)
    return cfg


def _write_curve_csv(path: str, curve: ConvergenceCurve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nq", "ng", "statistic", "value", "n_r", "seed"])
        for ng, d in curve.points:
            writer.writerow([curve.n_q, ng, curve.statistic.label, _fmt(d),
                             curve.n_r, curve.master_seed])


def cmd_converge(args) -> int:
    cfg = _effective_config(args)
    out_dir = args.out or os.environ.get("UCESIM_OUT", ".")
    os.makedirs(out_dir, exist_ok=True)
    for nq in cfg["n_q"]:
        checkpoints = cfg["checkpoints"] or geometric_checkpoints(nq)
        econf = EnsembleConfig(
            n_q=nq, checkpoints=tuple(checkpoints), master_seed=cfg["master_seed"],
            p_g=cfg["p_g"], n_r=cfg["n_r"],
            sizing=tuple(cfg["sizing"]) if cfg["sizing"] else None)
        curves = run_ensemble(econf, cfg["statistics"], workers=args.workers)
        for label in cfg["statistics"]:
            path = os.path.join(out_dir, f"curve_nq{nq}_{label}.csv")
            _write_curve_csv(path, curves[label])
    manifest = {
        "config": cfg,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": ".".join(str(v) for v in sys.version_info[:3]),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def read_curves(paths) -> dict:
    """Load curve CSVs, returning {statistic: {nq: ConvergenceCurve}}."""
    grouped = defaultdict(lambda: defaultdict(list))
    meta = {}
    for path in paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["statistic"], int(row["nq"]))
                grouped[row["statistic"]][int(row["nq"])].append(
                    (int(row["ng"]), float(row["value"])))
                meta[key] = (int(row["n_r"]), int(row["seed"]))
    curves = {}
    for label, by_nq in grouped.items():
        curves[label] = {}
        for nq, points in by_nq.items():
            points.sort()
            n_r, seed = meta[(label, nq)]
            curve = ConvergenceCurve(n_q=nq, statistic=StatisticKind.parse(label),
                                     points=points, n_r=n_r, master_seed=seed)
            if len(points) >= 4:
                curve.d_min = saturation_floor(points)
            curves[label][nq] = curve
    return curves


def cmd_nstar_fit(args) -> int:
    if not args.curves:
        raise UsageError("no curve files given")
    ln_eps_list = _parse_float_list(args.ln_eps)
    if not ln_eps_list:
        raise UsageError("empty --ln-eps list")
    out_dir = args.out or os.environ.get("UCESIM_OUT", ".")
    os.makedirs(out_dir, exist_ok=True)
    curves = read_curves(args.curves)
    warnings = 0
    for label in sorted(curves):
        by_nq = curves[label]
        nstar_path = os.path.join(out_dir, f"nstar_{label}.csv")
        fits_path = os.path.join(out_dir, f"fits_{label}.csv")
        with open(nstar_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["nq", "ln_eps", "n_star"])
            table = defaultdict(list)
            for ln_eps in ln_eps_list:
                eps = math.exp(ln_eps)
                for nq in sorted(by_nq):
                    ns = n_star(by_nq[nq], eps, guard_factor=args.guard)
                    writer.writerow([nq, _fmt(ln_eps), "NA" if ns is None else ns])
                    if ns is not None:
                        table[ln_eps].append(NStarPoint(n_q=nq, ln_eps=ln_eps, n_star=ns))
        with open(fits_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "ln_eps", "a", "b", "chi2"])
            for ln_eps in ln_eps_list:
                pts = table.get(ln_eps, [])
                if len(pts) < 3:
                    warnings += 1
                    print(f"warning: {label} ln_eps={ln_eps}: only {len(pts)} "
                          "reachable points, fits skipped", file=sys.stderr)
                    for model in MODELS:
                        writer.writerow([model, _fmt(ln_eps), "NA", "NA", "NA"])
                    continue
                for model in MODELS:
                    fit = fit_model(pts, model)
                    writer.writerow([model, _fmt(ln_eps), _fmt(fit.a),
                                     _fmt(fit.b), _fmt(fit.chi2)])
    if warnings:
        print(f"{warnings} fit group(s) skipped", file=sys.stderr)
    return EXIT_OK


def cmd_gap(args) -> int:
    from .moment_operator import build_moment_operator, spectral_gap

    rng = np.random.default_rng(args.seed)
    g, sigma = build_moment_operator(args.samples, rng, exact=args.exact)
    res = spectral_gap(g, sigma=sigma, sample_count=0 if args.exact else args.samples)
    report = {
        "gap": res.gap,
        "multiplicity": res.multiplicity,
        "samples": res.sample_count,
        "sigma_estimate": res.sigma,
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    if not 2 <= args.nq_max <= 8:
        raise UsageError("nq-max must be in 2..8")
    failures = 0

    # Bitwise kernels against the dense full-matrix oracle.
    for trial in range(args.trials):
        nq = 2 + trial % (args.nq_max - 1)
        circuit = sample_circuit(args.seed, trial, nq, 30)
        column = simulate_first_column(circuit, [30])[0].amplitudes
        oracle = dense_unitary_oracle(circuit)[:, 0]
        err = float(np.max(np.abs(column - oracle)))
        ok = err < 1e-12
        failures += not ok
        print(f"oracle nq={nq} trial={trial} err={err:.3e} "
              f"{'ok' if ok else 'FAIL'}")

    # Estimators against Haar-sampled first columns.
    rng = np.random.default_rng(args.seed)
    N = 8
    states = [StateColumn(3, sample_haar_first_column(N, rng)) for _ in range(4000)]
    y2 = np.concatenate([(N * np.abs(s.amplitudes) ** 2) ** 2 for s in states])
    for name, est, ref, spread in (
        ("mu1", moment_estimate(states, 1), cue_moment(1, N), 0.0),
        ("mu2", moment_estimate(states, 2), cue_moment(2, N),
         float(np.std(y2)) / math.sqrt(y2.size)),
        ("c2", correlator_estimate(states, 2), cue_correlator(2, N), None),
    ):
        if spread is None:
            ok = abs(est - ref) / ref < 0.05
        elif spread == 0.0:
            ok = abs(est - ref) < 1e-12
        else:
            ok = abs(est - ref) < 5 * spread
        failures += not ok
        print(f"haar {name} est={est:.6f} ref={ref:.6f} {'ok' if ok else 'FAIL'}")

    print(f"{'PASS' if failures == 0 else 'FAIL'} ({failures} failure(s))")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def cmd_dump_circuit(args) -> int:
    circuit = sample_circuit(args.seed, args.index, args.nq, args.ng)
    sys.stdout.write(circuit_to_text(circuit))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ucesim", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="run ensembles and write curve CSVs")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--nq", help="comma list of qubit counts")
    p.add_argument("--statistics", help="comma list, e.g. pl,mu2,c2,mu4x0")
    p.add_argument("--checkpoints", help="comma list of gate counts")
    p.add_argument("--nr", type=int, help="explicit realization count")
    p.add_argument("--sizing", help="a,b for n_r = a*2^(b-nq)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--pg", type=float, help="single-qubit gate probability")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory (default $UCESIM_OUT or .)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("nstar-fit", help="extract n* and fit f1/f2/f3")
    p.add_argument("curves", nargs="*", help="curve CSV files")
    p.add_argument("--ln-eps", required=True, help="comma list of ln(eps) values")
    p.add_argument("--guard", type=float, default=2.0,
                   help="saturation guard factor (default 2)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_nstar_fit)

    p = sub.add_parser("gap", help="moment-operator spectral gap report")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true",
                   help="exact Haar averages instead of Monte Carlo")
    p.add_argument("--out", help="write the JSON report here as well")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("oracle-check", help="run verification suites")
    p.add_argument("--nq-max", type=int, default=5)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("dump-circuit", help="print one circuit serialization")
    p.add_argument("--nq", type=int, required=True)
    p.add_argument("--ng", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.set_defaults(func=cmd_dump_circuit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
