"""Command-line interface: ``segccr {fit,test,simulate,curve,benchmark}``.

Exit status is 0 on success, 2 for input errors (including bad flags) and
3 when a fit or test fails numerically.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from . import benchmark as bench
from .empirical import empirical_curve, to_uniform_ranks
from .estimation import default_tau_grid, fit_segmented
from .exceptions import DomainError, InputError, NumericalError
from .inference import DEFAULT_B, DEFAULT_NB, bootstrap, parameter_names, qlr_null_pvalue, wald_tests
from .io import (
    InputTable,
    dummy_code,
    dumps_result,
    provenance,
    read_scores,
    write_covariates,
    write_plot_data,
    write_scores,
)
from .likelihood import DesignSet
from .simulation import Scenario, ScenarioSpec, generate
from .types import CutoffGrid, Orientation, SeededRng

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# flag helpers


def _positive_int(minimum):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {value}")
        return value

    return parse


def _seed(text):
    value = _positive_int(0)(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def parse_tau_grid(spec: str, grid: CutoffGrid) -> np.ndarray:
    """``auto``, ``trim=F``, ``lo:hi:step`` or a comma-separated list."""
    spec = spec.strip()
    try:
        if spec == "auto":
            taus = default_tau_grid(grid)
        elif spec.startswith("trim="):
            taus = default_tau_grid(grid, float(spec[5:]))
        elif ":" in spec:
            lo, hi, step = (float(v) for v in spec.split(":"))
            if step <= 0 or hi < lo:
                raise DomainError("tau range needs lo <= hi and step > 0")
            count = int(np.floor((hi - lo) / step + 1e-9)) + 1
            taus = np.round(lo + step * np.arange(count), 12)
        else:
            taus = np.array([float(v) for v in spec.split(",") if v.strip()])
    except ValueError:
        raise DomainError(f"cannot parse tau grid {spec!r}") from None
    if taus.size == 0 or np.any((taus <= 0) | (taus >= 1)):
        raise DomainError("tau grid values must lie strictly inside (0, 1)")
    return np.unique(taus)


def _load(args) -> InputTable:
    table = read_scores(args.scores, args.covariates)
    if args.covariates is None and len(table.workflows) > 1:
        table = dummy_code(table)
    return table


def _grid_for(args, table: InputTable) -> CutoffGrid:
    if args.cutoffs is not None:
        return CutoffGrid.equally_spaced(args.cutoffs)
    return CutoffGrid.default_for(min(p.n for p in table.workflows))


# ---------------------------------------------------------------------------
# documents


def _curves(fit, table: InputTable, grid, orientation) -> dict:
    hom = fit.homogeneous_curve()
    out = {}
    for s, p in enumerate(table.workflows):
        emp = empirical_curve(to_uniform_ranks(p, orientation), grid)
        out[p.workflow_id] = {
            "t": emp.t,
            "psi_empirical": emp.psi,
            "psi_fitted": fit.fitted_curve[s],
            "psi_homogeneous": hom[s],
        }
    return out


def fit_document(table: InputTable, grid, taus, orientation, B, seed, n_jobs=None):
    """Fit, optionally bootstrap, and assemble the result document."""
    data = DesignSet.from_pairs(table.workflows, grid, orientation)
    fit = fit_segmented(data, grid, taus)
    names = parameter_names(data.n_coef)
    flat = fit.params.flat()

    boot = None
    if B:
        boot = bootstrap(
            list(table.workflows), B=B, seed=seed, grid=grid, orientation=orientation,
            tau_grid=taus, n_jobs=n_jobs,
        )
    estimates = {}
    for i, name in enumerate(names):
        entry = {"estimate": flat[i]}
        if boot is not None:
            entry["se"] = boot.se[i]
            entry["ci_symmetric"] = boot.ci_symmetric(flat)[i]
            entry["ci_percentile"] = boot.ci_percentile[i]
        estimates[name] = entry
    estimates["loglik"] = fit.loglik
    estimates["homogeneous"] = {
        "slopes": fit.homogeneous_beta,
        "loglik": fit.homogeneous_loglik,
    }
    if boot is not None:
        estimates["bootstrap"] = {"B": B, "failures": boot.failures}

    tests = []
    if boot is not None and data.n_coef > 1:
        tests = [dict(kind="wald", **t.__dict__) for t in wald_tests(fit, boot)]

    curves = _curves(fit, table, grid, orientation)
    doc = {
        "model": {
            "type": "segmented",
            "orientation": orientation.value,
            "cutoffs": grid.M,
            "tau_grid": taus,
            "workflows": [{"id": p.workflow_id, "n": p.n, "covariates": p.covariates} for p in table.workflows],
            "covariate_names": list(table.covariate_names),
        },
        "estimates": estimates,
        "profile": [
            {"tau": p.tau, "loglik": p.loglik, "converged": p.converged, "iterations": p.iterations}
            for p in fit.profile
        ],
        "curves": curves,
        "tests": tests,
        "provenance": provenance(seed, table.digest, __version__),
    }
    return doc, curves


def test_document(table: InputTable, grid, taus, orientation, NB, seed, n_jobs=None):
    """Per-workflow change-point test; workflow s uses stream ``(seed, s)``."""
    tests, estimates, profile = [], {}, {}
    for s, p in enumerate(table.workflows):
        res = qlr_null_pvalue(
            p, grid, taus, NB=NB, seed=SeededRng(seed, s), orientation=orientation, n_jobs=n_jobs
        )
        tests.append({"kind": "qlr", "workflow": p.workflow_id, "qlr": res.qlr, "p_value": res.p_value, "NB": NB})
        estimates[p.workflow_id] = {
            "tau": res.fit.tau,
            "beta": res.fit.params.beta[0],
            "homogeneous_slope": res.fit.homogeneous_beta[0],
        }
        profile[p.workflow_id] = [{"tau": q.tau, "loglik": q.loglik, "converged": q.converged} for q in res.fit.profile]
    return {
        "model": {
            "type": "change_point_test",
            "orientation": orientation.value,
            "cutoffs": grid.M,
            "tau_grid": taus,
            "workflows": [{"id": p.workflow_id, "n": p.n} for p in table.workflows],
        },
        "estimates": estimates,
        "profile": profile,
        "curves": {},
        "tests": tests,
        "provenance": provenance(seed, table.digest, __version__),
    }


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args):
    table = _load(args)
    grid = _grid_for(args, table)
    taus = parse_tau_grid(args.tau_grid, grid)
    orientation = Orientation.parse(args.orientation)
    doc, curves = fit_document(table, grid, taus, orientation, args.bootstrap, args.seed, args.threads)
    _emit(dumps_result(doc), args.out)
    if args.plot_data:
        rows = (
            (wf, t, e, f)
            for wf, c in curves.items()
            for t, e, f in zip(c["t"], c["psi_empirical"], c["psi_fitted"])
        )
        write_plot_data(args.plot_data, rows)


def cmd_test(args):
    table = read_scores(args.scores)
    grid = _grid_for(args, table)
    taus = parse_tau_grid(args.tau_grid, grid)
    orientation = Orientation.parse(args.orientation)
    doc = test_document(table, grid, taus, orientation, args.nb, args.seed, args.threads)
    _emit(dumps_result(doc), args.out)


def cmd_curve(args):
    table = read_scores(args.scores)
    grid = _grid_for(args, table)
    orientation = Orientation.parse(args.orientation)
    lines = ["workflow\tt\tpsi_empirical\n"]
    for p in table.workflows:
        emp = empirical_curve(to_uniform_ranks(p, orientation), grid)
        lines += [f"{p.workflow_id}\t{float(t)!r}\t{float(v)!r}\n" for t, v in zip(emp.t, emp.psi)]
    _emit("".join(lines), args.out)


def cmd_simulate(args):
    thetas2 = args.theta2 or [None]
    kw = dict(n=args.n, pi1=args.pi1)
    for key in ("theta1", "mu1", "mu2"):
        if getattr(args, key) is not None:
            kw[key] = getattr(args, key)
    if len(thetas2) > 1:
        kw["workflows"] = tuple({"theta2": t} for t in thetas2)
    elif thetas2[0] is not None:
        kw["theta2"] = thetas2[0]
    try:
        spec = ScenarioSpec(**kw) if args.scenario == 1 else ScenarioSpec.scenario2(**kw)
    except TypeError as exc:
        raise DomainError(str(exc)) from None
    pairs = generate(spec, SeededRng(args.seed))
    if args.out is None or args.out == "-":
        raise DomainError("simulate needs --out PATH")
    write_scores(args.out, pairs)
    if args.covariates_out and len(pairs) > 1:
        write_covariates(args.covariates_out, pairs)


def cmd_benchmark(args):
    names = [r.strip() for r in args.rows.split(",") if r.strip()]
    rows = bench.select_rows(names)
    records = bench.run_benchmark(
        rows, R=args.replicates, seed=args.seed, profile=args.profile, n=args.n,
        B=args.bootstrap, NB=args.nb, n_jobs=args.threads,
    )
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _emit(text, args.out)


# ---------------------------------------------------------------------------
# parser


def _common(p, cutoffs=True):
    p.add_argument("--scores", required=True, help="tab-separated workflow/y1/y2 table")
    p.add_argument("--orientation", choices=["low", "high"], default="low",
                   help="which end of the score scale is stronger evidence (default: low)")
    if cutoffs:
        p.add_argument("--cutoffs", type=_positive_int(1), default=None,
                       help="number M of equally spaced cutoffs (default: min(100, n))")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segccr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"segccr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit segmented and homogeneous models")
    _common(p)
    p.add_argument("--covariates", default=None, help="tab-separated workflow/x1..xS table")
    p.add_argument("--tau-grid", default="auto", help="auto | trim=F | lo:hi:step | comma list")
    p.add_argument("--bootstrap", type=_positive_int(0), default=DEFAULT_B,
                   help=f"bootstrap replicates, 0 to skip (default: {DEFAULT_B})")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--plot-data", default=None, help="write workflow/t/psi_empirical/psi_fitted TSV")
    p.add_argument("--threads", type=_positive_int(1), default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("test", help="per-workflow change-point test")
    _common(p)
    p.add_argument("--tau-grid", default="auto")
    p.add_argument("--nb", type=_positive_int(10), default=DEFAULT_NB, help="null draws (>= 10)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive_int(1), default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("curve", help="export the empirical correspondence curve")
    _common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="generate synthetic replicate scores")
    p.add_argument("--scenario", type=int, choices=[1, 2], default=1)
    p.add_argument("--n", type=_positive_int(2), default=10000)
    p.add_argument("--pi1", type=float, default=0.8)
    p.add_argument("--theta1", type=float, default=None)
    p.add_argument("--theta2", type=float, action="append", default=None,
                   help="repeat to create one workflow per value")
    p.add_argument("--mu1", type=float, default=None)
    p.add_argument("--mu2", type=float, default=None)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--covariates-out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="Monte Carlo reproduction of the simulation tables")
    p.add_argument("--rows", default="table1,table3,table4,table5",
                   help=f"comma list from {sorted(bench.ROW_SETS)}")
    p.add_argument("--profile", choices=sorted(bench.PROFILES), default="fast")
    p.add_argument("--replicates", type=_positive_int(10), default=None)
    p.add_argument("--n", type=_positive_int(2), default=None)
    p.add_argument("--bootstrap", type=_positive_int(2), default=None)
    p.add_argument("--nb", type=_positive_int(10), default=None)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=_positive_int(1), default=None)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        args.func(args)
    except InputError as exc:
        print(f"segccr: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"segccr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
