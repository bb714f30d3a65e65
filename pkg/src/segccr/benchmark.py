"""Monte Carlo harness for the simulation tables.

A run is a list of rows.  Each row fixes a scenario and the kind of
computation done per replicate:

``baseline``   single-workflow segmented and homogeneous fits, with MISE
``covariate``  two-workflow dummy-coded fit with bootstrap Wald tests
``power``      single-workflow change-point test

Replicate r of row k draws its data from stream ``(seed, k, r)``; bootstrap
and multiplier draws hang beneath that stream, so every number in a report is
a function of the seed alone.

The report is JSON lines, one record per (row, statistic)::

    {"table": "table1", "row": "I-1.2-0.80", "kind": "baseline",
     "scenario": {...}, "R": 25, "statistic": "tau_mean",
     "value": 0.7731, "reference": 0.773}

``reference`` is the target value for the row when one is defined, else null.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from ._parallel import pmap
from .empirical import empirical_curve, to_uniform_ranks
from .estimation import default_tau_grid, fit_segmented
from .exceptions import DomainError, NumericalError
from .inference import bootstrap, qlr_null_pvalue, wald_tests
from .likelihood import DesignSet
from .simulation import Scenario, ScenarioSpec, generate, mise
from .types import CutoffGrid, Orientation, SeededRng

PROFILES = {
    "fast": dict(R=25, n=4000, B=100, NB=200),
    "full": dict(R=100, n=10000, B=100, NB=1000),
}

M_CUTOFFS = 100
# simulated strong candidates carry the larger scores
ORIENTATION = Orientation.HIGHER_IS_STRONGER


@dataclass(frozen=True)
class BenchmarkRow:
    table: str
    label: str
    kind: str
    spec: ScenarioSpec
    reference: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# row definitions

_PI = (0.6, 0.8, 0.9, 0.95)


def _baseline_rows():
    blocks = [
        (
            "I-1.2",
            dict(scenario=Scenario.GUMBEL_MIXTURE, theta1=1.0, theta2=1.2),
            (0.557, 0.773, 0.882, 0.938),
            (8.592, 5.487, 5.142, 5.068),
            (17.288, 14.969, 9.201, 6.363),
        ),
        (
            "I-3.0",
            dict(scenario=Scenario.GUMBEL_MIXTURE, theta1=1.0, theta2=3.0),
            (0.584, 0.796, 0.898, 0.953),
            (5.280, 5.236, 5.152, 5.115),
            (23.072, 17.750, 9.953, 6.547),
        ),
        (
            "II-0.0",
            dict(scenario=Scenario.BIVARIATE_NORMAL_MIXTURE, theta1=0.0, theta2=0.9, mu2=2.5),
            (0.596, 0.800, 0.903, 0.955),
            (5.320, 5.313, 5.223, 5.125),
            (20.567, 15.377, 8.960, 6.200),
        ),
        (
            "II-0.4",
            dict(scenario=Scenario.BIVARIATE_NORMAL_MIXTURE, theta1=0.4, theta2=0.9, mu2=2.5),
            (0.601, 0.817, 0.919, 0.966),
            (5.133, 5.079, 5.156, 5.280),
            (10.758, 8.118, 5.772, 5.342),
        ),
    ]
    rows = []
    for name, kw, taus, seg, hom in blocks:
        for pi1, tau, s, h in zip(_PI, taus, seg, hom):
            ref = dict(tau_mean=tau, mise_segmented_mean=s * 1e-4, mise_homogeneous_mean=h * 1e-4)
            rows.append(BenchmarkRow("table1", f"{name}-{pi1:.2f}", "baseline", ScenarioSpec(pi1=pi1, **kw), ref))
    return rows


_COEF = ("tau", "beta_01", "beta_02", "beta_11", "beta_12")


def _covariate_refs(est, power):
    ref = {f"{c}_mean": v for c, v in zip(_COEF, est)}
    ref["reject_beta_11"], ref["reject_beta_12"] = power
    return ref


def _covariate_rows(table, base_kw, strong, blocks):
    rows = []
    for setting, theta_alt, entries in blocks:
        for pi1, (est, power) in zip(_PI, entries):
            wf = ({}, {strong: theta_alt})
            spec = ScenarioSpec(pi1=pi1, workflows=wf, **base_kw)
            label = f"{setting}-{pi1:.2f}"
            rows.append(BenchmarkRow(table, label, "covariate", spec, _covariate_refs(est, power)))
    return rows


def _table3_rows():
    same = [
        ((0.559, 1.911, 1.260, 0.002, -0.000), (0.030, 0.030)),
        ((0.773, 1.937, 1.288, 0.002, 0.000), (0.060, 0.040)),
        ((0.880, 1.960, 1.351, 0.002, 0.002), (0.050, 0.060)),
        ((0.938, 1.974, 1.408, 0.001, 0.002), (0.030, 0.020)),
    ]
    diff = [
        ((0.564, 1.904, 1.256, 0.012, -0.045), (0.080, 0.990)),
        ((0.778, 1.933, 1.282, 0.010, -0.031), (0.090, 0.580)),
        ((0.886, 1.955, 1.337, 0.008, -0.031), (0.060, 0.330)),
        ((0.940, 1.972, 1.402, 0.005, -0.030), (0.050, 0.140)),
    ]
    kw = dict(scenario=Scenario.GUMBEL_MIXTURE, theta1=1.0, theta2=1.2)
    return _covariate_rows("table3", kw, "theta2", [("same", 1.2, same), ("different", 2.0, diff)])


def _table4_rows():
    blocks = {
        0.0: (
            [
                ((0.563, 1.869, 1.295, 0.002, 0.001), (0.070, 0.000)),
                ((0.778, 1.916, 1.350, -0.001, -0.001), (0.080, 0.020)),
                ((0.885, 1.945, 1.422, 0.002, -0.003), (0.020, 0.000)),
                ((0.940, 1.966, 1.489, 0.002, -0.003), (0.020, 0.000)),
            ],
            [
                ((0.580, 1.851, 1.286, 0.028, -0.069), (0.190, 1.000)),
                ((0.789, 1.908, 1.338, 0.013, -0.062), (0.100, 0.980)),
                ((0.895, 1.939, 1.401, 0.010, -0.067), (0.090, 0.810)),
                ((0.951, 1.960, 1.444, 0.006, -0.077), (0.040, 0.530)),
            ],
        ),
        0.4: (
            [
                ((0.561, 1.522, 1.259, 0.000, 0.001), (0.010, 0.040)),
                ((0.786, 1.561, 1.304, 0.000, -0.001), (0.040, 0.030)),
                ((0.901, 1.589, 1.355, -0.001, -0.001), (0.070, 0.000)),
                ((0.959, 1.608, 1.390, -0.002, -0.002), (0.080, 0.020)),
            ],
            [
                ((0.580, 1.513, 1.256, 0.024, -0.068), (0.250, 1.000)),
                ((0.806, 1.554, 1.294, 0.015, -0.072), (0.160, 1.000)),
                ((0.912, 1.586, 1.344, 0.008, -0.085), (0.070, 0.910)),
                ((0.963, 1.607, 1.379, 0.003, -0.108), (0.040, 0.650)),
            ],
        ),
    }
    rows = []
    for theta1, (same, diff) in blocks.items():
        kw = dict(scenario=Scenario.BIVARIATE_NORMAL_MIXTURE, theta1=theta1, theta2=0.6, mu2=2.5)
        blk = [(f"theta1={theta1:.1f}-same", 0.6, same), (f"theta1={theta1:.1f}-different", 0.9, diff)]
        rows += _covariate_rows("table4", kw, "theta2", blk)
    return rows


_POWER_PI = (0.0, 0.8, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99, 1.0)
_POWER_REF = (0.00, 1.00, 1.00, 1.00, 0.94, 0.29, 0.01, 0.01, 0.01)


def _table5_rows():
    return [
        BenchmarkRow(
            "table5",
            f"I-1.2-{pi1:.2f}",
            "power",
            ScenarioSpec(pi1=pi1, theta1=1.0, theta2=1.2),
            {"reject_rate": ref},
        )
        for pi1, ref in zip(_POWER_PI, _POWER_REF)
    ]


ROW_SETS = {
    "table1": _baseline_rows,
    "table3": _table3_rows,
    "table4": _table4_rows,
    "table5": _table5_rows,
}


def select_rows(names: Iterable[str] = ("table1", "table3", "table4", "table5"), match=None):
    """Rows of the named tables, optionally restricted to labels in ``match``."""
    rows = []
    for name in names:
        if name not in ROW_SETS:
            raise DomainError(f"unknown row set {name!r}; choose from {sorted(ROW_SETS)}")
        rows += ROW_SETS[name]()
    if match is not None:
        match = set(match)
        rows = [r for r in rows if r.label in match]
    return rows


# ---------------------------------------------------------------------------
# replicates


@dataclass(frozen=True)
class _Job:
    row_index: int
    row: BenchmarkRow
    r: int
    seed: int
    n: int
    B: int
    NB: int


def _grid_and_taus():
    grid = CutoffGrid.equally_spaced(M_CUTOFFS)
    return grid, default_tau_grid(grid)


def _baseline_replicate(job: _Job, spec: ScenarioSpec, rng: SeededRng) -> dict:
    pairs = generate(spec, rng)[0]
    grid, taus = _grid_and_taus()
    ranks = to_uniform_ranks(pairs, ORIENTATION)
    data = DesignSet.from_pairs([pairs], grid, ORIENTATION)
    fit = fit_segmented(data, grid, taus)
    emp = empirical_curve(ranks, grid)
    seg = mise(fit.fitted_curve[0], emp)
    hom = mise(fit.homogeneous_curve()[0], emp)
    return dict(
        tau=fit.tau,
        beta_01=fit.params.beta[0, 0],
        beta_02=fit.params.beta[0, 1],
        mise_segmented=seg,
        mise_homogeneous=hom,
        segmented_better=float(seg < hom),
    )


def _covariate_replicate(job: _Job, spec: ScenarioSpec, rng: SeededRng) -> dict:
    pairs = generate(spec, rng)
    grid, taus = _grid_and_taus()
    fit = fit_segmented(DesignSet.from_pairs(pairs, grid, ORIENTATION), grid, taus)
    boot = bootstrap(
        pairs, B=job.B, seed=rng.child(1000), grid=grid, orientation=ORIENTATION, tau_grid=taus, n_jobs=1
    )
    out = {name: float(v) for name, v in zip(_COEF, fit.params.flat())}
    out.update({f"{name}_se": float(v) for name, v in zip(_COEF, boot.se)})
    for test in wald_tests(fit, boot):
        out[f"reject_{test.coefficient}"] = float(test.reject)
    return out


def _power_replicate(job: _Job, spec: ScenarioSpec, rng: SeededRng) -> dict:
    pairs = generate(spec, rng)[0]
    grid, taus = _grid_and_taus()
    res = qlr_null_pvalue(
        pairs, grid, taus, NB=job.NB, seed=rng.child(1000), orientation=ORIENTATION, n_jobs=1
    )
    return dict(qlr=res.qlr, p_value=res.p_value, reject=float(res.p_value < 0.05))


_KINDS = {
    "baseline": _baseline_replicate,
    "covariate": _covariate_replicate,
    "power": _power_replicate,
}


def run_replicate(job: _Job) -> Optional[dict]:
    rng = SeededRng(job.seed, job.row_index).child(job.r)
    spec = replace(job.row.spec, n=job.n)
    try:
        return _KINDS[job.row.kind](job, spec, rng)
    except NumericalError:
        return None


# ---------------------------------------------------------------------------
# aggregation


def _summaries(kind: str, reps: list) -> dict:
    ok = [r for r in reps if r is not None]
    out = {"failures": float(len(reps) - len(ok))}
    if not ok:
        return out
    cols = {k: np.array([r[k] for r in ok]) for k in ok[0]}
    sd = (lambda v: float(v.std(ddof=1))) if len(ok) > 1 else (lambda v: float("nan"))
    if kind == "baseline":
        for k in ("tau", "beta_01", "beta_02"):
            out[f"{k}_mean"] = float(cols[k].mean())
            out[f"{k}_sd"] = sd(cols[k])
        out["mise_segmented_mean"] = float(cols["mise_segmented"].mean())
        out["mise_homogeneous_mean"] = float(cols["mise_homogeneous"].mean())
        out["segmented_better_rate"] = float(cols["segmented_better"].mean())
    elif kind == "covariate":
        for k in _COEF:
            out[f"{k}_mean"] = float(cols[k].mean())
            out[f"{k}_sd"] = sd(cols[k])
            out[f"{k}_ese"] = float(cols[f"{k}_se"].mean())
        out["reject_beta_11"] = float(cols["reject_beta_11"].mean())
        out["reject_beta_12"] = float(cols["reject_beta_12"].mean())
    else:
        out["qlr_mean"] = float(cols["qlr"].mean())
        out["reject_rate"] = float(cols["reject"].mean())
    return out


def _scenario_dict(spec: ScenarioSpec) -> dict:
    d = asdict(spec)
    d["scenario"] = spec.scenario.value
    d["workflows"] = [dict(w) for w in spec.workflows]
    return d


def run_benchmark(
    rows=None,
    R: Optional[int] = None,
    seed: int = 0,
    profile: str = "fast",
    n: Optional[int] = None,
    B: Optional[int] = None,
    NB: Optional[int] = None,
    n_jobs=None,
) -> list:
    """Run every replicate of every row and return report records.

    ``profile`` supplies defaults for ``R``, ``n``, ``B`` and ``NB``; explicit
    arguments override it.
    """
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    cfg = dict(PROFILES[profile])
    for key, val in dict(R=R, n=n, B=B, NB=NB).items():
        if val is not None:
            cfg[key] = int(val)
    if cfg["R"] < 10:
        raise DomainError("a benchmark needs at least R = 10 replicates")
    rows = select_rows() if rows is None else list(rows)

    jobs = [
        _Job(k, row, r, seed, cfg["n"], cfg["B"], cfg["NB"])
        for k, row in enumerate(rows)
        for r in range(cfg["R"])
    ]
    started = time.perf_counter()
    results = pmap(run_replicate, jobs, n_jobs)
    elapsed = time.perf_counter() - started

    records = []
    for k, row in enumerate(rows):
        reps = results[k * cfg["R"] : (k + 1) * cfg["R"]]
        for stat, value in _summaries(row.kind, reps).items():
            records.append(
                dict(
                    table=row.table,
                    row=row.label,
                    kind=row.kind,
                    scenario=_scenario_dict(row.spec) | {"n": cfg["n"]},
                    R=cfg["R"],
                    statistic=stat,
                    value=value,
                    reference=row.reference.get(stat),
                )
            )
    records.append(
        dict(table="run", row="all", kind="meta", scenario={}, R=cfg["R"], statistic="seconds", value=elapsed, reference=None)
    )
    return records


def write_report(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_report(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
