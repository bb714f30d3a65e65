"""Tab-separated input, JSON result documents and plot-data export."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import InputError, MissingColumn, ParseError, TooFew, UnknownWorkflow
from .types import ScorePairs

SCORE_COLUMNS = ("workflow", "y1", "y2")
RESULT_KEYS = ("model", "estimates", "profile", "curves", "tests", "provenance")
PLOT_COLUMNS = ("workflow", "t", "psi_empirical", "psi_fitted")


@dataclass(frozen=True)
class InputTable:
    """Score pairs grouped by workflow, in first-appearance order."""

    workflows: tuple
    covariate_names: tuple = ()
    digest: str = ""

    @property
    def workflow_ids(self) -> list:
        return [w.workflow_id for w in self.workflows]

    @property
    def n_covariates(self) -> int:
        return len(self.covariate_names)


def _read_rows(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not valid UTF-8") from None
    rows = list(csv.reader(text.splitlines(), delimiter="\t"))
    # (line number, fields) with blank lines dropped
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(f.strip() for f in r)]
    if not rows:
        raise ParseError(f"{path} is empty", 1)
    return raw, rows


def _header_index(header, required, path):
    names = [h.strip() for h in header]
    if "workflow" not in names and "wf" in names:
        names[names.index("wf")] = "workflow"
    missing = [c for c in required if c not in names]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
    return names


def _float(text, line, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(value):
        raise ParseError(f"column {column!r}: value {text!r} is not finite", line)
    return value


def read_covariates(path) -> tuple:
    """``({workflow: vector}, names, raw bytes)`` from a covariate table."""
    raw, rows = _read_rows(path)
    (_, header), body = rows[0], rows[1:]
    names = _header_index(header, ("workflow",), path)
    wf_col = names.index("workflow")
    cov_cols = [i for i, nm in enumerate(names) if i != wf_col]
    table = {}
    for line, fields in body:
        if len(fields) != len(names):
            raise ParseError(f"expected {len(names)} fields, found {len(fields)}", line)
        wf = fields[wf_col].strip()
        if wf in table:
            raise ParseError(f"workflow {wf!r} listed twice", line)
        table[wf] = np.array([_float(fields[i], line, names[i]) for i in cov_cols])
    return table, tuple(names[i] for i in cov_cols), raw


def read_scores(path, covariates_path=None) -> InputTable:
    """Parse a scores table (and optional per-workflow covariates).

    Each workflow needs at least two rows.  Every workflow in the scores must
    appear in the covariate table when one is given.
    """
    raw, rows = _read_rows(path)
    (_, header), body = rows[0], rows[1:]
    names = _header_index(header, SCORE_COLUMNS, path)
    idx = [names.index(c) for c in SCORE_COLUMNS]

    groups: dict = {}
    for line, fields in body:
        if len(fields) != len(names):
            raise ParseError(f"expected {len(names)} fields, found {len(fields)}", line)
        wf = fields[idx[0]].strip()
        if not wf:
            raise ParseError("empty workflow id", line)
        y1 = _float(fields[idx[1]], line, "y1")
        y2 = _float(fields[idx[2]], line, "y2")
        groups.setdefault(wf, []).append((y1, y2))

    if not groups:
        raise TooFew(f"{path}: no data rows")
    digest = hashlib.sha256(raw)
    cov_table, cov_names = {}, ()
    if covariates_path is not None:
        cov_table, cov_names, cov_raw = read_covariates(covariates_path)
        digest.update(b"\0")
        digest.update(cov_raw)

    workflows = []
    for wf, vals in groups.items():
        if len(vals) < 2:
            raise TooFew(f"workflow {wf!r} has {len(vals)} row; at least 2 are required")
        if covariates_path is not None and wf not in cov_table:
            raise UnknownWorkflow(f"workflow {wf!r} has no row in the covariate table")
        arr = np.array(vals)
        workflows.append(ScorePairs(wf, arr[:, 0], arr[:, 1], cov_table.get(wf, ())))
    return InputTable(tuple(workflows), cov_names, digest.hexdigest())


def dummy_code(table: InputTable) -> InputTable:
    """Indicator covariates for every workflow but the first (the baseline)."""
    W = len(table.workflows)
    eye = np.eye(W)
    wfs = tuple(
        ScorePairs(p.workflow_id, p.y1, p.y2, eye[s, 1:]) for s, p in enumerate(table.workflows)
    )
    names = tuple(f"is_{p.workflow_id}" for p in table.workflows[1:])
    return InputTable(wfs, names, table.digest)


def write_scores(path, pairs_list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(SCORE_COLUMNS) + "\n")
        for p in pairs_list:
            for a, b in zip(p.y1, p.y2):
                fh.write(f"{p.workflow_id}\t{float(a)!r}\t{float(b)!r}\n")


def write_covariates(path, pairs_list, names=None) -> None:
    S = len(pairs_list[0].covariates)
    names = names or [f"x{i + 1}" for i in range(S)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(["workflow", *names]) + "\n")
        for p in pairs_list:
            fh.write("\t".join([p.workflow_id, *(repr(float(v)) for v in p.covariates)]) + "\n")


# ---------------------------------------------------------------------------
# result documents


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def dumps_result(doc: dict) -> str:
    """Canonical JSON text: sorted keys, non-finite numbers as null, trailing newline."""
    missing = [k for k in RESULT_KEYS if k not in doc]
    if missing:
        raise ValueError(f"result document lacks {missing}")
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_result(path, doc: dict) -> None:
    Path(path).write_text(dumps_result(doc), encoding="utf-8")


def write_plot_data(path, rows) -> None:
    """``rows`` yields (workflow, t, psi_empirical, psi_fitted)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(PLOT_COLUMNS) + "\n")
        for wf, t, emp, fit in rows:
            fh.write(f"{wf}\t{float(t)!r}\t{float(emp)!r}\t{float(fit)!r}\n")


def read_result(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def provenance(seed: Optional[int], digest: str, version: str) -> dict:
    return {"seed": seed, "input_sha256": digest, "version": version}
