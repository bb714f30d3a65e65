import json

import numpy as np
import pytest

from segccr import MissingColumn, ParseError, TooFew, UnknownWorkflow
from segccr.cli import main, parse_tau_grid
from segccr.io import RESULT_KEYS, dumps_result, read_scores
from segccr.types import CutoffGrid


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_read_minimal(tmp_path):
    p = write(tmp_path, "s.tsv", "wf\ty1\ty2\na\t1.0\t2.0\na\t2.0\t1.0\n")
    table = read_scores(p)
    assert table.workflow_ids == ["a"]
    assert table.workflows[0].n == 2


def test_read_groups_preserve_order(tmp_path):
    p = write(tmp_path, "s.tsv", "workflow\ty1\ty2\nb\t1\t2\na\t3\t4\nb\t5\t6\na\t7\t8\n")
    table = read_scores(p)
    assert table.workflow_ids == ["b", "a"]
    assert np.array_equal(table.workflows[0].y1, [1.0, 5.0])


def test_missing_column(tmp_path):
    p = write(tmp_path, "s.tsv", "workflow\ty1\na\t1\n")
    with pytest.raises(MissingColumn):
        read_scores(p)


def test_parse_error_reports_line(tmp_path):
    p = write(tmp_path, "s.tsv", "workflow\ty1\ty2\na\t1\t2\na\tx\t2\n")
    with pytest.raises(ParseError, match="line 3"):
        read_scores(p)


def test_single_row_workflow(tmp_path):
    p = write(tmp_path, "s.tsv", "workflow\ty1\ty2\na\t1\t2\na\t2\t3\nb\t1\t1\n")
    with pytest.raises(TooFew):
        read_scores(p)


def test_unknown_workflow(tmp_path):
    s = write(tmp_path, "s.tsv", "workflow\ty1\ty2\na\t1\t2\na\t2\t1\nb\t1\t2\nb\t2\t1\n")
    c = write(tmp_path, "c.tsv", "workflow\tx1\na\t0\n")
    with pytest.raises(UnknownWorkflow):
        read_scores(s, c)


def test_digest_tracks_bytes(tmp_path):
    a = write(tmp_path, "a.tsv", "workflow\ty1\ty2\na\t1\t2\na\t2\t1\n")
    b = write(tmp_path, "b.tsv", "workflow\ty1\ty2\na\t1\t2\na\t2\t1\n")
    c = write(tmp_path, "c.tsv", "workflow\ty1\ty2\na\t1\t2\na\t2\t1.5\n")
    assert read_scores(a).digest == read_scores(b).digest != read_scores(c).digest


def test_tau_grid_specs():
    grid = CutoffGrid.equally_spaced(10)
    assert np.allclose(parse_tau_grid("auto", grid), np.arange(1, 10) / 10)
    assert np.allclose(parse_tau_grid("trim=0.2", grid), np.arange(2, 9) / 10)
    assert np.allclose(parse_tau_grid("0.2:0.4:0.1", grid), [0.2, 0.3, 0.4])
    assert np.allclose(parse_tau_grid("0.5,0.25", grid), [0.25, 0.5])
    from segccr import DomainError

    with pytest.raises(DomainError):
        parse_tau_grid("0.5,1.0", grid)
    with pytest.raises(DomainError):
        parse_tau_grid("a:b", grid)


def test_result_document_requires_keys():
    with pytest.raises(ValueError):
        dumps_result({"model": {}})
    text = dumps_result({k: {} for k in RESULT_KEYS} | {"estimates": {"x": float("nan")}})
    assert json.loads(text)["estimates"]["x"] is None


@pytest.fixture
def sim_file(tmp_path):
    out = tmp_path / "sim.tsv"
    rc = main(["simulate", "--n", "1500", "--pi1", "0.7", "--theta2", "2", "--seed", "7", "--out", str(out)])
    assert rc == 0
    return out


def test_simulate_is_deterministic(tmp_path, sim_file):
    again = tmp_path / "again.tsv"
    main(["simulate", "--n", "1500", "--pi1", "0.7", "--theta2", "2", "--seed", "7", "--out", str(again)])
    assert sim_file.read_bytes() == again.read_bytes()
    assert len(sim_file.read_text().splitlines()) == 1501


def test_fit_round_trip(tmp_path, sim_file):
    out, plot = tmp_path / "r.json", tmp_path / "p.tsv"
    rc = main([
        "fit", "--scores", str(sim_file), "--orientation", "high", "--bootstrap", "5",
        "--out", str(out), "--plot-data", str(plot),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert set(doc) == set(RESULT_KEYS)
    assert doc["estimates"]["tau"]["estimate"] == pytest.approx(0.7, abs=0.05)
    assert doc["estimates"]["tau"]["se"] > 0
    assert doc["provenance"]["seed"] == 0
    lines = plot.read_text().splitlines()
    assert lines[0] == "workflow\tt\tpsi_empirical\tpsi_fitted"
    assert len(lines) == 101


def test_fit_multi_workflow_dummy_coding(tmp_path):
    scores, cov = tmp_path / "s.tsv", tmp_path / "c.tsv"
    rc = main([
        "simulate", "--n", "1000", "--pi1", "0.6", "--theta2", "1.2", "--theta2", "2.0",
        "--theta2", "3.0", "--out", str(scores), "--covariates-out", str(cov),
    ])
    assert rc == 0
    assert cov.read_text().splitlines()[0] == "workflow\tx1\tx2"
    out = tmp_path / "r.json"
    assert main(["fit", "--scores", str(scores), "--orientation", "high", "--bootstrap", "4", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert {"beta_11", "beta_12", "beta_21", "beta_22"} <= set(doc["estimates"])
    assert [t["coefficient"] for t in doc["tests"]] == ["beta_11", "beta_12", "beta_21", "beta_22"]
    out2 = tmp_path / "r2.json"
    rc = main([
        "fit", "--scores", str(scores), "--covariates", str(cov), "--orientation", "high",
        "--bootstrap", "0", "--out", str(out2),
    ])
    assert rc == 0
    assert json.loads(out2.read_text())["model"]["covariate_names"] == ["x1", "x2"]


def test_test_and_curve_commands(tmp_path, sim_file):
    out = tmp_path / "t.json"
    assert main(["test", "--scores", str(sim_file), "--orientation", "high", "--nb", "20", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["tests"][0]["p_value"] < 0.05
    curve = tmp_path / "c.tsv"
    assert main(["curve", "--scores", str(sim_file), "--cutoffs", "10", "--out", str(curve)]) == 0
    lines = curve.read_text().splitlines()
    assert lines[0] == "workflow\tt\tpsi_empirical" and len(lines) == 11
    assert lines[-1].endswith("\t1.0")


@pytest.mark.parametrize(
    "argv",
    [
        ["fit", "--scores", "X", "--cutoffs", "0"],
        ["test", "--scores", "X", "--nb", "1"],
        ["benchmark", "--replicates", "5"],
        ["fit", "--scores", "/nonexistent/file.tsv"],
        ["simulate", "--theta2", "0.5", "--out", "/dev/null"],
    ],
)
def test_input_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_numerical_failure_exits_3(tmp_path, monkeypatch, sim_file):
    import segccr.cli as cli
    from segccr import AllFitsFailed

    def boom(*a, **k):
        raise AllFitsFailed("forced")

    monkeypatch.setattr(cli, "fit_segmented", boom)
    assert main(["fit", "--scores", str(sim_file), "--out", str(tmp_path / "x.json")]) == 3


def test_benchmark_smoke(tmp_path, monkeypatch):
    import segccr.benchmark as bench

    rows = bench.select_rows(["table1", "table5"], match=["I-1.2-0.80"])
    records = bench.run_benchmark(rows, R=10, n=1000, NB=10)
    path = tmp_path / "b.jsonl"
    bench.write_report(records, path)
    back = bench.read_report(path)
    assert back == json.loads(json.dumps(records))
    stats = {(r["table"], r["statistic"]) for r in back}
    assert ("table1", "tau_mean") in stats and ("table5", "reject_rate") in stats
    assert all({"table", "row", "scenario", "statistic", "value", "reference"} <= set(r) for r in back)


def test_benchmark_row_sets():
    import segccr.benchmark as bench

    assert len(bench.select_rows(["table1"])) == 16
    assert len(bench.select_rows(["table3"])) == 8
    assert len(bench.select_rows(["table4"])) == 16
    assert [r.spec.pi1 for r in bench.select_rows(["table5"])] == [0.0, 0.8, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99, 1.0]
    from segccr import DomainError

    with pytest.raises(DomainError):
        bench.select_rows(["table9"])
    with pytest.raises(DomainError):
        bench.run_benchmark(bench.select_rows(["table5"]), R=3)
