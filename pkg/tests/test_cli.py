import csv
import io
import json

import numpy as np
import pytest

from gsrw import __version__, cli


def run(argv, capsys):
    rc = cli.main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    return rows[0], rows[1:]


def test_gsd_pmf_rows(capsys):
    rc, out, _ = run(["gsd-pmf", "--lambda", "1.5", "--tmax", "3"], capsys)
    assert rc == 0
    header, rows = parse_csv(out)
    assert header[:2] == ["t", "pmf"]
    assert [(int(r[0]), float(r[1])) for r in rows] == [(1, 0.75), (2, 0.125), (3, 0.046875)]


def test_csv_metadata_echo(capsys):
    _, out, _ = run(["gsd-moments", "--lambda-list", "1.5,2.5"], capsys)
    meta = [ln for ln in out.splitlines() if ln.startswith("#")]
    assert meta[0] == f"# artifact {__version__} command=gsd-moments"
    assert "lambda_list=[1.5, 2.5]" in meta[1]
    header, rows = parse_csv(out)
    assert float(rows[0][header.index("mean")]) == 2.0
    assert rows[0][header.index("variance")] == "inf"


@pytest.mark.parametrize("argv", [
    ["nope"],
    ["gsd-pmf", "--lambda", "-1"],
    ["srw-sim", "--sigma0", "2"],
    ["gsd-pmf", "--format", "xml"],
    ["predict", "--lambda", "2"],
    [],
])
def test_usage_errors_exit_one(argv, capsys):
    rc, _, err = run(argv, capsys)
    assert rc == cli.EXIT_USAGE
    assert "usage error" in err


@pytest.mark.parametrize("argv", [
    ["srw-propagator", "--horizon", "1025"],
    ["srw-exact", "--horizon", "20000"],
    ["renewal-aged", "--horizon", "8", "--tau-max", "300"],
])
def test_resource_cap_exit_two(argv, capsys):
    rc, _, err = run(argv, capsys)
    assert rc == cli.EXIT_CAP
    assert "cap" in err


def test_selftest_passes(capsys):
    rc, out, _ = run(["selftest"], capsys)
    assert rc == 0
    assert "FAIL" not in out
    assert out.strip().endswith("checks passed")


def test_selftest_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "_selftest_checks", lambda: [("broken", False, "forced")])
    rc, out, _ = run(["selftest"], capsys)
    assert rc == cli.EXIT_SELFTEST
    assert "FAIL broken" in out


def test_fig2_columns(capsys):
    rc, out, _ = run(["fig2", "--horizon", "10000"], capsys)
    assert rc == 0
    header, rows = parse_csv(out)
    assert header == ["t", "X_1.2", "X_1.5", "X_1.8", "plateau_1.2", "plateau_1.5", "plateau_1.8"]
    last = rows[-1]
    assert abs(float(last[2])) < 0.01
    assert float(last[5]) == 0.0
    assert float(last[4]) == pytest.approx(1.5)
    assert float(last[6]) == pytest.approx(-0.375)


def test_fig1_default_lambdas(capsys):
    rc, out, _ = run(["fig1", "--horizon", "50"], capsys)
    assert rc == 0
    header, rows = parse_csv(out)
    assert header == ["t", "psi_0.3", "psi_1.3", "psi_4.3", "psi_9.3", "tail_0.3", "tail_9.3"]
    assert len(rows) == 50
    assert float(rows[0][1]) == pytest.approx(0.3)
    # tail columns decay as t**-(m+mu)
    t1, t2 = float(rows[9][0]), float(rows[49][0])
    ratio = float(rows[49][5]) / float(rows[9][5])
    assert ratio == pytest.approx((t2 / t1) ** -1.3)


def test_srw_sim_byte_identical_across_threads(tmp_path, capsys):
    paths = []
    for threads in ("1", "4", "1"):
        path = tmp_path / f"sim_{len(paths)}.csv"
        argv = ["srw-sim", "--lambda", "1.5", "--horizon", "64", "--walkers", "150000",
                "--seed", "42", "--threads", threads, "--out", str(path)]
        assert run(argv, capsys)[0] == 0
        paths.append(path)
    data = [p.read_bytes() for p in paths]
    assert data[0] == data[1] == data[2]
    assert b"threads" not in data[0]


def test_gsd_sample_byte_identical(tmp_path, capsys):
    outs = []
    for threads in ("1", "3"):
        path = tmp_path / f"s{threads}.csv"
        run(["gsd-sample", "--lambda", "0.6", "--walkers", "140000", "--seed", "1",
             "--threads", threads, "--out", str(path)], capsys)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    header, rows = parse_csv(outs[0].decode())
    assert sum(int(r[1]) for r in rows) == 140000


def test_srw_exact_and_predict(capsys):
    rc, out, _ = run(["srw-exact", "--lambda", "1.5", "--horizon", "8"], capsys)
    assert rc == 0
    header, rows = parse_csv(out)
    assert header == ["t", "mean_position", "msd", "mean_step"]
    assert float(rows[1][2]) == pytest.approx(1.0)
    rc, out, _ = run(["predict", "--lambda-list", "0.5,1.5,2.5"], capsys)
    header, rows = parse_csv(out)
    assert [r[1] for r in rows] == ["ballistic_superdiffusive", "superdiffusive", "normal"]


def test_propagator_outputs(capsys):
    rc, out, _ = run(["srw-propagator", "--horizon", "6", "--method", "cf"], capsys)
    assert rc == 0
    header, rows = parse_csv(out)
    assert header == ["X", "t", "prob"]
    probs = np.array([[int(r[0]), int(r[1]), float(r[2])] for r in rows])
    for t in range(7):
        assert probs[probs[:, 1] == t, 2].sum() == pytest.approx(1.0)
    rc, out, _ = run(["srw-propagator", "--horizon", "6", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["meta"]["command"] == "srw-propagator"
    grid = np.array(doc["probs"])
    assert grid.shape == (13, 7)
    assert np.allclose(grid.sum(axis=0), 1.0)


def test_renewal_commands(capsys):
    rc, out, _ = run(["renewal-states", "--horizon", "10"], capsys)
    header, rows = parse_csv(out)
    assert header[0] == "t" and header[-1] == "remainder"
    assert rc == 0 and len(rows) == 11
    rc, out, _ = run(["renewal-aged", "--horizon", "6", "--tau-max", "4", "--format", "json"],
                     capsys)
    doc = json.loads(out)
    assert doc["axes"] == ["m", "tau", "t"]
    assert np.array(doc["probs"]).shape == (7, 5, 7)
    rc, out, _ = run(["renewal-aged", "--horizon", "2", "--tau-max", "1"], capsys)
    header, _ = parse_csv(out)
    assert header == ["m", "tau", "t", "prob"]


def test_diagnose_limits(capsys):
    rc, out, _ = run(["diagnose-limits", "--n", "3", "--eps", "0.001"], capsys)
    assert rc == 0
    header, rows = parse_csv(out)
    rec = dict(zip(header, rows[0]))
    assert float(rec["moment_minus"]) == pytest.approx(6.0, rel=0.05)


def test_srw_sim_json_histogram(tmp_path, capsys):
    path = tmp_path / "h.json"
    run(["srw-sim", "--horizon", "8", "--walkers", "500", "--format", "json",
         "--out", str(path)], capsys)
    doc = json.loads(path.read_text())
    hist = np.array(doc["histogram"])
    assert hist.shape == (17, 9)
    assert np.all(hist.sum(axis=0) == 500)
