import csv
import json
import subprocess
import sys

import pytest

from twlab.cli import main
from twlab.exact_linalg import ExactMatrix, read_matrix_market, write_matrix_market


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def test_algebra_report(tmp_path):
    code, out = run(tmp_path, "algebra", "--n", "5", "--m", "1", name="r.json")
    assert code == 0
    report = json.loads(out.read_text())
    assert report["dims"]["t_closure"] == report["dims"]["sum_gr"] == 26
    assert report["dims"]["closed_form"] == 26
    assert set(report["checks"].values()) == {"pass"}
    assert report["timings_ms"] == {}


def test_algebra_at_3m_passes_with_erratum_flag(tmp_path):
    code, out = run(tmp_path, "algebra", "--n", "3", "--m", "1")
    assert code == 0
    report = json.loads(out.read_text())
    assert report["dims"]["t_closure"] == 20 and report["dims"]["closed_form"] == 22
    assert any("closed_form_vs_sum_gr" in f for f in report["erratum_flags"])


def test_reports_are_byte_identical(tmp_path):
    _, a = run(tmp_path, "algebra", "--n", "4", "--m", "1", name="a.json")
    _, b = run(tmp_path, "algebra", "--n", "4", "--m", "1", name="b.json")
    assert a.read_bytes() == b.read_bytes()


def test_timings_opt_in(tmp_path):
    code, out = run(tmp_path, "thin", "--n", "4", "--m", "1", "--timings")
    assert code == 0
    assert json.loads(out.read_text())["timings_ms"]


@pytest.mark.parametrize("cmd, check", [("basis", "basis_h"), ("thin", "thin_symmetry"), ("corner", "corner_dim")])
def test_subcommands_run_their_checks(tmp_path, cmd, check):
    code, out = run(tmp_path, cmd, "--n", "4", "--m", "1")
    checks = json.loads(out.read_text())["checks"]
    assert code == 0 and checks[check] == "pass" and checks["t_eq_m"] == "skipped"


def test_below_hypothesis_is_usage_error(tmp_path, capsys):
    code, out = run(tmp_path, "algebra", "--n", "5", "--m", "2")
    assert code == 2 and not out.exists()
    assert "--exploratory" in capsys.readouterr().err


def test_exploratory_run(tmp_path):
    code, out = run(tmp_path, "algebra", "--n", "5", "--m", "2", "--exploratory")
    assert code == 0
    assert json.loads(out.read_text())["checks"]["t_eq_m"].startswith("exploratory:")


def test_ambient_cap(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TWLAB_AMBIENT_CAP", "100")
    code, _ = run(tmp_path, "algebra", "--n", "5", "--m", "1")
    assert code == 2
    assert "exceeds the cap" in capsys.readouterr().err
    monkeypatch.setenv("TWLAB_AMBIENT_CAP", "lots")
    assert run(tmp_path, "algebra", "--n", "5", "--m", "1")[0] == 2


def test_identities(tmp_path):
    code, out = run(tmp_path, "identities", "--v-max", "4")
    assert code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert records and all(r["passed"] for r in records)
    assert "iv-printed" not in {r["identity"] for r in records}


def test_identities_errata_do_not_fail(tmp_path):
    code, out = run(tmp_path, "identities", "--v-max", "4", "--errata")
    assert code == 0
    failed = [json.loads(line) for line in out.read_text().splitlines() if '"passed": false' in line]
    assert failed and {r["identity"] for r in failed} == {"iv-printed"}


def test_dims_csv(tmp_path):
    code, out = run(tmp_path, "dims", "--m-max", "2", "--n-max", "8")
    assert code == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["m", "n", "sum_gr", "closed_form", "closure", "flag"]
    assert ["1", "5", "26", "26", "26", "ok"] in rows
    assert ["1", "3", "20", "22", "20", "erratum?"] in rows
    assert ["2", "6", "74", "76", "74", "erratum?"] in rows
    assert ["2", "8", "80", "80", "80", "ok"] in rows


def test_dims_json_without_closure(tmp_path):
    code, out = run(tmp_path, "dims", "--m-max", "3", "--n-max", "12", "--no-closure", "--format", "json")
    assert code == 0
    rows = json.loads(out.read_text())
    row = next(r for r in rows if (r["m"], r["n"]) == (3, 12))
    assert row["closure"] == "" and row["flag"] == "skipped" and row["sum_gr"] == row["closed_form"]


def test_graph_json_and_mutated_adjacency(tmp_path):
    code, out = run(tmp_path, "graph", "--n", "5", "--m", "1")
    assert code == 0
    rec = json.loads(out.read_text())
    assert rec["class_sizes"] == [1, 4, 4, 6] and rec["diameter"] == 3

    code, mtx = run(tmp_path, "graph", "--n", "5", "--m", "1", "--format", "matrix-market", name="a.mtx")
    assert code == 0
    A = read_matrix_market(mtx.open())
    entries = dict(A.entries)
    r, c = next(k for k in sorted(entries) if k[0] < k[1])
    del entries[r, c], entries[c, r]
    bad = tmp_path / "bad.mtx"
    with bad.open("w") as fh:
        write_matrix_market(ExactMatrix(A.rows, A.cols, entries), fh)

    code, out = run(tmp_path, "graph", "--n", "5", "--m", "1", "--adjacency", str(bad), name="g.json")
    assert code == 1
    rec = json.loads(out.read_text())
    assert rec["checks"]["block_structure"] == "fail"
    assert "first_block_mismatch" in rec

    code, out = run(tmp_path, "algebra", "--n", "5", "--m", "1", "--adjacency", str(bad), name="bad.json")
    assert code == 1
    assert json.loads(out.read_text())["checks"]["block_structure"] == "fail"


def test_export(tmp_path):
    code, out = run(tmp_path, "export", "--n", "3", "--m", "1", "--what", "dual", "--index", "1", name="e1.mtx")
    assert code == 0
    assert read_matrix_market(out.open()).trace() == 2
    code, out = run(tmp_path, "export", "--n", "3", "--m", "1", "--what", "t-basis", name="tb")
    assert code == 0 and len(list(out.glob("*.mtx"))) == 20
    code, out = run(tmp_path, "export", "--n", "3", "--m", "1", "--format", "edges", name="e.txt")
    assert code == 0 and len(out.read_text().splitlines()) == 6
    assert run(tmp_path, "export", "--n", "3", "--m", "1", "--what", "dual", "--index", "9")[0] == 2


def test_seed_check(capsys):
    assert main(["--seed-check"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_no_command_is_usage_error():
    assert main([]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "twlab", "algebra", "--n", "3", "--m", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["dims"]["t_closure"] == 20
