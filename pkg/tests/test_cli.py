import csv
import io
import json
import subprocess
import sys

import pytest

from kltcyl import acceptance
from kltcyl import params as P
from kltcyl.cli import main, parse_range


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    return [json.loads(line) for line in out.splitlines()]


def test_constants_circle(capsys):
    code, out, _ = run(capsys, "constants", "--d", "2", "--q", "2", "--sphere")
    assert code == 0
    (row,) = rows(out)
    assert row["schema"] == 1
    assert row["mu_star"] == pytest.approx(1.013114, abs=1e-6)
    assert row["mu_star_lower"] == row["mu_star_upper"] == row["mu_star"]


def test_constants_two_sphere(capsys):
    code, out, _ = run(capsys, "constants", "--d", "3", "--q", "3", "--sphere")
    (row,) = rows(out)
    assert code == 0 and row["lambda1_M"] == 2.0
    assert row["lambda_star"] == pytest.approx(1.6, rel=1e-14)


def test_constants_rejects_small_q(capsys):
    code, out, err = run(capsys, "constants", "--d", "3", "--q", "1.4")
    assert code == 2 and out == ""
    assert "q > d/2" in err


def test_constants_csv(capsys):
    code, out, _ = run(capsys, "constants", "--d", "2", "--q", "2", "--format", "csv")
    assert code == 0 and out.endswith("\r\n")
    header, row = list(csv.reader(io.StringIO(out)))
    assert header[0] == "schema" and "mu_star" in header
    assert float(row[header.index("mu1")]) == pytest.approx(4 / 3**0.5, rel=1e-15)


def test_eigen_line_equality(capsys):
    mu1 = repr(P.mu_one(P.make_params(2, 2.0)))
    code, out, _ = run(capsys, "eigen", "line", "--optimal-mu", mu1, "--q", "2")
    (row,) = rows(out)
    assert code == 0 and row["eigenvalue"] == pytest.approx(-1.0, abs=1e-6)
    assert {"s_min", "s_max", "n", "residual", "error_estimate"} <= set(row)


def test_eigen_cylinder_mode_zero(capsys):
    pr = P.make_params(2, 2.0)
    code, out, _ = run(capsys, "eigen", "cylinder", "--optimal-mu", "2.0", "--q", "2", "--sphere-d", "2")
    (row,) = rows(out)
    assert code == 0 and row["mode"] == 0
    assert row["eigenvalue"] == pytest.approx(-P.lambda_R(2.0, pr), abs=1e-5)


def test_eigen_malformed_file(tmp_path, capsys):
    bad = tmp_path / "v.txt"
    bad.write_text("0.0 1.0\nnot numbers\n")
    code, _, err = run(capsys, "eigen", "line", "--potential", str(bad))
    assert code == 3 and "kltcyl" in err
    code, _, _ = run(capsys, "eigen", "line", "--potential", str(tmp_path / "missing.txt"))
    assert code == 3


def test_eigen_needs_a_source(capsys):
    code, _, _ = run(capsys, "eigen", "line")
    assert code == 2


def test_sweep_orders_and_bounds(capsys):
    code, out, _ = run(capsys, "sweep", "--d", "2", "--q", "2", "--mu", "0.5:2.0:10")
    assert code == 0
    data = rows(out)
    assert len(data) == 10
    assert [r["mu"] for r in data] == parse_range("0.5:2.0:10")
    for r in data:
        assert r["Lambda"] >= r["Lambda_R"] * (1.0 - 1e-9)
        assert {"grid_n", "grid_m", "half_length", "tol", "rel_tol"} <= set(r)
    assert data[-1]["symmetry_fraction"] > 1e-2


def test_sweep_deterministic_across_jobs(tmp_path):
    outs = []
    for jobs in ("1", "2"):
        path = tmp_path / f"j{jobs}.json"
        code = main(["-o", str(path), "sweep", "--d", "2", "--q", "2", "--mu", "0.9:1.2:3", "--jobs", jobs])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_sweep_csv_and_env_jobs(capsys, monkeypatch):
    monkeypatch.setenv("KLT_JOBS", "2")
    code, out, _ = run(capsys, "sweep", "--d", "2", "--q", "2", "--mu", "0.5:0.6:2", "--mode", "symmetric",
                       "--format", "csv")
    assert code == 0
    table = list(csv.DictReader(io.StringIO(out)))
    assert len(table) == 2 and table[0]["mode"] == "symmetric"
    assert float(table[0]["Lambda"]) == pytest.approx(float(table[0]["Lambda_R"]), rel=1e-9)
    monkeypatch.setenv("KLT_JOBS", "many")
    code, _, _ = run(capsys, "sweep", "--d", "2", "--q", "2", "--mu", "0.5:0.6:2")
    assert code == 2


@pytest.mark.parametrize("spec", ["1:2", "0:1:3", "a:b:c", "1:2:0"])
def test_bad_range(spec, capsys):
    code, _, _ = run(capsys, "sweep", "--d", "2", "--q", "2", "--mu", spec)
    assert code == 2


def test_threshold_bracket(capsys):
    code, out, _ = run(capsys, "threshold", "--d", "2", "--q", "2")
    (row,) = rows(out)
    assert code == 0 and row["method"] == "variational:general2d"
    assert row["mu_lo"] <= row["closed_form"] <= row["mu_hi"]
    assert row["mu_lo"] >= 0.98 * 1.0131 and row["mu_hi"] <= 1.02 * 1.0131


def test_threshold_inconclusive_exit(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("lam_lo = 0.5\nlam_hi = 3\n")
    code, _, err = run(capsys, "threshold", "--d", "2", "--q", "2", "--config", str(cfg))
    assert code == 4
    assert '"samples"' in err


def test_threshold_bad_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("unknown = 1\n")
    code, _, _ = run(capsys, "threshold", "--d", "2", "--q", "2", "--config", str(cfg))
    assert code == 3


def test_convergence_failure_exit(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("max_iter = 2\nprobe_iter = 2\n")
    code, _, err = run(capsys, "sweep", "--d", "2", "--q", "2", "--mu", "1.2:1.2:1", "--config", str(cfg))
    assert code == 4 and "solver failed" in err


def test_verify_selected(capsys):
    code, out, err = run(capsys, "verify", "--only", "2", "8")
    assert code == 0
    assert out.splitlines()[0].startswith("[PASS]  2") and len(out.splitlines()) == 2
    assert "[PASS]" in err


def test_verify_failure_exit(capsys, monkeypatch):
    @acceptance._timed(2, "forced failure", 1.0)
    def broken(quick=False):
        return False, "forced", {}

    crits = tuple(broken if c.__name__ == "criterion_2" else c for c in acceptance.CRITERIA)
    monkeypatch.setattr(acceptance, "CRITERIA", crits)
    code, out, _ = run(capsys, "verify", "--only", "2", "--format", "json")
    assert code == 5
    assert rows(out)[0]["passed"] is False


@pytest.mark.slow
def test_verify_quick_deterministic(capsys):
    code, out, _ = run(capsys, "verify", "--quick", "--format", "json")
    assert code == 0
    first = [{k: v for k, v in r.items() if k != "elapsed"} for r in rows(out)]
    assert len(first) == 11 and all(r["passed"] for r in first)


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "kltcyl", "constants", "--d", "2", "--q", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["q"] == 3.0
