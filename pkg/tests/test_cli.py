import csv
import io
import json

import pytest

from pooltest import cli
from pooltest.optimize import optimize_design
from pooltest.model import PracticalParams


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_eti_pooled_table(capsys):
    code, out, _ = run(capsys, "eti", "--p", "0.1", "--u", "0.6", "--r", "1", "--s", "5")
    assert code == 0
    assert out.splitlines()[-1].split() == ["eti", "12.4"]


def test_eti_individual(capsys):
    code, out, _ = run(capsys, "eti", "--p", "0.1", "--u", "0.6", "--individual")
    assert code == 0
    assert out.splitlines()[-1].split() == ["eti", "16.7"]


def test_eti_json(capsys):
    code, out, _ = run(capsys, "eti", "--p", "0.01", "--u", "0.9", "--r", "3", "--s", "42", "--format", "json")
    assert code == 0
    assert json.loads(out)["eti"] == pytest.approx(16.2, abs=0.05)


@pytest.mark.parametrize(
    "argv",
    [
        ("eti", "--p", "1.5", "--u", "0.6", "--individual"),
        ("eti", "--p", "0.1", "--u", "0.6"),
        ("eti", "--p", "0.1"),
        ("tables", "--which", "3"),
        ("simulate", "--mode", "two-stage", "--p", "0.1", "--u", "0.6", "--r", "1", "--s", "5", "--m", "100"),
    ],
)
def test_validation_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = cli.main(list(argv))
        raise SystemExit(code)
    assert exc.value.code == 2


def test_infeasible_design_exit_3(capsys):
    code, _, err = run(capsys, "design", "--kind", "grid", "--m", "10", "--s", "3")
    assert code == 3
    assert "multiple of s**2" in err


def test_tables_two_matches_optimize(capsys):
    code, out, _ = run(capsys, "tables", "--which", "2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 20
    for row in rows:
        opt = optimize_design(PracticalParams(float(row["p"]), float(row["u"])))
        assert (int(row["r"]), int(row["s"])) == opt.rs
        assert float(row["eti"]) == opt.eti
        code, single, _ = run(capsys, "optimize", "--p", row["p"], "--u", row["u"], "--format", "json")
        assert json.loads(single)["eti"] == float(row["eti"])


def test_tables_pretty_layout(capsys):
    _, out, _ = run(capsys, "tables", "--which", "2")
    lines = out.splitlines()
    assert lines[2].split()[:3] == ["0.1", "12.4", "(1,5)"]
    _, out1, _ = run(capsys, "tables", "--which", "1")
    assert out1.splitlines()[-1].split() == ["0.005", "333", "286", "250", "222"]


def test_tables_empty_grid(capsys):
    code, out, _ = run(capsys, "tables", "--p-values", "--format", "csv")
    # an empty --p-values falls back to the default rows
    assert code == 0 and len(out.splitlines()) == 21


def test_rate_curve_rows(capsys):
    code, out, _ = run(capsys, "rate-curve", "--alpha-min", "0.0", "--alpha-max", "0.9", "--steps", "10")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 10
    half = rows[5]
    assert float(half["alpha"]) == pytest.approx(0.5)
    assert float(half["R_full"]) == pytest.approx(0.48045, abs=5e-6)
    assert float(half["R_saff"]) == pytest.approx(0.18394, abs=5e-6)
    assert float(rows[0]["R"]) == 1.0
    assert out.endswith("\n") and "\r" not in out


def test_rate_curve_invalid_range(capsys):
    code, _, _ = run(capsys, "rate-curve", "--alpha-min", "0.8", "--alpha-max", "0.2")
    assert code == 2


def test_design_export(tmp_path, capsys):
    path = tmp_path / "cube.csv"
    code, out, _ = run(capsys, "design", "--kind", "hypercube", "--m", "27", "--r", "3", "--a", "3", "--export", str(path))
    assert code == 0 and out == ""
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["pool", "individual"]
    assert len(rows) == 1 + 9 * 9


def test_random_design_needs_seed(capsys):
    code, _, err = run(capsys, "design", "--kind", "random", "--m", "12", "--r", "2", "--s", "4")
    assert code == 2 and "--seed" in err
    code1, out1, _ = run(capsys, "design", "--kind", "random", "--m", "12", "--r", "2", "--s", "4", "--seed", "7")
    code2, out2, _ = run(capsys, "design", "--kind", "random", "--m", "12", "--r", "2", "--s", "4", "--seed", "7")
    assert code1 == code2 == 0 and out1 == out2


def test_saffron_code_export(capsys):
    code, out, _ = run(capsys, "design", "--kind", "saffron", "--block-size", "8")
    assert code == 0
    assert out.splitlines()[6] == "5,101010"


def test_simulate_json_report(tmp_path, capsys):
    rows_path = tmp_path / "reps.csv"
    argv = ["simulate", "--p", "0.05", "--u", "0.8", "--r", "2", "--s", "10", "--m", "2000",
            "--replicates", "5", "--seed", "4", "--replicate-csv", str(rows_path)]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    report = json.loads(out)
    assert report["rng"]["seed"] == 4 and "PCG64" in report["rng"]["algorithm"]
    assert report["totals"]["found"] <= report["totals"]["infected"]
    assert "wall_time_s" not in report
    reps = list(csv.DictReader(rows_path.open()))
    assert len(reps) == 5
    assert sum(int(r["tests"]) for r in reps) == report["totals"]["tests"]
    _, timed, _ = run(capsys, *argv, "--timing")
    assert "wall_time_s" in json.loads(timed)


def test_simulate_saffron_and_individual(capsys):
    code, out, _ = run(capsys, "simulate", "--mode", "saffron", "--p", "0.01", "--n", "10000", "--replicates", "2", "--seed", "1")
    assert code == 0 and json.loads(out)["extra"]["block_size"] == 128
    code, out, _ = run(capsys, "simulate", "--mode", "individual", "--p", "0.1", "--u", "0.6", "--m", "1000",
                       "--replicates", "2", "--seed", "1", "--format", "csv")
    assert code == 0 and out.startswith("mode,m,")


def test_simulate_hypercube_design(capsys):
    code, out, _ = run(capsys, "simulate", "--design", "hypercube", "--r", "3", "--a", "3", "--p", "0.05",
                       "--u", "0.9", "--m", "300", "--replicates", "2", "--seed", "1")
    assert code == 0 and json.loads(out)["m"] == 297


def test_output_file(tmp_path, capsys):
    path = tmp_path / "o.json"
    code, out, _ = run(capsys, "optimize", "--p", "0.05", "--u", "0.9", "--format", "json", "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["s"] == 10


def test_help_documents_formats(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    out = capsys.readouterr().out
    assert "csv" in out and "json" in out and "Exit codes" in out
