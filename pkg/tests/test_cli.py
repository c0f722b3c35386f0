import csv
import io
import subprocess
import sys

import pytest

from cbt_bandit.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_adhoc_run_emits_one_row(capsys):
    code, out, _ = run_cli(
        capsys, "run", "--policy", "cbt:zeta=auto", "--prior", "uniform", "--reward", "bernoulli",
        "--n", "100", "--reps", "100", "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    row = rows[0]
    assert row["policy"] == "cbt:zeta=auto,b=loglog,c=loglog"
    assert (row["n"], row["reps"], row["base_seed"]) == ("100", "100", "0")
    assert 10 < float(row["mean_regret"]) < 20


def test_table_run_console(capsys):
    code, out, _ = run_cli(capsys, "run", "--table", "1", "--rows", "cbt", "1-failure", "--n", "100", "--reps", "50")
    assert code == 0
    assert "Table 1" in out and "1-failure" in out
    assert "Lower bound" in out and "14.1" in out


def test_table_rows_unknown(capsys):
    code, _, err = run_cli(capsys, "run", "--table", "2", "--rows", "learning", "--n", "100", "--reps", "5")
    assert code == 2 and "no rows" in err


def test_table4_needs_dataset(capsys):
    code, _, err = run_cli(capsys, "run", "--table", "4")
    assert code == 2
    assert "sourceforge.net/projects/bandit" in err


def test_missing_dataset_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", "--table", "4", "--dataset", str(tmp_path / "none.txt"))
    assert code == 2 and "sourceforge.net/projects/bandit" in err


def test_table4_with_toy_dataset(capsys, tmp_path):
    path = tmp_path / "lat.txt"
    lines = [" ".join(str(100 + 7 * ((i * j) % 13) + j) for j in range(8)) for i in range(140)]
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run_cli(capsys, "run", "--table", "4", "--dataset", str(path), "--n", "130", "--reps", "3",
                           "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["reward"] for r in rows] == ["dataset"] * 4


def test_csv_byte_identical(capsys, tmp_path):
    args = ["run", "--policy", "empirical-cbt", "two-target:f=3", "--n", "100", "300", "--reps", "40", "--seed", "7"]
    run_cli(capsys, *args, "--out", str(tmp_path / "a.csv"))
    run_cli(capsys, *args, "--out", str(tmp_path / "b.csv"))
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b and a.count(b"\n") == 5


def test_timing_column(capsys):
    _, out, _ = run_cli(capsys, "run", "--policy", "cbt:zeta=0.1", "--n", "50", "--reps", "5", "--format", "csv",
                        "--timing")
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["wall_time_ms"] != ""


def test_config_file_precedence(capsys, tmp_path):
    conf = tmp_path / "exp.conf"
    conf.write_text("# experiment\npolicy = cbt:zeta=auto\nn = 100\nreps = 20\nseed = 3\nformat = csv\n")
    _, out, _ = run_cli(capsys, "run", "--config", str(conf))
    row = next(csv.DictReader(io.StringIO(out)))
    assert (row["reps"], row["base_seed"]) == ("20", "3")
    _, out, _ = run_cli(capsys, "run", "--config", str(conf), "--seed", "9", "--reps", "10")
    row = next(csv.DictReader(io.StringIO(out)))
    assert (row["reps"], row["base_seed"]) == ("10", "9")


def test_bad_config_line(capsys, tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("policy cbt\n")
    code, _, err = run_cli(capsys, "run", "--config", str(conf))
    assert code == 2 and ":1:" in err


def test_constants_lower_bounds(capsys):
    code, out, _ = run_cli(capsys, "constants", "--n", "10000", "100000", "--format", "csv")
    assert code == 0
    rows = {(r["label"], r["n"]): r for r in csv.DictReader(io.StringIO(out))}
    assert rows[("uniform", "100000")]["lower_bound"] == "447.2"
    assert rows[("1-cos", "10000")]["lower_bound"] == "1249"
    assert rows[("uniform", "10000")]["C0"] == "1.414214"


def test_constants_beta_column(capsys):
    code, out, _ = run_cli(capsys, "constants", "--beta", "1", "2", "3", "10", "--n", "100", "--format", "csv")
    assert code == 0
    values = [round(float(r["I_beta"]), 2) for r in csv.DictReader(io.StringIO(out))]
    assert values == [1.10, 1.17, 1.24, 1.53]


def test_verify_passes(capsys, tmp_path):
    out_path = tmp_path / "v.csv"
    code, out, _ = run_cli(capsys, "verify", "lemma1", "--out", str(out_path))
    assert code == 0
    assert out.count("[PASS]") == 6
    assert out_path.read_text().startswith("suite,check,passed,detail")


def test_verify_failure_exit_code(capsys, monkeypatch):
    from cbt_bandit import cli
    from cbt_bandit.verify import Check

    monkeypatch.setitem(cli.SUITES, "lemma1", lambda: [Check("x", False, "forced")])
    code, out, _ = run_cli(capsys, "verify", "lemma1")
    assert code == 1 and "[FAIL]" in out


def test_verify_unknown_suite(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "unknown"])
    assert exc.value.code == 2


def test_run_needs_policy_or_table(capsys):
    code, _, err = run_cli(capsys, "run", "--n", "100")
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cbt_bandit", "constants", "--n", "100", "--format", "csv"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("label,alpha,beta")
