import csv
import subprocess
import sys
from pathlib import Path

import pytest

from scflow.cli import main
from scflow.scspace import interpolation_triples

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


SMALL_INTERP = "[interp]\nn_vectors = 20\ntruncation = 16\n"


# --- exit codes and usage ----------------------------------------------------


def test_missing_config_prints_usage(tmp_path, capsys):
    assert main(["report", "--config", str(tmp_path / "nope.ini")]) == 2
    err = capsys.readouterr().err
    assert "usage:" in err and "not found" in err


def test_missing_config_flag(capsys):
    assert main(["flow"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_bad_seed(tmp_path):
    cfg = write(tmp_path, SMALL_INTERP)
    assert main(["interp", "--config", cfg, "--seed", str(2**64)]) == 2
    assert main(["interp", "--config", cfg, "--seed", "-3"]) == 2


def test_invalid_config_value(tmp_path, capsys):
    cfg = write(tmp_path, "[scenario]\nfunctional = sextic\n")
    assert main(["flow", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "sextic" in capsys.readouterr().err


# --- interp ------------------------------------------------------------------


def test_interp_schema_and_row_count(tmp_path):
    cfg = write(tmp_path, SMALL_INTERP + "families = PolySquare, SobolevLike(2)\n")
    assert main(["interp", "--config", cfg, "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "interp.csv")
    assert table[0] == ["weight_family", "seed", "i", "j", "k", "lhs", "rhs", "gap"]
    assert len(table) - 1 == 2 * 20 * len(interpolation_triples(10))
    assert all(float(r[7]) >= -1e-12 * float(r[6]) for r in table[1:])


def test_interp_basis_debug_has_vanishing_gaps(tmp_path):
    cfg = write(tmp_path, "[interp]\nbasis_debug = true\ntruncation = 8\nfamilies = PolySquare\n")
    assert main(["interp", "--config", cfg, "--out", str(tmp_path)]) == 0
    for r in rows(tmp_path / "interp.csv")[1:]:
        assert abs(float(r[7])) <= 1e-13 * float(r[6])


def test_interp_negative_control_fails(tmp_path):
    cfg = write(tmp_path, SMALL_INTERP + "corrupt_level_shift = 1\n")
    assert main(["interp", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_interp_is_byte_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL_INTERP)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["interp", "--config", cfg, "--out", str(a), "--seed", "99"]) == 0
    assert main(["interp", "--config", cfg, "--out", str(b), "--seed", "99"]) == 0
    assert main(["interp", "--config", cfg, "--out", str(c), "--seed", "100"]) == 0
    assert (a / "interp.csv").read_bytes() == (b / "interp.csv").read_bytes()
    assert (a / "interp.csv").read_bytes() != (c / "interp.csv").read_bytes()


def test_floats_are_shortest_round_trip(tmp_path):
    cfg = write(tmp_path, SMALL_INTERP + "families = PolySquare\n")
    main(["interp", "--config", cfg, "--out", str(tmp_path)])
    for r in rows(tmp_path / "interp.csv")[1:50]:
        for field in r[5:]:
            assert repr(float(field)) == field


# --- output directory ----------------------------------------------------------


def test_output_directory_precedence(tmp_path, monkeypatch):
    cfg = write(tmp_path, SMALL_INTERP + f"[run]\nout = {tmp_path / 'from_config'}\n")
    monkeypatch.delenv("SCFLOW_OUT", raising=False)
    assert main(["interp", "--config", cfg]) == 0
    assert (tmp_path / "from_config" / "interp.csv").exists()
    monkeypatch.setenv("SCFLOW_OUT", str(tmp_path / "from_env"))
    assert main(["interp", "--config", cfg]) == 0
    assert (tmp_path / "from_env" / "interp.csv").exists()
    assert main(["interp", "--config", cfg, "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "interp.csv").exists()


# --- flow --------------------------------------------------------------------


def test_flow_cubic_single_mode(tmp_path):
    assert main(["flow", "--config", str(CONFIGS / "flow_cubic.ini"), "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "flow.csv")
    header = table[0]
    assert header[:3] == ["s", "action", "energy"]
    assert header[3:9] == [f"norm_{j}" for j in range(6)]
    assert header[9:12] == ["deriv_1_norm0", "deriv_2_norm0", "deriv_3_norm0"]
    assert header[-1] == "oracle_err"
    assert len(table) == 1502
    assert max(float(r[-1]) for r in table[1:]) <= 1e-6


def test_flow_zero_columns_are_constant(tmp_path):
    assert main(["flow", "--config", str(CONFIGS / "flow_zero.ini"), "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "flow.csv")[1:]
    for col in range(1, len(table[0])):
        assert {r[col] for r in table} == {"0.0"}


def test_flow_blow_up_exits_2(tmp_path, capsys):
    assert main(["flow", "--config", str(CONFIGS / "flow_blowup.ini"), "--out", str(tmp_path)]) == 2
    assert "DivergenceError" in capsys.readouterr().err


def test_flow_generic_functional_has_no_oracle_column(tmp_path):
    cfg = write(tmp_path, "[scenario]\nfunctional = quartic\ntruncation = 6\ncoeffs = 1: 0.2, 2: -0.1\nspan = 0, 2\n")
    assert main(["flow", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "oracle_err" not in rows(tmp_path / "flow.csv")[0]


def test_flow_is_byte_deterministic(tmp_path):
    cfg = str(CONFIGS / "flow_basin8.ini")
    main(["flow", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["flow", "--config", cfg, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "flow.csv").read_bytes() == (tmp_path / "b" / "flow.csv").read_bytes()


# --- decay -------------------------------------------------------------------


def test_decay_heteroclinic(tmp_path, capsys):
    assert main(["decay", "--config", str(CONFIGS / "decay_heteroclinic.ini"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "kappa_est" in out and "kappa_half" in out and "kappa_third" in out
    summary = {r[0]: r for r in rows(tmp_path / "decay_summary.csv")[1:]}
    assert 3.5 <= float(summary["kappa_est"][1]) <= 4.0
    assert all(r[3] == "true" for r in summary.values())
    fits = rows(tmp_path / "decay_fits.csv")
    assert fits[0][:3] == ["level", "order", "rate"]
    assert len(fits) - 1 == 6 * 4
    assert all(1.9 <= float(r[2]) <= 2.1 for r in fits[1:])


def test_decay_quadratic_rates_are_two(tmp_path):
    assert main(["decay", "--config", str(CONFIGS / "decay_quadratic.ini"), "--out", str(tmp_path)]) == 0
    for r in rows(tmp_path / "decay_fits.csv")[1:]:
        assert float(r[2]) == pytest.approx(2.0, abs=1e-10)


def test_decay_degenerate_window_exits_2(tmp_path, capsys):
    assert main(["decay", "--config", str(CONFIGS / "decay_bad_window.ini"), "--out", str(tmp_path)]) == 2
    assert "FitError" in capsys.readouterr().err


def test_decay_violation_exits_1(tmp_path):
    # A window reaching back into the nonlinear transient bends the log-linear
    # fit, so the action slope and the single-mode rate agreement both fail.
    cfg = write(
        tmp_path,
        "[scenario]\nfunctional = cubic\ninitial = critical\ncritical_set = 1\nspan = 0, 20\n"
        "[analysis]\nfit_window = 1e-10, 0.6\n",
    )
    assert main(["decay", "--config", cfg, "--out", str(tmp_path)]) == 1
    summary = {r[0]: r[3] for r in rows(tmp_path / "decay_summary.csv")[1:]}
    assert summary["action_slope"] == "false"
    assert summary["kappa_est"] == "true"


# --- report ------------------------------------------------------------------


def test_report_partial_selection(tmp_path, capsys):
    cfg = write(tmp_path, "[report]\ncriteria = 2, 6\n")
    assert main(["report", "--config", cfg, "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "report.csv")
    assert table[0][:5] == ["id", "name", "value", "threshold", "passed"]
    assert [r[0] for r in table[1:]] == ["2", "6"]
    assert main(["report", "--config", cfg, "--out", str(tmp_path), "--only", "3"]) == 0
    assert [r[0] for r in rows(tmp_path / "report.csv")[1:]] == ["3"]
    assert capsys.readouterr().out.count("[PASS]") == 3


def test_report_unknown_criterion(tmp_path):
    cfg = write(tmp_path, "")
    assert main(["report", "--config", cfg, "--only", "42"]) == 2


def test_console_script_entry_point(tmp_path):
    cfg = write(tmp_path, "[report]\ncriteria = 6\n")
    proc = subprocess.run(
        [sys.executable, "-m", "scflow.cli", "report", "--config", cfg, "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "criterion  6" in proc.stdout
