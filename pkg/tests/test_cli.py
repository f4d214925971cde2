import argparse

import pytest

from cdqsim.cli import EXIT_CONFIG, EXIT_OK, main, run_evolve
from cdqsim.exports import read_csv_body, read_state_dump
from cdqsim.problem_config import load_config


def _run(config, out, *extra, command="evolve"):
    return main([command, "--config", str(config), "--out", str(out), "--no-store", *extra])


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_evolve_writes_csv_with_header(config_dir, tmp_path):
    assert _run(config_dir / "bell.toml", tmp_path) == EXIT_OK
    text = (tmp_path / "evolution_nc1.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "# seed: 1234"
    body = read_csv_body(tmp_path / "evolution_nc1.csv")
    assert body[0] == ["step", "t", "lambda", "p_gs", "fidelity"]
    assert [row[0] for row in body[1:]] == ["0", "1", "2", "3"]
    assert float(body[-1][-1]) >= 0.999
    assert (tmp_path / "evolution_none.csv").exists()
    solve = read_csv_body(tmp_path / "solve_records_nc1.csv")
    assert solve[0] == ["lambda", "alpha_1", "action_residual"]


def test_evolve_is_reproducible(config_dir, tmp_path):
    assert _run(config_dir / "bell.toml", tmp_path) == EXIT_OK
    first = (tmp_path / "evolution_nc1.csv").read_bytes()
    assert _run(config_dir / "bell.toml", tmp_path) == EXIT_OK
    assert (tmp_path / "evolution_nc1.csv").read_bytes() == first


def test_evolve_histograms_are_seeded(tmp_path):
    config = _write(
        tmp_path / "sampled.toml",
        'seed = 7\nshots = 500\n[problem]\nmodel = "single_spin"\nmethods = ["berry"]\n',
    )
    assert _run(config, tmp_path / "a") == EXIT_OK
    assert _run(config, tmp_path / "b") == EXIT_OK
    a = read_csv_body(tmp_path / "a" / "histogram_berry.csv")
    b = read_csv_body(tmp_path / "b" / "histogram_berry.csv")
    assert a == b
    assert sum(int(row[1]) for row in a[1:]) == 500


def test_two_spin_writes_alpha_regression(config_dir, tmp_path):
    assert _run(config_dir / "two_spin.toml", tmp_path) == EXIT_OK
    rows = read_csv_body(tmp_path / "alpha_regression.csv")
    assert rows[0] == ["lambda", "alpha_numeric", "alpha_closed_form", "alpha_legacy"]
    assert len(rows) == 12
    local = read_csv_body(tmp_path / "local_alpha_regression.csv")
    assert local[0] == ["lambda", "alpha_numeric", "alpha_printed"]
    assert len(local) == 12


def test_closed_form_run_writes_zz_regression(config_dir, tmp_path):
    assert _run(config_dir / "ghz3.toml", tmp_path) == EXIT_OK
    rows = read_csv_body(tmp_path / "zz_coefficient_regression.csv")
    assert rows[0] == ["lambda", "beta_numeric", "beta_closed_form"]
    assert len(rows) == 12
    closed = read_csv_body(tmp_path / "evolution_zz_closed.csv")
    nested = read_csv_body(tmp_path / "evolution_nc1.csv")
    assert float(closed[-1][-1]) > float(nested[-1][-1])


def test_evolve_summary_carries_quoted_fidelity(config_dir, tmp_path):
    config = load_config(config_dir / "ghz3.toml").with_overrides(out=str(tmp_path))
    summary = run_evolve(config, argparse.Namespace())
    assert "quoted_fidelity" not in summary["none"]
    assert summary["nc:1"]["quoted_fidelity"] == 0.935
    assert summary["zz-closed"]["quoted_fidelity"] == 0.935
    assert summary["nc:1"]["fidelity"] < 0.9


def test_dump_state(config_dir, tmp_path):
    assert _run(config_dir / "bell.toml", tmp_path, "--dump-state") == EXIT_OK
    state = read_state_dump(tmp_path / "final_state_nc1.bin")
    assert state.n_qubits == 2
    assert state.probabilities().sum() == pytest.approx(1.0)


def test_sweep_rows_follow_grid(tmp_path):
    config = _write(
        tmp_path / "sweep.toml",
        '[problem]\nmodel = "single_spin"\ndt = 0.2\n'
        '[sweep]\naxis = "T"\ngrid = [1.0, 0.2, 0.6]\nmethods = ["none", "berry"]\n',
    )
    assert _run(config, tmp_path, "--threads", "2", command="sweep") == EXIT_OK
    rows = read_csv_body(tmp_path / "sweep_T_berry.csv")
    assert rows[0] == ["x", "p_gs", "fidelity", "rotations", "cnots"]
    assert [float(row[0]) for row in rows[1:]] == [1.0, 0.2, 0.6]
    assert (tmp_path / "sweep_T_none.csv").exists()


def test_sweep_needs_sweep_table(config_dir, tmp_path):
    assert _run(config_dir / "bell.toml", tmp_path, command="sweep") == EXIT_CONFIG


def test_mitigate_demo(config_dir, tmp_path):
    assert _run(config_dir / "mitigate.toml", tmp_path, command="mitigate-demo") == EXIT_OK
    rows = read_csv_body(tmp_path / "mitigation.csv")
    assert rows[0] == ["bitstring", "p_actual", "p_noisy", "p_inverted", "p_mitigated"]
    assert [row[0] for row in rows[1:]] == ["0", "1"]
    assert (tmp_path / "histogram.csv").exists()


def test_export_circuit(config_dir, tmp_path):
    assert _run(config_dir / "bell.toml", tmp_path, command="export-circuit") == EXIT_OK
    qasm = (tmp_path / "circuit_nc1.qasm").read_text()
    assert qasm.startswith("// config: ")
    assert "OPENQASM 2.0;" in qasm
    stats = read_csv_body(tmp_path / "gate_stats_nc1.csv")
    assert stats[1][:3] == ["bell", "nc:1", "3"]
    assert stats[1][4] == "12"


def test_missing_config_is_a_config_error(tmp_path):
    assert _run(tmp_path / "nope.toml", tmp_path) == EXIT_CONFIG


def test_unknown_method_is_a_config_error(tmp_path):
    config = _write(tmp_path / "bad.toml", '[problem]\nmodel = "single_spin"\nmethods = ["magic"]\n')
    assert _run(config, tmp_path) == EXIT_CONFIG


def test_malformed_file_is_a_config_error(tmp_path):
    assert _run(_write(tmp_path / "broken.toml", "[problem\n"), tmp_path) == EXIT_CONFIG
    assert _run(_write(tmp_path / "extra.toml", "colour = 1\n"), tmp_path) == EXIT_CONFIG


def test_usage_errors():
    assert main([]) == EXIT_CONFIG
    assert main(["--help"]) == EXIT_OK


def test_gatecount_reports_compared_methods(tmp_path):
    config = _write(
        tmp_path / "gates.toml",
        "[gatecount]\nmax_steps = 40\n"
        '[[gatecount.problems]]\nname = "single_spin"\nmodel = "single_spin"\n'
        'threshold = 0.99\ncd_method = "berry"\ncompare = ["local-var"]\n'
        "dt_cd = 0.01\ndt_plain = 0.1\n",
    )
    assert _run(config, tmp_path, command="gatecount") == EXIT_OK
    rows = read_csv_body(tmp_path / "gate_stats.csv")
    assert [row[1] for row in rows[1:]] == ["berry", "local-var", "none"]
    assert rows[1][2] == rows[2][2]
