import math

import numpy as np
import pytest

from cdqsim.cd_drivers import make_cd_term
from cdqsim.circuits import (
    Circuit,
    Gate,
    compile_plan,
    compile_problem,
    cx,
    decompose_term,
    gate_stats,
    h,
    initial_label,
    optimize,
    preparation_circuit,
    rx,
    rz,
    simulate_circuit,
    steps_to_threshold,
    to_qasm,
)
from cdqsim.errors import ConfigError, DimensionError, UnsupportedTermError
from cdqsim.evolution import PlanEntry, TrotterPlan, TrotterStep, build_plan, fidelity, run_plan
from cdqsim.pauli_core import PauliString
from cdqsim.problem_config import load_config
from cdqsim.reference_data import OPTIMIZATION_REFERENCE, optimization_reference
from cdqsim.states import StateVector


@pytest.mark.parametrize("label", ["X", "Y", "Z", "XX", "YZ", "ZY", "ZZ", "XZ", "IYX"])
def test_decomposition_matches_rotation(label):
    string = PauliString.from_label(label)
    n = string.n_qubits
    start = StateVector.from_label("+0-"[:n])
    circuit = Circuit(n, tuple(decompose_term(string, 0.37)))
    expected = StateVector(
        math.cos(0.37) * start.amplitudes - 1j * math.sin(0.37) * string.apply(start.amplitudes)
    )
    assert fidelity(simulate_circuit(circuit, start), expected) == pytest.approx(1.0, abs=1e-10)


def test_weight_three_terms_are_rejected():
    with pytest.raises(UnsupportedTermError):
        decompose_term(PauliString.from_label("XYZ"), 0.1)


def test_zero_angle_and_identity_compile_to_nothing():
    assert decompose_term(PauliString.from_label("ZZ"), 0.0) == []
    assert decompose_term(PauliString.from_label("II"), 0.5) == []


def test_compiled_plan_reproduces_plan(bell_problem):
    plan = build_plan(bell_problem, make_cd_term("nc:1", bell_problem))
    start = bell_problem.initial_state
    circuit = compile_plan(plan)
    assert fidelity(simulate_circuit(circuit, start), run_plan(plan, start)) == pytest.approx(
        1.0, abs=1e-10
    )


def test_bell_cnot_counts(bell_problem):
    plain, value = compile_problem(bell_problem, "nc:1", optimized=False)
    reduced, same = compile_problem(bell_problem, "nc:1", optimized=True)
    assert plain.cnot_count == 14
    assert reduced.cnot_count == 8
    assert value == same
    zero = StateVector.zero(2)
    assert fidelity(simulate_circuit(plain, zero), simulate_circuit(reduced, zero)) == (
        pytest.approx(1.0, abs=1e-10)
    )


def test_bell_midpoint_cnot_counts(bell_problem):
    plain, _ = compile_problem(bell_problem, "nc:1", optimized=False, sampling="midpoint")
    reduced, value = compile_problem(bell_problem, "nc:1", sampling="midpoint")
    assert plain.cnot_count == 18
    assert reduced.cnot_count == 12
    assert value >= 0.999


def _random_plan(rng, n_qubits, length):
    entries = []
    for _ in range(length):
        weight = int(rng.integers(1, min(2, n_qubits) + 1))
        letters = ["I"] * n_qubits
        for q in rng.choice(n_qubits, size=weight, replace=False):
            letters[q] = "XYZ"[int(rng.integers(3))]
        string = PauliString.from_label("".join(letters))
        entries.append(PlanEntry(string, float(rng.normal()), "cd"))
    step = TrotterStep(0, 0.0, 0.0, 0.0, tuple(entries))
    return TrotterPlan(n_qubits, 1.0, (step,))


@pytest.mark.parametrize("n_qubits", [1, 2, 3, 4])
def test_random_plans_survive_compile_and_optimize(n_qubits):
    rng = np.random.default_rng(100 + n_qubits)
    for _ in range(25):
        plan = _random_plan(rng, n_qubits, 12)
        amplitudes = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        start = StateVector.normalized(amplitudes)
        circuit = compile_plan(plan)
        reduced = optimize(circuit)
        expected = run_plan(plan, start)
        assert fidelity(simulate_circuit(circuit, start), expected) == pytest.approx(
            1.0, abs=1e-10
        )
        assert fidelity(simulate_circuit(reduced, start), expected) == pytest.approx(
            1.0, abs=1e-10
        )
        assert len(reduced) <= len(circuit)
        assert optimize(reduced).gates == reduced.gates


def test_single_spin_cd_circuit_is_short(single_spin):
    problem = single_spin.with_timing(0.02, 0.01)
    circuit, value = compile_problem(problem, "berry", optimized=False)
    assert circuit.rotation_count == 5
    assert circuit.cnot_count == 0
    assert value >= 0.99


def test_optimize_merges_through_commuting_gates():
    circuit = Circuit(2, (rz(0, 0.1), cx(0, 1), rz(0, 0.2)))
    reduced = optimize(circuit)
    assert [g.kind for g in reduced.gates] == ["rz", "cx"]
    assert reduced.gates[0].angle == pytest.approx(0.3)


def test_optimize_cancels_pairs():
    circuit = Circuit(2, (h(1), cx(0, 1), cx(0, 1), h(1), rx(0, math.pi), rx(0, -math.pi)))
    assert len(optimize(circuit)) == 0


def test_optimize_keeps_noncommuting_order():
    circuit = Circuit(2, (rx(0, 0.1), cx(0, 1), rx(0, 0.2)))
    assert len(optimize(circuit)) == 3


def test_gate_stats_error_model():
    circuit = Circuit(2, (rx(0, 0.1), rz(1, 0.2), cx(0, 1)))
    stats = gate_stats(circuit, eps_rot=0.1, eps_cnot=0.2)
    assert (stats.rotations, stats.cnots, stats.total) == (2, 1, 3)
    assert stats.expected_error == pytest.approx(1.0 - 0.81 * 0.8)
    with pytest.raises(ValueError):
        gate_stats(circuit, eps_rot=1.5)


def test_preparation_circuit():
    label = "+-10"
    prepared = simulate_circuit(preparation_circuit(label), StateVector.zero(4))
    assert fidelity(prepared, StateVector.from_label(label)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        preparation_circuit("0x")


def test_initial_label(bell_problem, single_spin):
    assert initial_label(bell_problem) == "++"
    assert initial_label(single_spin) == "+"


def test_qasm_text():
    text = to_qasm(Circuit(2, (h(0), cx(0, 1), rz(1, 0.5))))
    assert text == (
        "OPENQASM 2.0;\n"
        'include "qelib1.inc";\n'
        "qreg q[2];\n"
        "h q[0];\n"
        "cx q[0],q[1];\n"
        "rz(0.5) q[1];\n"
    )


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("rx", (0,))
    with pytest.raises(ValueError):
        cx(1, 1)
    with pytest.raises(DimensionError):
        Circuit(1, (cx(0, 1),))


def test_cd_reaches_threshold_in_fewer_steps(single_spin):
    with_cd = steps_to_threshold(single_spin, "berry", 0.01, 0.99)
    plain = steps_to_threshold(single_spin, "none", 0.1, 0.99)
    assert with_cd.reached
    assert with_cd.steps < plain.steps
    assert len(with_cd.as_row()) == 7
    with pytest.raises(ConfigError):
        steps_to_threshold(single_spin, "berry", 0.01, 1.5)


def test_cd_needs_fewer_gates_for_bundled_problems(config_dir):
    config = load_config(config_dir / "gatecount.toml")
    assert [case.problem.name for case in config.gatecount] == ["single_spin", "bell", "ghz3"]
    for case in config.gatecount:
        problem = case.problem.build()
        plain = steps_to_threshold(
            problem,
            "none",
            case.dt_plain,
            case.threshold,
            config.max_steps,
            order=config.order,
        )
        with_cd = steps_to_threshold(
            problem,
            case.cd_method,
            case.dt_cd,
            case.threshold,
            config.max_steps,
            order=config.order,
        )
        assert with_cd.reached, case.problem.name
        assert with_cd.total_gates < plain.total_gates, case.problem.name


def test_bell_circuit_against_device_transpile_rows(bell_problem):
    assert {row.system for row in OPTIMIZATION_REFERENCE} == {"bell", "ghz3"}
    raw = optimization_reference("bell", False)
    tuned = optimization_reference("bell", True)
    assert tuned.cnots < raw.cnots
    assert tuned.experiment_fidelity > raw.experiment_fidelity
    plain, value = compile_problem(bell_problem, "nc:1", optimized=False)
    assert plain.cnot_count == raw.cnots
    assert value == pytest.approx(raw.ideal_fidelity, abs=1e-3)
    with pytest.raises(KeyError):
        optimization_reference("single_spin", True)
