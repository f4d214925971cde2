import math

import numpy as np
import pytest

from cdqsim.cd_drivers import (
    METHOD_TAGS,
    BerryExactCD,
    LocalVariationalCD,
    NestedCommutatorCD,
    ZZClosedFormCD,
    action,
    berry_coefficient,
    exact_gauge_oracle,
    local_alpha_regression,
    local_variational_alpha_printed,
    local_variational_solve,
    make_cd_term,
    method_from_tag,
    two_spin_alpha_regression,
    two_spin_ising_alpha,
    two_spin_ising_alpha_legacy,
    validate_method,
    variational_nc,
    zz_coefficient_regression,
    zz_open_triple_cd_coefficient,
    zz_pair_cd_coefficient,
    zz_periodic_cd_coefficient,
)
from cdqsim.errors import ConfigError
from cdqsim.models import SpinChainSpec, build_ising_chain, build_zz_chain
from cdqsim.pauli_core import PauliSum, to_dense

LAMBDAS = [k / 10 for k in range(11)]
INTERIOR = [k / 10 for k in range(1, 10)]


def test_berry_coefficient_midpoint():
    lam_dot = math.pi / 2.0
    assert math.isclose(berry_coefficient(-1.0, 1.0, 0.5, lam_dot), math.pi / 2.0)


def test_printed_local_alpha_at_start():
    assert math.isclose(local_variational_alpha_printed(-1.0, 1.0, 0.0, 0.0), 0.5)


def test_zero_lambda_dot_gives_zero_operator(single_spin):
    cd = make_cd_term("berry", single_spin)
    assert not cd.evaluate(0.3, 0.0)
    assert not cd.at_time(single_spin.total_time)


@pytest.mark.parametrize("lam", INTERIOR)
def test_oracle_matches_single_spin_berry(single_spin, lam):
    cd = make_cd_term("berry", single_spin)
    oracle = exact_gauge_oracle(single_spin, lam)
    assert not oracle.degenerate
    assert np.allclose(to_dense(cd.evaluate(lam, 1.0)), oracle.matrix, atol=1e-10)


@pytest.mark.parametrize("lam", INTERIOR)
def test_oracle_matches_first_order_pair(bell_problem, lam):
    ansatz = variational_nc(bell_problem, 1, lam)
    oracle = exact_gauge_oracle(bell_problem, lam)
    assert np.allclose(to_dense(ansatz.gauge_potential), oracle.matrix, atol=1e-10)


def test_oracle_flags_degenerate_start(bell_problem):
    assert exact_gauge_oracle(bell_problem, 0.0).degenerate


@pytest.mark.parametrize("lam", LAMBDAS)
def test_pair_closed_form(bell_problem, lam):
    gauge = variational_nc(bell_problem, 1, lam).gauge_potential
    expected = zz_pair_cd_coefficient(-1.0, -1.0, lam)
    assert abs(gauge.coefficient("YZ").real - expected) < 1e-10
    assert abs(gauge.coefficient("ZY").real - expected) < 1e-10


@pytest.mark.parametrize("lam", LAMBDAS)
def test_periodic_triple_closed_form(ghz3_problem, lam):
    gauge = variational_nc(ghz3_problem, 1, lam).gauge_potential
    expected = zz_periodic_cd_coefficient(-1.0, -1.0, lam)
    for label in ("YZI", "ZYI", "IYZ", "IZY", "ZIY", "YIZ"):
        assert abs(gauge.coefficient(label).real - expected) < 1e-10


@pytest.mark.parametrize("lam", LAMBDAS)
def test_open_triple_closed_form(lam):
    problem = build_zz_chain(3, h_x=-1.0, j0=-1.0, T=0.006, dt=0.001, boundary="open")
    gauge = variational_nc(problem, 1, lam).gauge_potential
    expected = zz_open_triple_cd_coefficient(-1.0, -1.0, lam)
    assert abs(gauge.coefficient("YZI").real - expected) < 1e-10
    assert abs(gauge.coefficient("IZY").real - expected) < 1e-10


def test_two_spin_regression_rows():
    spec = SpinChainSpec.uniform(2, -1.0, 1.0, j0=-0.1)
    problem = build_ising_chain(spec, T=1.0, dt=0.2)
    rows = two_spin_alpha_regression(problem, LAMBDAS)
    assert len(rows) == len(LAMBDAS)
    for lam, numeric, closed, legacy in rows:
        assert math.isclose(numeric, closed, rel_tol=1e-8, abs_tol=1e-12)
        assert closed == two_spin_ising_alpha(-1.0, 1.0, -0.1, lam)
        assert legacy == two_spin_ising_alpha_legacy(-1.0, 1.0, -0.1, lam)
    assert not math.isclose(rows[5][1], rows[5][3], rel_tol=1e-3)


def test_action_is_minimized(bell_problem):
    ansatz = variational_nc(bell_problem, 1, 0.4)
    record = ansatz.record
    assert math.isclose(
        action(bell_problem, ansatz.gauge_potential, 0.4), record.action, rel_tol=1e-9
    )
    rng = np.random.default_rng(11)
    for delta in rng.normal(scale=0.2, size=100):
        alpha = ansatz.alphas[0] + delta
        gauge = ansatz.commutators[0].scale(1j * alpha).real_part()
        assert action(bell_problem, gauge, 0.4) >= record.action - 1e-9 * record.action


def test_second_order_minimum_survives_random_perturbations(ghz3_problem):
    record = variational_nc(ghz3_problem, 2, 0.6).record
    rng = np.random.default_rng(5)
    scale = np.abs(record.alphas) + 1e-3
    for _ in range(100):
        trial = record.alphas + rng.normal(size=2) * scale
        assert record.action_at(trial) >= record.action - 1e-9 * abs(record.action)


def test_second_order_solve_is_not_worse(ghz3_problem):
    first = variational_nc(ghz3_problem, 1, 0.5).record
    second = variational_nc(ghz3_problem, 2, 0.5).record
    assert second.order == 2
    assert second.action <= first.action + 1e-9


def test_nested_commutator_caches_records(bell_problem):
    cd = make_cd_term("nc:1", bell_problem)
    assert isinstance(cd, NestedCommutatorCD)
    cd.evaluate(0.5, 1.0)
    cd.evaluate(0.5, 2.0)
    cd.evaluate(0.2, 1.0)
    assert [r.lam for r in cd.solve_records()] == [0.2, 0.5]
    assert cd.label == "nested_commutator:1"


def test_make_cd_term_names(single_spin, bell_problem):
    assert make_cd_term("none", single_spin) is None
    assert make_cd_term("nc:0", bell_problem) is None
    assert isinstance(make_cd_term("berry", single_spin), BerryExactCD)
    assert make_cd_term("nc:2", bell_problem).order == 2
    with pytest.raises(ConfigError):
        make_cd_term("berry", bell_problem)
    with pytest.raises(ConfigError):
        make_cd_term("magic", bell_problem)


def test_validate_method():
    assert validate_method(" NC:3 ") == "nc:3"
    assert validate_method("local-var") == "local-var"
    with pytest.raises(ConfigError):
        validate_method("nc:")


def test_local_terms_are_single_site_y():
    spec = SpinChainSpec.uniform(3, -1.0, 1.0, j0=-0.5)
    problem = build_ising_chain(spec, T=1.0, dt=0.2)
    for method in ("local-berry", "local-var"):
        operator = make_cd_term(method, problem).evaluate(0.3, 1.0)
        assert operator.max_weight() == 1
        assert {s.letter(s.support[0]) for s, _ in operator} == {"Y"}


def _uniform_local_alpha(h_x, h_z, j0, lam, bonds_per_site):
    coupling = 2.0 * bonds_per_site * j0**2
    field_part = h_x**2 * (1.0 - lam) ** 2 + lam**2 * (h_z**2 + coupling)
    return -h_x * h_z / (2.0 * field_part)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_local_solve_is_berry_for_one_spin(single_spin, lam):
    record = local_variational_solve(single_spin, lam)
    expected = berry_coefficient(-1.0, 1.0, lam, 1.0)
    assert record.alphas[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_local_solve_without_coupling_is_berry(lam):
    problem = build_ising_chain(SpinChainSpec.uniform(3, -1.0, 0.7), T=1.0, dt=0.2)
    alpha = local_variational_solve(problem, lam).alphas[0]
    assert alpha == pytest.approx(berry_coefficient(-1.0, 0.7, lam, 1.0), abs=1e-12)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_local_solve_on_coupled_open_chain(lam):
    problem = build_ising_chain(SpinChainSpec.uniform(3, -1.0, 1.0, j0=-1.0), T=1.0, dt=0.2)
    alpha = local_variational_solve(problem, lam).alphas[0]
    expected = _uniform_local_alpha(-1.0, 1.0, -1.0, lam, 2.0 / 3.0)
    assert alpha == pytest.approx(expected, abs=1e-12)


def test_local_solve_beats_printed_coefficient():
    problem = build_ising_chain(SpinChainSpec.uniform(2, -1.0, 1.0, j0=-1.0), T=1.0, dt=0.2)
    for lam in INTERIOR:
        record = local_variational_solve(problem, lam)
        printed = local_variational_alpha_printed(-1.0, 1.0, -1.0, lam)
        gauge = PauliSum.from_labels([("YI", printed), ("IY", printed)])
        assert record.action <= action(problem, gauge, lam) + 1e-9
        numeric = PauliSum.from_labels([("YI", record.alphas[0]), ("IY", record.alphas[0])])
        assert action(problem, numeric, lam) == pytest.approx(record.action, rel=1e-9)
    assert not math.isclose(
        local_variational_solve(problem, 0.5).alphas[0],
        local_variational_alpha_printed(-1.0, 1.0, -1.0, 0.5),
        rel_tol=1e-3,
    )


def test_local_variational_term_groups_sites_by_field():
    spec = SpinChainSpec(n=3, h_x=-1.0, h_z=(0.5, 1.0, 0.5), j0=-0.3)
    problem = build_ising_chain(spec, T=1.0, dt=0.2)
    cd = make_cd_term("local-var", problem)
    assert isinstance(cd, LocalVariationalCD)
    operator = cd.evaluate(0.4, 2.0)
    record = cd.solve(0.4)
    assert record.fields == (0.5, 1.0)
    assert operator.coefficient("YII").real == pytest.approx(2.0 * record.alpha_for(0.5))
    assert operator.coefficient("YII") == operator.coefficient("IIY")
    assert operator.coefficient("IYI").real == pytest.approx(2.0 * record.alpha_for(1.0))
    assert cd.solve(0.4) is record


def test_local_alpha_regression_rows():
    problem = build_ising_chain(SpinChainSpec.uniform(2, -1.0, 1.0, j0=-0.1), T=1.0, dt=0.2)
    rows = local_alpha_regression(problem, LAMBDAS)
    assert len(rows) == len(LAMBDAS)
    lam, numeric, printed = rows[0]
    assert lam == 0.0
    assert numeric == pytest.approx(printed)
    assert printed == local_variational_alpha_printed(-1.0, 1.0, -0.1, 0.0)


@pytest.mark.parametrize("lam", INTERIOR)
def test_zz_closed_form_matches_pair_solution(bell_problem, lam):
    cd = make_cd_term("zz-closed", bell_problem)
    assert isinstance(cd, ZZClosedFormCD)
    expected = variational_nc(bell_problem, 1, lam).gauge_potential
    assert cd.evaluate(lam, 1.0).allclose(expected, atol=1e-10)


def test_zz_closed_form_on_three_spin_ring(ghz3_problem):
    cd = ZZClosedFormCD(ghz3_problem)
    assert cd.beta(0.3) == zz_open_triple_cd_coefficient(-1.0, -1.0, 0.3)
    operator = cd.evaluate(0.3, 1.0)
    assert len(operator) == 6
    assert operator.coefficient("YIZ").real == pytest.approx(cd.beta(0.3))
    ring = build_zz_chain(4, -1.0, -1.0, T=0.004, dt=0.001, boundary="periodic")
    assert ZZClosedFormCD(ring).beta(0.3) == zz_periodic_cd_coefficient(-1.0, -1.0, 0.3)


def test_zz_closed_form_rejects_unsupported_chains():
    open_four = build_zz_chain(4, -1.0, -1.0, T=0.004, dt=0.001, boundary="open")
    with pytest.raises(ConfigError):
        make_cd_term("zz-closed", open_four)
    fielded = build_ising_chain(SpinChainSpec.uniform(2, -1.0, 1.0, j0=-1.0))
    with pytest.raises(ConfigError):
        make_cd_term("zz-closed", fielded)


def test_zz_coefficient_regression(ghz3_problem):
    rows = zz_coefficient_regression(ghz3_problem, LAMBDAS)
    for lam, numeric, closed in rows:
        assert numeric == pytest.approx(zz_periodic_cd_coefficient(-1.0, -1.0, lam), abs=1e-10)
        assert closed == zz_open_triple_cd_coefficient(-1.0, -1.0, lam)
    assert not math.isclose(rows[5][1], rows[5][2], rel_tol=1e-3)
    open_chain = build_zz_chain(3, -1.0, -1.0, T=0.006, dt=0.001, boundary="open")
    for _, numeric, closed in zz_coefficient_regression(open_chain, LAMBDAS):
        assert numeric == pytest.approx(closed, abs=1e-10)


def test_method_from_tag():
    assert method_from_tag("nested_commutator", 2) == "nc:2"
    assert method_from_tag("NC", 1) == "nc:1"
    assert method_from_tag("local_variational") == "local-var"
    assert method_from_tag("berry_exact") == "berry"
    assert method_from_tag("local-berry") == "local-berry"
    for bad in (("nested_commutator", None), ("nc", -1), ("berry_exact", 2), ("magic", None)):
        with pytest.raises(ConfigError):
            method_from_tag(*bad)


def test_every_term_reports_a_known_tag(single_spin, bell_problem):
    chain = build_ising_chain(SpinChainSpec.uniform(2, -1.0, 1.0, j0=-0.1))
    cases = [
        ("berry", single_spin),
        ("local-berry", chain),
        ("local-var", chain),
        ("nc:1", bell_problem),
        ("zz-closed", bell_problem),
    ]
    terms = {name: make_cd_term(name, problem) for name, problem in cases}
    assert sorted(term.method for term in terms.values()) == sorted(METHOD_TAGS)
    for name, term in terms.items():
        assert method_from_tag(term.method, term.order) == name
