import dataclasses

import numpy as np
import pytest

from ccfp.errors import InstanceError
from ccfp.model import (
    CHECK_NAMES,
    FeasibleSet,
    FunctionSpec,
    LinearRange,
    ProblemInstance,
    Scenario,
    eval_c,
    expected_scenario_vector,
    validate_instance,
)
from conftest import tiny_instance
from oracles import cdf_decimal


def with_changes(inst, **kw):
    return dataclasses.replace(inst, **kw)


def test_econ_report_pattern(econ):
    rep = econ.report
    for name in ("A1a", "A1b", "A1c", "A1d", "A2a", "A2b", "A2d"):
        assert rep[name].status == "pass", name
    assert rep["A2c"].status == "warn"
    assert rep.ok


def test_report_lists_every_check_once(econ):
    names = [c.name for c in validate_instance(econ).checks]
    assert names == list(CHECK_NAMES)


def test_epsilon_gate_slack(econ):
    rep = validate_instance(with_changes(econ, epsilon=0.05))
    assert rep["A2b"].status == "fail"
    expected = 0.05 - 0.3 * (1.0 - cdf_decimal(1.0))
    assert rep["A2b"].slack == pytest.approx(expected, abs=1e-12)
    assert rep["A2b"].slack == pytest.approx(0.00240, abs=1e-5)
    assert [c.name for c in rep.failed()] == ["A2b"]


def test_probabilities_must_sum_to_one(econ):
    sc = list(econ.scenarios)
    sc[1] = Scenario(0.2, sc[1].a2, sc[1].b2, sc[1].r)
    rep = validate_instance(with_changes(econ, scenarios=sc))
    assert rep["A1a"].status == "fail"
    assert rep["A1a"].slack == pytest.approx(0.1, abs=1e-12)


def test_negative_denominator_data_fails_a1b(econ):
    sc = list(econ.scenarios)
    sc[0] = Scenario(sc[0].p, sc[0].a2, -1.0, sc[0].r)
    assert validate_instance(with_changes(econ, scenarios=sc))["A1b"].status == "fail"


def test_negative_covariance_entry_fails_a1c(econ):
    G = np.array(econ.gamma_cov)
    G[0, 1] = G[1, 0] = -0.1
    assert validate_instance(with_changes(econ, gamma_cov=G))["A1c"].status == "fail"


def test_singular_covariance_fails_a1d(econ):
    G = np.ones((6, 6))
    assert validate_instance(with_changes(econ, gamma_cov=G))["A1d"].status == "fail"


def test_a2a_detects_profit_exceeding_cost(econ):
    sc = list(econ.scenarios)
    sc[0] = Scenario(sc[0].p, sc[0].a2 * 3, sc[0].b2, sc[0].r)
    rep = validate_instance(with_changes(econ, scenarios=sc))
    assert rep["A2a"].status == "fail"


def test_exp_affine_passes_log_convexity():
    inst = tiny_instance(np.random.default_rng(1), kind="exp-affine")
    assert validate_instance(inst)["A2c"].status == "pass"


def test_a2d_detects_negative_c(econ):
    fs = FeasibleSet(np.full(5, -1.0), np.full(5, np.inf), econ.feasible_set.ranges)
    assert validate_instance(with_changes(econ, feasible_set=fs))["A2d"].status == "fail"


def test_structural_errors():
    with pytest.raises(InstanceError):
        FunctionSpec("quadratic", np.eye(2), np.zeros(2))
    with pytest.raises(InstanceError):
        LinearRange([1.0], 2.0, 1.0)
    with pytest.raises(InstanceError):
        FeasibleSet([0.0, 0.0], [1.0])


def test_instance_dimension_mismatch(econ):
    with pytest.raises(InstanceError):
        with_changes(econ, gamma_cov=np.eye(5))
    with pytest.raises(InstanceError):
        with_changes(econ, mu1=np.ones(4))
    with pytest.raises(InstanceError):
        with_changes(econ, epsilon=1.5)


def test_instance_is_immutable(econ):
    with pytest.raises(dataclasses.FrozenInstanceError):
        econ.epsilon = 0.1
    with pytest.raises(ValueError):
        econ.mu1[0] = 1.0


def test_eval_c_examples():
    vals, jac = eval_c(FunctionSpec.identity(2), [1.0, 2.0])
    assert np.array_equal(vals, [1.0, 2.0])
    assert np.array_equal(jac, np.eye(2))
    vals, jac = eval_c(FunctionSpec("exp-affine", np.zeros((3, 2)), np.zeros(3)), [0.3, -0.7])
    assert np.array_equal(vals, np.ones(3))
    assert np.array_equal(jac, np.zeros((3, 2)))
    vals, jac = eval_c(FunctionSpec("exp-affine", np.eye(1), np.zeros(1)), [0.5])
    assert vals[0] == pytest.approx(np.exp(0.5), rel=1e-15)
    assert jac[0, 0] == pytest.approx(np.exp(0.5), rel=1e-15)


@pytest.mark.parametrize("kind", ["affine", "exp-affine"])
def test_eval_c_jacobian_finite_differences(kind):
    rng = np.random.default_rng(7)
    spec = FunctionSpec(kind, rng.normal(size=(3, 4)), rng.normal(size=3))
    for _ in range(20):
        x = rng.normal(size=4)
        _, jac = eval_c(spec, x)
        h = 1e-6
        fd = np.column_stack([(eval_c(spec, x + h * e)[0] - eval_c(spec, x - h * e)[0]) / (2 * h) for e in np.eye(4)])
        assert np.max(np.abs(fd - jac)) <= 1e-6 * max(1.0, np.max(np.abs(jac)))


def test_expected_scenario_vector(econ):
    assert np.allclose(expected_scenario_vector(econ.scenarios), [52, 97, 77, 92, 87], atol=1e-12)
    assert np.allclose(econ.mu0, expected_scenario_vector(econ.scenarios), atol=1e-12)
    one = Scenario(1.0, [1.0, 2.0], 1.0, 0.5)
    assert np.array_equal(expected_scenario_vector([one]), one.a2)
    half = Scenario(0.5, [3.0, 4.0], 1.0, 0.5)
    assert np.allclose(expected_scenario_vector([half, half]), [3.0, 4.0])
    rev = expected_scenario_vector(tuple(reversed(econ.scenarios)))
    assert np.allclose(rev, expected_scenario_vector(econ.scenarios), atol=1e-12)


def test_econ_instance_contents(econ):
    assert (econ.m, econ.n, econ.J) == (5, 5, 2)
    assert econ.epsilon == 0.02
    assert [sc.r for sc in econ.scenarios] == [0.4, 0.6]
    assert np.allclose(econ.probabilities, [0.7, 0.3])
    assert isinstance(econ, ProblemInstance)
