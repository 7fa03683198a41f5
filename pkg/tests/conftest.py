import numpy as np
import pytest

from ccfp.io import load_instance
from ccfp.model import FeasibleSet, FunctionSpec, LinearRange, ProblemInstance, Scenario


@pytest.fixture(scope="session")
def econ():
    return load_instance("main_economic")


@pytest.fixture(scope="session")
def econ_feasible():
    return load_instance("main_economic_feasible")


def tiny_instance(rng, n=None, J=None, kind="affine", eps=None):
    """Random small instance satisfying the distributional assumptions."""
    n = n or int(rng.integers(1, 3))
    J = J or int(rng.integers(1, 3))
    p = rng.dirichlet(np.ones(J)) if J > 1 else np.ones(1)
    p = np.maximum(p, 0.2)
    p = p / p.sum()
    scale = rng.uniform(0.0, 0.5, size=(n + 1, n + 1))
    cov = 0.5 * (scale + scale.T) + np.diag(rng.uniform(0.5, 2.0, n + 1))
    mu1 = rng.uniform(5.0, 10.0, n)
    scenarios = []
    for j in range(J):
        r = rng.uniform(0.2, 0.8)
        a2 = rng.uniform(0.0, 5.0, n)
        b2 = rng.uniform(20.0, 60.0)
        scenarios.append(Scenario(p[j], a2, b2, r))
    eps = eps if eps is not None else 0.9 * min(p) * 0.1586552539
    return ProblemInstance(
        mu0=rng.uniform(1.0, 3.0, n),
        c0_spec=FunctionSpec.identity(n) if kind == "affine" else FunctionSpec(kind, np.eye(n), np.zeros(n)),
        mu1=mu1,
        l1=rng.uniform(0.0, 1.0),
        gamma_cov=cov,
        scenarios=scenarios,
        epsilon=eps,
        c_spec=FunctionSpec(kind, np.eye(n), np.zeros(n)),
        feasible_set=FeasibleSet.nonnegative(n, [LinearRange(np.ones(n), 0.0, 5.0)]),
    )


_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record ``(passed, detail)`` for an acceptance criterion; echoed in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
