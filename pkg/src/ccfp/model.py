"""Problem instances and machine checks of the modelling assumptions.

An instance describes

    max  mu0' c0(x)
    s.t. P[(a1' c(x) + b1) / (a2' c(x) + b2) <= gamma] >= 1 - epsilon,  x in X

with ``(a1, b1)`` jointly Gaussian (mean ``(mu1, l1)``, covariance
``gamma_cov``) and ``(a2, b2, gamma)`` drawn from a finite scenario set.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import FactorizationError, InstanceError
from .normal_dist import PHI_1, cholesky

FUNCTION_KINDS = ("affine", "exp-affine")


def _vec(name, value, length=None) -> np.ndarray:
    a = np.array(value, dtype=float)
    if a.ndim != 1:
        raise InstanceError(f"{name} must be a vector")
    if length is not None and len(a) != length:
        raise InstanceError(f"{name} has length {len(a)}, expected {length}")
    if not np.all(np.isfinite(a)):
        raise InstanceError(f"{name} must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    p: float
    a2: np.ndarray
    b2: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "a2", _vec("a2", self.a2))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "b2", float(self.b2))
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """``c_i(x) = W_i x + v_i`` (affine) or ``exp(W_i x + v_i)`` (exp-affine)."""

    kind: str
    W: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise InstanceError(f"function kind must be one of {FUNCTION_KINDS}, got {self.kind!r}")
        W = np.array(self.W, dtype=float)
        if W.ndim != 2:
            raise InstanceError("W must be a matrix")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "v", _vec("v", self.v, W.shape[0]))

    @property
    def n_out(self) -> int:
        return self.W.shape[0]

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @classmethod
    def identity(cls, m: int) -> "FunctionSpec":
        return cls("affine", np.eye(m), np.zeros(m))


@dataclass(frozen=True, eq=False)
class LinearRange:
    a: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "a", _vec("range.a", self.a))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo <= self.hi:
            raise InstanceError(f"linear range has lo={self.lo} > hi={self.hi}")


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    lower: np.ndarray
    upper: np.ndarray
    ranges: tuple[LinearRange, ...] = ()

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise InstanceError("box bounds must be vectors of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InstanceError("box bounds need lower <= upper")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "ranges", tuple(self.ranges))
        for rg in self.ranges:
            if len(rg.a) != len(lo):
                raise InstanceError(f"linear range has length {len(rg.a)}, expected {len(lo)}")

    @classmethod
    def nonnegative(cls, m: int, ranges=()) -> "FeasibleSet":
        return cls(np.zeros(m), np.full(m, np.inf), tuple(ranges))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    mu0: np.ndarray
    c0_spec: FunctionSpec
    mu1: np.ndarray
    l1: float
    gamma_cov: np.ndarray
    scenarios: tuple[Scenario, ...]
    epsilon: float
    c_spec: FunctionSpec
    feasible_set: FeasibleSet
    name: str = ""
    comment: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "l1", float(self.l1))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        m, n = self.c_spec.n_in, self.c_spec.n_out
        if self.c0_spec.n_in != m:
            raise InstanceError(f"c0_spec takes {self.c0_spec.n_in} inputs, c_spec takes {m}")
        object.__setattr__(self, "mu0", _vec("mu0", self.mu0, self.c0_spec.n_out))
        object.__setattr__(self, "mu1", _vec("mu1", self.mu1, n))
        cov = np.array(self.gamma_cov, dtype=float)
        if cov.shape != (n + 1, n + 1):
            raise InstanceError(f"gamma_cov has shape {cov.shape}, expected {(n + 1, n + 1)}")
        cov.setflags(write=False)
        object.__setattr__(self, "gamma_cov", cov)
        if not self.scenarios:
            raise InstanceError("at least one scenario is required")
        for j, sc in enumerate(self.scenarios):
            if len(sc.a2) != n:
                raise InstanceError(f"scenario {j} a2 has length {len(sc.a2)}, expected {n}")
        if len(self.feasible_set.lower) != m:
            raise InstanceError(f"feasible set has dimension {len(self.feasible_set.lower)}, expected {m}")
        if not (0.0 < self.epsilon < 1.0):
            raise InstanceError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def m(self) -> int:
        return self.c_spec.n_in

    @property
    def n(self) -> int:
        return self.c_spec.n_out

    @property
    def J(self) -> int:
        return len(self.scenarios)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([sc.p for sc in self.scenarios])

    @functools.cached_property
    def report(self) -> "AssumptionReport":
        return validate_instance(self)

    def numerator_mean(self) -> np.ndarray:
        """Mean of the Gaussian vector ``(a1, b1)``."""
        return np.append(self.mu1, self.l1)

    def scenario_terms(self, j: int) -> tuple[np.ndarray, float]:
        """Linear coefficient ``mu1 - r_j a2^j`` and threshold ``r_j b2^j - l1``."""
        sc = self.scenarios[j]
        return self.mu1 - sc.r * sc.a2, sc.r * sc.b2 - self.l1


def eval_c(spec: FunctionSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Values and Jacobian of ``c`` at ``x``."""
    x = np.asarray(x, dtype=float)
    lin = spec.W @ x + spec.v
    if spec.kind == "affine":
        return lin, np.array(spec.W)
    vals = np.exp(lin)
    return vals, vals[:, None] * spec.W


def expected_scenario_vector(scenarios) -> np.ndarray:
    """Probability-weighted mean of the scenario denominator vectors."""
    scenarios = list(scenarios)
    if not scenarios:
        raise InstanceError("need at least one scenario")
    return sum(sc.p * sc.a2 for sc in scenarios)


# ---------------------------------------------------------------------------
# assumption checks

CHECK_NAMES = ("A1a", "A1b", "A1c", "A1d", "A2a", "A2b", "A2c", "A2d")
PD_RELATIVE_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class CheckResult:
    """One assumption check.

    ``slack`` is a violation measure: positive means the condition is
    violated by that amount, zero or negative means it holds.
    """

    name: str
    status: str
    detail: str
    slack: float


@dataclass(frozen=True, eq=False)
class AssumptionReport:
    checks: tuple[CheckResult, ...]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self, names=CHECK_NAMES) -> list[CheckResult]:
        return [c for c in self.checks if c.name in names and c.status == "fail"]

    @property
    def ok(self) -> bool:
        return not self.failed()

    def format(self) -> str:
        return "\n".join(f"{c.name:4s} {c.status:4s} slack={c.slack:+.6g}  {c.detail}" for c in self.checks)


def _status(slack: float) -> str:
    return "pass" if slack <= 0 else "fail"


def _affine_box_minimum(W: np.ndarray, v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # Interval lower bound of W x + v over the box; 0 * inf is treated as 0.
    total = v.astype(float).copy()
    for i in range(W.shape[0]):
        for k in range(W.shape[1]):
            w = W[i, k]
            if w > 0:
                total[i] += w * lo[k]
            elif w < 0:
                total[i] += w * hi[k]
    return total


def validate_instance(inst: ProblemInstance) -> AssumptionReport:
    """Run every assumption check and collect the results.

    Never raises on a structurally valid instance: violations are recorded
    as ``fail`` (or ``warn``) entries.
    """
    checks = []
    p = inst.probabilities
    cov = inst.gamma_cov

    s = abs(p.sum() - 1.0) - 1e-12
    bad_p = bool(np.any((p <= 0) | (p > 1)))
    checks.append(
        CheckResult(
            "A1a",
            "fail" if bad_p else _status(s),
            f"sum of scenario probabilities = {p.sum():.15g}" + ("; some p_j outside (0, 1]" if bad_p else ""),
            max(s, 1.0 if bad_p else s),
        )
    )

    neg_a2 = max(float(-sc.a2.min()) for sc in inst.scenarios)
    min_b2 = min(sc.b2 for sc in inst.scenarios)
    # b2 must be strictly positive, so slack 0 from b2 still fails
    viol = neg_a2 > 0 or min_b2 <= 0
    s = max(neg_a2, -min_b2)
    checks.append(
        CheckResult("A1b", "fail" if viol else "pass", f"min a2 = {-neg_a2:.6g}, min b2 = {min_b2:.6g}", float(s))
    )

    asym = float(np.max(np.abs(cov - cov.T)))
    neg = float(-cov.min())
    s = max(neg, asym - 1e-12 * (1 + np.abs(cov).max()))
    checks.append(
        CheckResult(
            "A1c",
            _status(s),
            f"min covariance entry = {cov.min():.6g}, asymmetry = {asym:.3g}",
            s,
        )
    )

    threshold = PD_RELATIVE_THRESHOLD * np.trace(cov) / cov.shape[0]
    try:
        fac = cholesky((cov + cov.T) / 2, min_pivot=threshold)
        piv = float(fac.pivots.min())
        checks.append(
            CheckResult("A1d", "pass", f"smallest Cholesky pivot = {piv:.6g} (threshold {threshold:.3g})", threshold - piv)
        )
    except FactorizationError as exc:
        checks.append(CheckResult("A1d", "fail", str(exc), threshold - exc.value))

    worst = np.inf
    where = ""
    for j in range(inst.J):
        d, _ = inst.scenario_terms(j)
        i = int(np.argmin(d))
        if d[i] < worst:
            worst, where = float(d[i]), f"scenario {j + 1}, component {i + 1}"
    checks.append(CheckResult("A2a", _status(-worst), f"min (mu1 - r_j a2^j) = {worst:.6g} at {where}", -worst))

    bound = float(p.min() * (1.0 - PHI_1))
    s = inst.epsilon - bound
    checks.append(
        CheckResult("A2b", _status(s), f"epsilon = {inst.epsilon:.6g}, min p_j (1 - Phi(1)) = {bound:.6g}", s)
    )

    if inst.c_spec.kind == "exp-affine":
        checks.append(CheckResult("A2c", "pass", "exp-affine c is log-convex", 0.0))
    else:
        checks.append(
            CheckResult("A2c", "warn", "affine c is not log-convex in general; solving as a smooth nonconvex program", 0.0)
        )

    if inst.c_spec.kind == "exp-affine":
        checks.append(CheckResult("A2d", "pass", "exp-affine c is positive everywhere", 0.0))
    else:
        fs = inst.feasible_set
        low = _affine_box_minimum(inst.c_spec.W, inst.c_spec.v, fs.lower, fs.upper)
        s = float(-low.min())
        s = s if np.isfinite(s) else np.inf
        checks.append(CheckResult("A2d", _status(s), f"interval lower bound of c over the box = {low.min():.6g}", s))

    return AssumptionReport(tuple(checks))
