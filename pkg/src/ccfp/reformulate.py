"""Deterministic smooth program equivalent to (or approximating) the chance constraint.

Per scenario ``j`` the chance constraint becomes

    g_j = (mu1 - r_j a2^j)' c(x) + E_j * sigma(x) - (r_j b2^j - l1) <= 0

together with ``sum_j p_j z_j >= 1 - epsilon`` and ``z_j in [Phi(1), z_max]``.
``sigma(x) = sqrt(y' Gamma y)`` with ``y = (c(x), 1)``.

For the exact variant ``E_j = quantile(z_j)``. For the secant and tangent
variants ``E_j = exp(s_j)`` where the epigraph variable ``s_j`` is bounded
below by every affine piece of the approximation of ``log quantile``. This
replaces the per-scenario matrices of entrywise exponential bounds: each entry
bound shares the factor ``exp(F(z_j))``, and the Frobenius norm of the
smallest admissible matrix is exactly ``exp(F(z_j)) * sigma(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approx import DEFAULT_Z_MAX, PiecewiseAffine, approximation
from .errors import AssumptionError, DomainError
from .model import ProblemInstance, eval_c
from .normal_dist import PHI_1, log_quantile, quantile_derivative, std_normal_quantile

EXP_CLAMP = 50.0
_GATED_CHECKS = ("A1a", "A1b", "A1c", "A1d", "A2a", "A2b")


@dataclass(frozen=True)
class Variant:
    kind: str = "exact"
    K: int | None = None
    z_max: float = DEFAULT_Z_MAX

    def __post_init__(self):
        if self.kind not in ("exact", "secant", "tangent"):
            raise DomainError(f"unknown variant kind {self.kind!r}")
        if self.kind != "exact" and (self.K is None or int(self.K) != self.K or self.K < 1):
            raise DomainError(f"{self.kind} variant needs an integer K >= 1, got {self.K}")

    def label(self) -> str:
        return self.kind if self.kind == "exact" else f"{self.kind}(K={self.K})"


def sigma(inst: ProblemInstance, x) -> tuple[float, np.ndarray]:
    """Standard deviation ``sqrt(y' Gamma y)`` of the Gaussian part and its x-gradient."""
    c, jac = eval_c(inst.c_spec, x)
    return _sigma_from_c(inst.gamma_cov, c, jac)


def _sigma_from_c(cov, c, jac):
    y = np.append(c, 1.0)
    gy = cov @ y
    val = math.sqrt(max(float(y @ gy), 0.0))
    return val, jac.T @ gy[:-1] / val


class NlpProblem:
    """Smooth program over ``v = (x, z, s)`` in maximization sense.

    Inequalities are the ``J`` nonlinear rows ``g_j(v) <= 0`` and the linear
    rows ``lin_lo <= lin_A v <= lin_hi``; variables are boxed by
    ``lower <= v <= upper``.
    """

    sense = "max"

    def __init__(self, inst: ProblemInstance, variant: Variant, chance: bool = True):
        self.instance = inst
        self.variant = variant
        self.chance = chance
        m, J = inst.m, (inst.J if chance else 0)
        self.m, self.J = m, J
        self.pwa: PiecewiseAffine | None = None
        if chance and variant.kind != "exact":
            self.pwa = approximation(variant.kind, variant.K, variant.z_max)
        ns = 0 if self.pwa is None else J
        self.nx, self.nz, self.ns = m, J, ns
        self.n_vars = m + J + ns
        self.x_slice = slice(0, m)
        self.z_slice = slice(m, m + J)
        self.s_slice = slice(m + J, m + J + ns)

        self._d = []
        self._rhs = []
        for j in range(J):
            d, rhs = inst.scenario_terms(j)
            self._d.append(d)
            self._rhs.append(rhs)

        fs = inst.feasible_set
        lower = np.concatenate([fs.lower, np.full(J, PHI_1)])
        upper = np.concatenate([fs.upper, np.full(J, variant.z_max)])
        if ns:
            s_hi = log_quantile(variant.z_max)[0] + 1.0
            lower = np.concatenate([lower, np.full(J, -1.0)])
            upper = np.concatenate([upper, np.full(J, s_hi)])
        self.lower, self.upper = lower, upper

        rows, lo, hi, kinds = [], [], [], []
        if self.pwa is not None:
            for j in range(J):
                for k in range(self.pwa.pieces):
                    a = np.zeros(self.n_vars)
                    a[m + j] = self.pwa.slopes[k]
                    a[m + J + j] = -1.0
                    rows.append(a)
                    lo.append(-np.inf)
                    hi.append(-self.pwa.intercepts[k])
                    kinds.append(f"epigraph[j={j + 1},k={k + 1}]")
        if chance:
            a = np.zeros(self.n_vars)
            a[self.z_slice] = inst.probabilities
            rows.append(a)
            lo.append(1.0 - inst.epsilon)
            hi.append(np.inf)
            kinds.append("probability")
        for i, rg in enumerate(fs.ranges):
            a = np.zeros(self.n_vars)
            a[:m] = rg.a
            rows.append(a)
            lo.append(rg.lo)
            hi.append(rg.hi)
            kinds.append(f"range[{i + 1}]")
        self.lin_A = np.array(rows).reshape(len(rows), self.n_vars)
        self.lin_lo = np.array(lo, dtype=float)
        self.lin_hi = np.array(hi, dtype=float)
        self.lin_kinds = kinds

        # one-sided view: every finite side of a linear row as a_i' v - b_i <= 0
        sides_A, sides_b, labels = [], [], [f"g[{j + 1}]" for j in range(J)]
        for i, kind in enumerate(kinds):
            if np.isfinite(self.lin_hi[i]):
                sides_A.append(self.lin_A[i])
                sides_b.append(self.lin_hi[i])
                labels.append(kind if not np.isfinite(self.lin_lo[i]) else f"{kind}<=hi")
            if np.isfinite(self.lin_lo[i]):
                sides_A.append(-self.lin_A[i])
                sides_b.append(-self.lin_lo[i])
                labels.append(kind if not np.isfinite(self.lin_hi[i]) else f"{kind}>=lo")
        self._side_A = np.array(sides_A).reshape(len(sides_A), self.n_vars)
        self._side_b = np.array(sides_b, dtype=float)
        self.inequality_labels = labels

    # -- counts -----------------------------------------------------------
    @property
    def n_nonlinear(self) -> int:
        return self.J

    def count(self, prefix: str) -> int:
        return sum(k.startswith(prefix) for k in self.lin_kinds)

    # -- evaluators -------------------------------------------------------
    def split(self, v):
        v = np.asarray(v, dtype=float)
        return v[self.x_slice], v[self.z_slice], v[self.s_slice]

    def objective(self, v) -> tuple[float, np.ndarray]:
        """``mu0' c0(x)`` and its gradient over all variables."""
        x = np.asarray(v, dtype=float)[self.x_slice]
        c0, jac0 = eval_c(self.instance.c0_spec, x)
        grad = np.zeros(self.n_vars)
        grad[self.x_slice] = jac0.T @ self.instance.mu0
        return float(self.instance.mu0 @ c0), grad

    def _multiplier(self, j, z, s):
        # E_j and dE_j/d(z_j or s_j)
        if self.pwa is None:
            return std_normal_quantile(z[j]), quantile_derivative(z[j])
        e = math.exp(min(s[j], EXP_CLAMP))
        return e, e

    def nonlinear(self, v) -> tuple[np.ndarray, np.ndarray]:
        """All ``g_j`` values and the ``J x n_vars`` Jacobian."""
        x, z, s = self.split(v)
        c, jac = eval_c(self.instance.c_spec, x)
        sig, dsig = _sigma_from_c(self.instance.gamma_cov, c, jac)
        vals = np.empty(self.J)
        grads = np.zeros((self.J, self.n_vars))
        for j in range(self.J):
            e, de = self._multiplier(j, z, s)
            vals[j] = self._d[j] @ c + e * sig - self._rhs[j]
            grads[j, self.x_slice] = jac.T @ self._d[j] + e * dsig
            col = self.m + j if self.pwa is None else self.m + self.J + j
            grads[j, col] = de * sig
        return vals, grads

    def inequalities(self, v) -> tuple[np.ndarray, np.ndarray]:
        """All rows as ``c_i(v) <= 0``: the nonlinear rows first, then each finite linear side."""
        v = np.asarray(v, dtype=float)
        lin_vals = self._side_A @ v - self._side_b
        if not self.J:
            return lin_vals, self._side_A.copy()
        g, jac = self.nonlinear(v)
        return np.concatenate([g, lin_vals]), np.vstack([jac, self._side_A])

    def linear_values(self, v) -> np.ndarray:
        return self.lin_A @ np.asarray(v, dtype=float)

    def linear_violation(self, v) -> float:
        if not len(self.lin_lo):
            return 0.0
        a = self.linear_values(v)
        return float(max(0.0, np.max(self.lin_lo - a), np.max(a - self.lin_hi)))

    def bound_violation(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(max(0.0, np.max(self.lower - v), np.max(v - self.upper)))

    def nonlinear_violation(self, v) -> float:
        if not self.J:
            return 0.0
        g, _ = self.nonlinear(v)
        return float(max(0.0, g.max()))

    def max_violation(self, v) -> float:
        return max(self.nonlinear_violation(v), self.linear_violation(v), self.bound_violation(v))

    def describe(self) -> dict:
        return {
            "variables": self.n_vars,
            "x": self.nx,
            "z": self.nz,
            "s": self.ns,
            "nonlinear_rows": self.J,
            "epigraph_rows": self.count("epigraph"),
            "probability_rows": self.count("probability"),
            "range_rows": self.count("range"),
        }


def build_nlp(inst: ProblemInstance, variant: Variant) -> NlpProblem:
    """Assemble the smooth program for ``variant``.

    Refuses instances that fail any distributional or epsilon assumption,
    since the ``z_j >= Phi(1)`` bounds are only valid under them.
    """
    failed = inst.report.failed(_GATED_CHECKS)
    if failed:
        names = ", ".join(c.name for c in failed)
        raise AssumptionError(f"instance fails assumption check(s) {names}", inst.report)
    return NlpProblem(inst, variant)


def build_deterministic_nlp(inst: ProblemInstance) -> NlpProblem:
    """Objective and feasible set only, with the chance constraint dropped."""
    return NlpProblem(inst, Variant("exact"), chance=False)


def eval_constraint(nlp: NlpProblem, j: int, point) -> tuple[float, np.ndarray]:
    vals, grads = nlp.nonlinear(point)
    return float(vals[j]), grads[j]
