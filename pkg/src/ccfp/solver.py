"""Augmented Lagrangian solver for the small smooth programs built by :mod:`ccfp.reformulate`.

Inequality rows (nonlinear and general linear) are handled by a
Powell-Hestenes-Rockafellar augmented Lagrangian; variable bounds are kept
exactly by the bound-constrained quasi-Newton inner solver (L-BFGS-B).

The solver works on any object exposing ``n_vars``, ``lower``, ``upper``,
``n_nonlinear``, ``objective(v)`` (maximization value and gradient) and
``inequalities(v)`` (rows ``c_i(v) <= 0`` with Jacobian, nonlinear rows first).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .approx import approximation, eval_pwa
from .errors import DomainError
from .normal_dist import make_generator

LINEAR_TOL = 1e-10
ACTIVE_TOL = 1e-7
POLISH_START = 1e-4


@dataclass(frozen=True)
class SolveOptions:
    feasibility_tol: float = 1e-8
    stationarity_tol: float = 1e-6
    max_outer: int = 100
    max_inner: int = 500
    multistart: int = 5
    seed: int = 0
    initial_penalty: float = 10.0
    penalty_growth: float = 10.0
    max_penalty: float = 1e12

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.stationarity_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.penalty_growth <= 1:
            raise DomainError("penalty growth factor must exceed 1")
        if self.multistart < 1 or self.max_outer < 1 or self.max_inner < 1:
            raise DomainError("iteration and start counts must be positive")


@dataclass(eq=False)
class SolveResult:
    status: str
    x: np.ndarray
    z: np.ndarray
    s: np.ndarray
    objective: float
    stationarity: float
    complementarity: float
    violation: float
    active_set: tuple[str, ...]
    wall_time: float
    multipliers: np.ndarray = field(repr=False)
    outer_iterations: int = 0
    start_index: int = 0
    message: str = ""

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([self.x, self.z, self.s])

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _NonFinite(ArithmeticError):
    pass


def _projected(grad, v, lower, upper, tol=1e-12):
    # Zero the components a bound multiplier can absorb.
    g = np.array(grad, dtype=float)
    scale = 1.0 + np.abs(v)
    at_lo = (v - lower) <= tol * scale
    at_hi = (upper - v) <= tol * scale
    g[at_lo & (g > 0)] = 0.0
    g[at_hi & (g < 0)] = 0.0
    return g


def kkt_residual(nlp, point, multipliers) -> tuple[float, float]:
    """Stationarity and complementarity of a candidate KKT pair.

    The Lagrangian is that of minimizing ``-objective`` subject to the rows of
    ``nlp.inequalities``. Components of the gradient that point into an
    active variable bound are not counted, since a bound multiplier absorbs
    them.
    """
    lam = np.asarray(multipliers, dtype=float)
    if np.any(lam < 0):
        raise DomainError("multipliers must be nonnegative")
    v = np.asarray(point, dtype=float)
    _, grad_f = nlp.objective(v)
    vals, jac = nlp.inequalities(v)
    if lam.shape != vals.shape:
        raise DomainError(f"expected {len(vals)} multipliers, got {lam.shape}")
    grad = -grad_f + jac.T @ lam
    grad = _projected(grad, v, nlp.lower, nlp.upper)
    stat = float(np.max(np.abs(grad))) if grad.size else 0.0
    comp = float(np.max(np.abs(lam * vals))) if vals.size else 0.0
    return stat, comp


def check_gradients(nlp, point, step: float = 1e-6) -> float:
    """Largest relative error of analytic gradients against central differences.

    Covers the objective and every nonlinear row; the error of each function
    is measured as ``max|fd - analytic| / max(1, max|analytic|)``.
    """
    v = np.asarray(point, dtype=float)
    n = len(v)
    k = nlp.n_nonlinear

    def funcs(u):
        f, gf = nlp.objective(u)
        vals, jac = nlp.inequalities(u)
        return np.concatenate([[f], vals[:k]]), np.vstack([gf, jac[:k]])

    _, analytic = funcs(v)
    fd = np.zeros_like(analytic)
    for i in range(n):
        # power-of-two step so that v +- h is exact whenever v is on the step's grid
        h = 2.0 ** round(math.log2(step * max(1.0, abs(v[i]))))
        up, dn = v.copy(), v.copy()
        up[i] += h
        dn[i] -= h
        fd[:, i] = (funcs(up)[0] - funcs(dn)[0]) / (up[i] - dn[i])
    scale = np.maximum(1.0, np.max(np.abs(analytic), axis=1))
    return float(np.max(np.max(np.abs(fd - analytic), axis=1) / scale))


# ---------------------------------------------------------------------------
# starting points


def _base_x(nlp) -> np.ndarray:
    m = nlp.m
    lo, hi = nlp.lower[:m], nlp.upper[:m]
    x = np.zeros(m)
    both = np.isfinite(lo) & np.isfinite(hi)
    x[both] = 0.5 * (lo[both] + hi[both])
    only_lo = np.isfinite(lo) & ~np.isfinite(hi)
    x[only_lo] = lo[only_lo]
    only_hi = ~np.isfinite(lo) & np.isfinite(hi)
    x[only_hi] = hi[only_hi]
    ranges = nlp.instance.feasible_set.ranges
    if not ranges:
        return x
    mids = np.array([_range_mid(rg) for rg in ranges])
    A = np.array([rg.a for rg in ranges])
    resid = mids - A @ x
    if len(ranges) == 1 and abs(A[0].sum()) > 0:
        # one range: move every coordinate by the same amount
        x = x + resid[0] / A[0].sum()
    else:
        x = x + np.linalg.lstsq(A, resid, rcond=None)[0]
    return np.clip(x, lo, hi)


def _range_mid(rg) -> float:
    if np.isfinite(rg.lo) and np.isfinite(rg.hi):
        return 0.5 * (rg.lo + rg.hi)
    if np.isfinite(rg.lo):
        return rg.lo
    if np.isfinite(rg.hi):
        return rg.hi
    return 0.0


def initial_points(nlp, opts: SolveOptions) -> list[np.ndarray]:
    """Deterministic first start, then seeded +-20% perturbations of its x part."""
    x0 = _base_x(nlp)
    inst = nlp.instance
    z0 = np.full(nlp.nz, np.clip(1.0 - inst.epsilon, nlp.lower[nlp.z_slice].max(initial=0), nlp.upper[nlp.z_slice].min(initial=1)))
    s0 = np.zeros(nlp.ns)
    if nlp.ns:
        sec = approximation("secant", nlp.variant.K, nlp.variant.z_max)
        s0 = np.full(nlp.ns, eval_pwa(sec, float(z0[0])))
    starts = [np.concatenate([x0, z0, s0])]
    lo, hi = nlp.lower[: nlp.m], nlp.upper[: nlp.m]
    for k in range(1, opts.multistart):
        rng = make_generator(opts.seed, k)
        x = np.clip(x0 * rng.uniform(0.8, 1.2, size=len(x0)), lo, hi)
        starts.append(np.concatenate([x, z0, s0]))
    return starts


# ---------------------------------------------------------------------------
# augmented Lagrangian


def _run_start(nlp, v0, opts: SolveOptions, index: int) -> SolveResult:
    t0 = time.perf_counter()
    lower, upper = np.asarray(nlp.lower, float), np.asarray(nlp.upper, float)
    bounds = list(zip(np.where(np.isfinite(lower), lower, None), np.where(np.isfinite(upper), upper, None)))
    v = np.clip(np.asarray(v0, dtype=float), lower, upper)
    k = nlp.n_nonlinear

    f0, gf0 = nlp.objective(v)
    c0, jac0 = nlp.inequalities(v)
    f_scale = max(1.0, float(np.max(np.abs(gf0))))
    row_scale = 1.0 / np.maximum(1.0, np.max(np.abs(jac0), axis=1)) if len(c0) else np.zeros(0)
    lam = np.zeros(len(c0))
    rho = opts.initial_penalty
    inner_gtol = 0.01 * opts.stationarity_tol / f_scale

    def merit(u):
        f, gf = nlp.objective(u)
        vals, jac = nlp.inequalities(u)
        if not (math.isfinite(f) and np.all(np.isfinite(vals)) and np.all(np.isfinite(jac))):
            raise _NonFinite("evaluator returned a non-finite value")
        cs = vals * row_scale
        shifted = np.maximum(0.0, lam + rho * cs)
        val = -f / f_scale + float(np.sum(shifted**2 - lam**2)) / (2.0 * rho)
        grad = -gf / f_scale + (jac * row_scale[:, None]).T @ shifted
        return val, grad

    def violations(u):
        vals, _ = nlp.inequalities(u)
        nonlin = float(max(0.0, vals[:k].max())) if k else 0.0
        lin = float(max(0.0, vals[k:].max())) if len(vals) > k else 0.0
        return nonlin, lin

    def measure(u):
        nonlin, lin = violations(u)
        return max(nonlin / opts.feasibility_tol, lin / LINEAR_TOL)

    status, message = "iteration-limit", ""
    prev = measure(v)
    best_infeas = math.inf
    stall = 0
    outer = 0
    try:
        for outer in range(1, opts.max_outer + 1):
            res = minimize(
                merit,
                v,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": opts.max_inner, "gtol": inner_gtol, "ftol": 0.0, "maxls": 50, "maxcor": 20},
            )
            v = np.clip(res.x, lower, upper)
            vals, _ = nlp.inequalities(v)
            lam = np.maximum(0.0, lam + rho * vals * row_scale)
            mult = lam * row_scale * f_scale
            stat, _ = kkt_residual(nlp, v, mult)
            nonlin, lin = violations(v)
            cur = measure(v)
            if cur <= 1.0 and stat <= opts.stationarity_tol:
                status = "optimal"
                break
            if max(nonlin, lin) <= POLISH_START and stat <= POLISH_START * f_scale:
                polished = _polish(nlp, v, mult, opts)
                if polished is not None:
                    v, mult = polished
                    lam = mult / (row_scale * f_scale)
                    status = "optimal"
                    break
            if cur > 1.0:
                raw = max(nonlin, lin)
                if raw < 0.99 * best_infeas:
                    best_infeas, stall = raw, 0
                else:
                    stall += 1
                if rho >= opts.max_penalty and stall >= 3:
                    status, message = "infeasible", f"constraint violation stalled at {raw:.3g}"
                    break
                if cur > 0.25 * prev:
                    rho = min(rho * opts.penalty_growth, opts.max_penalty)
            prev = cur
    except _NonFinite as exc:
        status, message = "iteration-limit", f"start {index}: {exc}"

    mult = lam * row_scale * f_scale
    f, _ = nlp.objective(v)
    stat, comp = kkt_residual(nlp, v, mult)
    nonlin, lin = violations(v)
    viol = max(nonlin, lin)
    if status == "iteration-limit" and not message and viol > opts.feasibility_tol and rho >= opts.max_penalty:
        status, message = "infeasible", f"constraint violation {viol:.3g} at maximum penalty"
    x, z, s = nlp.split(v)
    return SolveResult(
        status=status,
        x=x.copy(),
        z=z.copy(),
        s=s.copy(),
        objective=f,
        stationarity=stat,
        complementarity=comp,
        violation=viol,
        active_set=_active_set(nlp, v, mult),
        wall_time=time.perf_counter() - t0,
        multipliers=mult,
        outer_iterations=outer,
        start_index=index,
        message=message,
    )


def _lagrangian_grad(nlp, u, lam):
    _, gf = nlp.objective(u)
    _, jac = nlp.inequalities(u)
    return -gf + jac.T @ lam


def _polish(nlp, v, mult, opts: SolveOptions, max_iter: int = 30):
    """Newton iterations on the KKT equations of a guessed active set.

    Starts from an augmented Lagrangian iterate. Rows whose multiplier comes
    out negative are released one at a time; bound-fixed variables are
    released when the Lagrangian gradient points into the box. Returns the
    polished ``(v, mult)`` when it certifies the tolerances, else ``None``.
    """
    lower, upper = np.asarray(nlp.lower, float), np.asarray(nlp.upper, float)
    v = np.clip(np.array(v, dtype=float), lower, upper)
    lam = np.array(mult, dtype=float)
    k = nlp.n_nonlinear
    dropped: set[int] = set()
    for _ in range(max_iter):
        vals, jac = nlp.inequalities(v)
        gl = _lagrangian_grad(nlp, v, lam)
        scale = 1.0 + np.abs(v)
        at_lo = (v - lower) <= 1e-14 * scale
        at_hi = (upper - v) <= 1e-14 * scale
        fixed = (at_lo & (gl >= 0)) | (at_hi & (gl <= 0))
        free = np.flatnonzero(~fixed)
        row_tol = 1e-6 * (1.0 + np.max(np.abs(jac), axis=1))
        active = [i for i in range(len(vals)) if (lam[i] > 0 or vals[i] > -row_tol[i]) and (i not in dropped or vals[i] > 0)]
        nf, na = len(free), len(active)
        if nf == 0:
            return None
        hess = np.zeros((nf, nf))
        for col, i in enumerate(free):
            t = 1e-6 * max(1.0, abs(v[i]))
            up, dn = v.copy(), v.copy()
            up[i] += t
            dn[i] -= t
            hess[:, col] = (_lagrangian_grad(nlp, up, lam)[free] - _lagrangian_grad(nlp, dn, lam)[free]) / (2 * t)
        hess = 0.5 * (hess + hess.T)
        JA = jac[np.ix_(active, free)] if na else np.zeros((0, nf))
        _, gf = nlp.objective(v)
        kkt = np.block([[hess, JA.T], [JA, np.zeros((na, na))]])
        rhs = np.concatenate([gf[free], -vals[active]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        step, lam_a = sol[:nf], sol[nf:]
        if na and lam_a.min() < -1e-12 * (1.0 + np.abs(lam_a).max()):
            dropped.add(active[int(np.argmin(lam_a))])
            lam[active[int(np.argmin(lam_a))]] = 0.0
            continue
        v_new = v.copy()
        v_new[free] += step
        v = np.clip(v_new, lower, upper)
        lam = np.zeros_like(lam)
        lam[active] = np.maximum(lam_a, 0.0)
        vals, _ = nlp.inequalities(v)
        nonlin = float(max(0.0, vals[:k].max())) if k else 0.0
        lin = float(max(0.0, vals[k:].max())) if len(vals) > k else 0.0
        stat, _ = kkt_residual(nlp, v, lam)
        if nonlin <= opts.feasibility_tol and lin <= LINEAR_TOL and stat <= opts.stationarity_tol:
            return v, lam
    return None


def _active_set(nlp, v, mult) -> tuple[str, ...]:
    vals, _ = nlp.inequalities(v)
    labels = getattr(nlp, "inequality_labels", [f"c[{i + 1}]" for i in range(len(vals))])
    active = [lbl for lbl, c, lm in zip(labels, vals, mult) if c >= -ACTIVE_TOL * (1 + abs(lm)) and lm > 0 or abs(c) <= ACTIVE_TOL]
    for i in range(len(v)):
        if np.isfinite(nlp.lower[i]) and v[i] - nlp.lower[i] <= ACTIVE_TOL:
            active.append(f"v[{i + 1}]>=lo")
        if np.isfinite(nlp.upper[i]) and nlp.upper[i] - v[i] <= ACTIVE_TOL:
            active.append(f"v[{i + 1}]<=hi")
    return tuple(active)


def solve(nlp, opts: SolveOptions | None = None) -> SolveResult:
    """Run every start and keep the best result.

    Among optimal results the highest objective wins (ties to the lowest start
    index); without any optimal result the lowest violation wins and the
    status is ``infeasible`` when every start reported infeasibility.
    """
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    results = [_run_start(nlp, v0, opts, i) for i, v0 in enumerate(initial_points(nlp, opts))]
    optimal = [r for r in results if r.status == "optimal"]
    if optimal:
        best = max(optimal, key=lambda r: (r.objective, -r.start_index))
    else:
        best = min(results, key=lambda r: (r.violation, r.start_index))
        if all(r.status == "infeasible" for r in results):
            best.status = "infeasible"
        elif best.status == "infeasible":
            best.status = "iteration-limit"
    best.wall_time = time.perf_counter() - t0
    return best
