"""Analytic and Monte Carlo evaluation of the chance constraint at a fixed decision.

The analytic value conditions on the scenario: given ``(a2, b2, gamma)`` the
linearized numerator ``(a1 - r a2)' c(x) + b1 - r b2`` is Gaussian. The Monte
Carlo estimate instead samples ``(a1, b1)`` and the scenario and counts the
original ratio event, so it checks the whole reformulation end to end.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .model import ProblemInstance, eval_c
from .normal_dist import cholesky, make_generator, sample_gaussian, std_normal_cdf
from .reformulate import sigma

BLOCK_SIZE = 1 << 16
CI_Z = 1.96
AGREEMENT_SIGMAS = 4.0


@dataclass(frozen=True)
class ExactProbability:
    total: float
    per_scenario: tuple[float, ...]


def exact_probability(inst: ProblemInstance, x) -> ExactProbability:
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.m,):
        raise DomainError(f"x has shape {x.shape}, expected ({inst.m},)")
    c, _ = eval_c(inst.c_spec, x)
    sig, _ = sigma(inst, x)
    if not sig > 0:
        raise DomainError("numerator standard deviation vanished")
    per = []
    for j in range(inst.J):
        d, rhs = inst.scenario_terms(j)
        per.append(std_normal_cdf((rhs - d @ c) / sig))
    total = float(sum(sc.p * pj for sc, pj in zip(inst.scenarios, per)))
    return ExactProbability(total, tuple(per))


@dataclass(frozen=True)
class ValidationReport:
    p_exact: float
    p_mc: float
    mc_halfwidth: float
    N: int
    seed: int
    per_scenario_exact: tuple[float, ...]
    per_scenario_mc: tuple[float, ...]
    scenario_counts: tuple[int, ...]
    denominator_violations: int

    @property
    def tolerance(self) -> float:
        p = self.p_exact
        return AGREEMENT_SIGMAS * math.sqrt(max(p * (1.0 - p), 0.0) / self.N)

    @property
    def agrees(self) -> bool:
        return abs(self.p_mc - self.p_exact) <= self.tolerance and self.denominator_violations == 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ci"] = [self.p_mc - self.mc_halfwidth, self.p_mc + self.mc_halfwidth]
        out["agrees"] = self.agrees
        return out


def worker_count() -> int:
    """Worker cap from ``CCFP_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("CCFP_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"CCFP_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def _block(inst, c, factor, cum_p, seed, index, size):
    draws = sample_gaussian(inst.numerator_mean(), factor, size, seed, index, 0)
    u = make_generator(seed, index, 1).random(size)
    idx = np.minimum(np.searchsorted(cum_p, u, side="right"), inst.J - 1)
    a2 = np.array([sc.a2 for sc in inst.scenarios])
    b2 = np.array([sc.b2 for sc in inst.scenarios])
    r = np.array([sc.r for sc in inst.scenarios])
    num = draws[:, :-1] @ c + draws[:, -1]
    den = (a2 @ c + b2)[idx]
    bad = den <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = (num / den <= r[idx]) & ~bad
    hits = np.bincount(idx, weights=hit, minlength=inst.J).astype(np.int64)
    seen = np.bincount(idx, minlength=inst.J).astype(np.int64)
    return hits, seen, int(bad.sum())


def mc_probability(inst: ProblemInstance, x, N: int, seed: int, workers: int | None = None) -> ValidationReport:
    """Monte Carlo estimate of the chance-constraint probability at ``x``.

    Samples are generated in fixed blocks keyed by ``(seed, block index)``,
    so the estimate does not depend on how blocks are spread over workers.
    """
    if N < 1000:
        raise DomainError("Monte Carlo validation needs N >= 1000")
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.m,):
        raise DomainError(f"x has shape {x.shape}, expected ({inst.m},)")
    exact = exact_probability(inst, x)
    c, _ = eval_c(inst.c_spec, x)
    factor = cholesky(inst.gamma_cov)
    cum_p = np.cumsum(inst.probabilities)
    sizes = [BLOCK_SIZE] * (N // BLOCK_SIZE)
    if N % BLOCK_SIZE:
        sizes.append(N % BLOCK_SIZE)
    workers = workers or worker_count()

    def run(b):
        return _block(inst, c, factor, cum_p, seed, b, sizes[b])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    hits = sum(p[0] for p in parts)
    seen = sum(p[1] for p in parts)
    bad = sum(p[2] for p in parts)
    p_mc = float(hits.sum()) / N
    per_mc = tuple(float(h / s) if s else float("nan") for h, s in zip(hits, seen))
    return ValidationReport(
        p_exact=exact.total,
        p_mc=p_mc,
        mc_halfwidth=CI_Z * math.sqrt(p_mc * (1.0 - p_mc) / N),
        N=int(N),
        seed=int(seed),
        per_scenario_exact=exact.per_scenario,
        per_scenario_mc=per_mc,
        scenario_counts=tuple(int(s) for s in seen),
        denominator_violations=bad,
    )
