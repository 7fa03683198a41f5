"""Independent reference computations used to derive expected test values.

Nothing here imports ccfp. The CDF oracles sum the Taylor series
``Phi(x) = 1/2 + phi(x) * sum_n x^(2n+1) / (2n+1)!!`` (all terms positive for
``x >= 0``) and use symmetry for negative arguments.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np

_PI_50 = Decimal("3.14159265358979323846264338327950288419716939937511")


def cdf_decimal(x: float, digits: int = 50) -> float:
    """Phi(x) evaluated in ``digits``-digit decimal arithmetic, rounded to float."""
    with localcontext() as ctx:
        ctx.prec = digits
        ax = abs(Decimal(x))
        term = ax
        total = ax
        n = 0
        eps = Decimal(10) ** (-digits)
        while term > eps * total:
            n += 1
            term = term * ax * ax / (2 * n + 1)
            total += term
        pdf = (-(ax * ax) / 2).exp() / (2 * _PI_50).sqrt()
        upper = Decimal("0.5") + pdf * total
        return float(upper if x >= 0 else 1 - upper)


def cdf_series(x, terms: int = 400) -> np.ndarray:
    """Vectorized float64 version of the same series (absolute error ~1e-16 for |x| <= 8)."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    term = ax.copy()
    total = ax.copy()
    for n in range(1, terms):
        term = term * ax * ax / (2 * n + 1)
        total = total + term
        if np.all(term <= 1e-18 * total):
            break
    upper = 0.5 + np.exp(-0.5 * ax * ax) / math.sqrt(2.0 * math.pi) * total
    return np.where(x >= 0, upper, 1.0 - upper)


def quantile_bisect(p, lo: float = -8.0, hi: float = 8.0, steps: int = 200) -> np.ndarray:
    """Inverse of ``cdf_series`` by plain bisection."""
    p = np.asarray(p, dtype=float)
    a = np.full(p.shape, lo)
    b = np.full(p.shape, hi)
    for _ in range(steps):
        mid = 0.5 * (a + b)
        below = cdf_series(mid) < p
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def pdf(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2) / math.sqrt(2.0 * math.pi)


def log_quantile_oracle(p):
    return np.log(quantile_bisect(p))


def secant_oracle(K: int, z_max: float, z):
    """Chord interpolant of log quantile on K+1 uniform nodes, evaluated by locating the interval."""
    lo = float(cdf_series(1.0))
    nodes = np.linspace(lo, z_max, K + 1)
    vals = log_quantile_oracle(nodes)
    return np.interp(z, nodes, vals)


def tangent_oracle(K: int, z_max: float, z):
    """Pointwise max of tangents of log quantile at the K+1 nodes."""
    lo = float(cdf_series(1.0))
    nodes = np.linspace(lo, z_max, K + 1)
    q = quantile_bisect(nodes)
    slope = 1.0 / (pdf(q) * q)
    z = np.asarray(z, dtype=float)
    return np.max(slope[:, None] * (z[None, :] - nodes[:, None]) + np.log(q)[:, None], axis=0)


def lp_bruteforce(c, a, lo, hi):
    """max c'x s.t. lo <= a'x <= hi, x >= 0 with a > 0: optimum sits at a single-product vertex."""
    best = -np.inf
    for i in range(len(c)):
        for level in (lo, hi):
            best = max(best, c[i] * level / a[i])
    return best


def secant_pieces_oracle(K: int, z_max: float):
    lo = float(cdf_series(1.0))
    xi = np.linspace(lo, z_max, K + 1)
    f = log_quantile_oracle(xi)
    u = (f[1:] - f[:-1]) / (xi[1:] - xi[:-1])
    t = (xi[1:] * f[:-1] - xi[:-1] * f[1:]) / (xi[1:] - xi[:-1])
    return u, t


def tangent_pieces_oracle(K: int, z_max: float):
    lo = float(cdf_series(1.0))
    xi = np.linspace(lo, z_max, K + 1)
    q = quantile_bisect(xi)
    d = 1.0 / (pdf(q) * q)
    return d, -d * xi + np.log(q)


def y_matrix_feasible(mu1, l1, cov, scenarios, c, z, pieces=None, levels=None) -> bool:
    """Feasibility of ``(x, z)`` in the matrix-variable form, using the smallest admissible Y.

    Every entry bound reads ``sqrt(cov[p, q]) * exp(log(y_p)/2 + log(y_q)/2 + L(z_j)) <= Y[p, q]``
    with ``y = (c, 1)`` and ``L`` either log quantile (``pieces=None``) or the max
    over the affine ``pieces = (slopes, intercepts)``. Taking each entry at its
    bound, the scenario row is ``(mu1 - r a2)' c + ||Y||_F <= r b2 - l1``.
    ``levels`` may carry precomputed ``L(z_j)`` values.
    """
    y = np.append(np.asarray(c, dtype=float), 1.0)
    dim = len(y)
    for j, (p, a2, b2, r) in enumerate(scenarios):
        if levels is not None:
            level = float(levels[j])
        elif pieces is None:
            level = float(log_quantile_oracle(z[j]))
        else:
            slopes, intercepts = pieces
            level = max(s * z[j] + b for s, b in zip(slopes, intercepts))
        frob2 = 0.0
        for a in range(dim):
            for b in range(dim):
                entry = math.sqrt(cov[a][b]) * math.sqrt(y[a]) * math.sqrt(y[b]) * math.exp(level)
                frob2 += entry * entry
        lhs = float(np.dot(np.asarray(mu1) - r * np.asarray(a2), c)) + math.sqrt(frob2)
        if lhs > r * b2 - l1:
            return False
    return True
