"""Secant and tangent piecewise-affine approximations of ``log quantile``.

``log quantile`` is convex on ``[Phi(1), 1)``, so chords between breakpoints
over-estimate it and tangent lines under-estimate it. Both are represented as
``F(z) = max_k (slope_k * z + intercept_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .normal_dist import PHI_1, log_quantile

DEFAULT_Z_MAX = 1.0 - 1e-4
_Z_CAP = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class Breakpoints:
    grid: np.ndarray

    @property
    def K(self) -> int:
        return len(self.grid) - 1


@dataclass(frozen=True, eq=False)
class PiecewiseAffine:
    kind: str
    slopes: np.ndarray
    intercepts: np.ndarray
    z_lo: float
    z_hi: float
    nodes: np.ndarray

    @property
    def pieces(self) -> int:
        return len(self.slopes)

    def contains(self, z) -> bool:
        z = np.asarray(z)
        return bool(np.all((z >= self.z_lo) & (z <= self.z_hi)))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def make_breakpoints(K: int, z_max: float = DEFAULT_Z_MAX) -> Breakpoints:
    """Uniform grid of ``K + 1`` points from ``Phi(1)`` to ``z_max`` inclusive."""
    if int(K) != K or K < 1:
        raise DomainError(f"segment count K must be a positive integer, got {K}")
    if not (PHI_1 < z_max <= _Z_CAP):
        raise DomainError(f"z_max must lie in (Phi(1), 1 - 1e-9], got {z_max}")
    grid = np.linspace(PHI_1, z_max, int(K) + 1)
    grid[0], grid[-1] = PHI_1, z_max
    return Breakpoints(_frozen(grid))


def secant_coeffs(bp: Breakpoints) -> PiecewiseAffine:
    xi = bp.grid
    f = np.array([log_quantile(p)[0] for p in xi])
    width = xi[1:] - xi[:-1]
    slopes = (f[1:] - f[:-1]) / width
    intercepts = (xi[1:] * f[:-1] - xi[:-1] * f[1:]) / width
    return PiecewiseAffine("secant", _frozen(slopes), _frozen(intercepts), float(xi[0]), float(xi[-1]), xi)


def tangent_coeffs(points, domain: tuple[float, float] | None = None) -> PiecewiseAffine:
    """Tangent lines of ``log quantile`` at each of ``points``.

    ``domain`` defaults to ``[Phi(1), max(points)]``.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.ndim != 1 or len(pts) == 0:
        raise DomainError("tangent_coeffs needs a non-empty vector of points")
    if np.any(np.diff(pts) <= 0):
        raise DomainError("tangent points must be strictly increasing")
    vals = [log_quantile(p) for p in pts]  # raises for points <= 0.5
    f = np.array([v[0] for v in vals])
    slopes = np.array([v[1] for v in vals])
    intercepts = -slopes * pts + f
    lo, hi = domain if domain is not None else (min(PHI_1, pts[0]), pts[-1])
    return PiecewiseAffine("tangent", _frozen(slopes), _frozen(intercepts), float(lo), float(hi), _frozen(pts))


def approximation(kind: str, K: int, z_max: float = DEFAULT_Z_MAX) -> PiecewiseAffine:
    """Secant or tangent approximation on the shared uniform grid.

    The tangent variant touches at every one of the ``K + 1`` grid nodes.
    """
    bp = make_breakpoints(K, z_max)
    if kind == "secant":
        return secant_coeffs(bp)
    if kind == "tangent":
        return tangent_coeffs(bp.grid, domain=(PHI_1, z_max))
    raise DomainError(f"unknown approximation kind {kind!r}")


def eval_pwa(pwa: PiecewiseAffine, z, extrapolate: bool = False):
    """Evaluate ``max_k (slope_k z + intercept_k)``.

    Points outside ``[z_lo, z_hi]`` raise unless ``extrapolate`` is set, in
    which case the outermost pieces are extended; callers can test
    ``pwa.contains(z)`` to flag such evaluations.
    """
    z_arr = np.asarray(z, dtype=float)
    if not extrapolate and not pwa.contains(z_arr):
        raise DomainError(f"z outside approximation domain [{pwa.z_lo}, {pwa.z_hi}]")
    vals = np.multiply.outer(z_arr, pwa.slopes) + pwa.intercepts
    out = vals.max(axis=-1)
    return float(out) if out.ndim == 0 else out


def active_piece(pwa: PiecewiseAffine, z: float) -> int:
    return int(np.argmax(pwa.slopes * z + pwa.intercepts))
