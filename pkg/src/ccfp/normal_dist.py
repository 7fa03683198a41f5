"""Standard-normal numerics, dense Cholesky and reproducible Gaussian sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FactorizationError

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Rational approximation of the lower-half quantile (P. J. Acklam), relative
# error below 1.2e-9 before refinement.
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425

LOG_QUANTILE_MIN_P = 0.5 + 1e-12


def std_normal_pdf(x: float) -> float:
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF.

    Uses ``erf`` near the origin and ``erfc`` in the tails so that both tails
    keep full relative accuracy.
    """
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"std_normal_cdf needs a finite argument, got {x}")
    t = x / SQRT2
    if abs(t) < 1.0 / SQRT2:
        return 0.5 + 0.5 * math.erf(t)
    if t > 0:
        return 1.0 - 0.5 * math.erfc(t)
    return 0.5 * math.erfc(-t)


def _lower_tail_cdf(x: float) -> float:
    # Phi(x) for x <= 0 without cancellation.
    return 0.5 * math.erfc(-x / SQRT2)


def _rational_lower(p: float) -> float:
    # p in (0, 0.5]; returns the approximate quantile (<= 0).
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def std_normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF.

    A central/tail rational approximation followed by one Newton step on the
    CDF. Upper-half arguments are mapped through ``1 - p``, which is exact in
    floating point for ``p >= 0.5``.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile argument must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    upper = p > 0.5
    tail = 1.0 - p if upper else p
    x = _rational_lower(tail)
    x -= (_lower_tail_cdf(x) - tail) / std_normal_pdf(x)
    return -x if upper else x


def quantile_derivative(p: float) -> float:
    """d/dp of the quantile, ``1 / pdf(quantile(p))``."""
    return 1.0 / std_normal_pdf(std_normal_quantile(p))


def log_quantile(p: float) -> tuple[float, float]:
    """Return ``log quantile(p)`` and its derivative in ``p``.

    Only defined where the quantile is positive, i.e. ``p > 0.5``.
    """
    p = float(p)
    if not (LOG_QUANTILE_MIN_P < p < 1.0):
        raise DomainError(f"log_quantile needs p in (0.5, 1), got {p}")
    q = std_normal_quantile(p)
    return math.log(q), 1.0 / (std_normal_pdf(q) * q)


PHI_1 = std_normal_cdf(1.0)


@dataclass(frozen=True)
class CholeskyFactor:
    dim: int
    lower_triangular: np.ndarray

    @property
    def pivots(self) -> np.ndarray:
        """Schur-complement pivots, the squares of the diagonal of L."""
        return np.diag(self.lower_triangular) ** 2


def cholesky(matrix, min_pivot: float = 0.0, sym_tol: float = 1e-12) -> CholeskyFactor:
    """Dense Cholesky factorization ``matrix = L L^T``.

    Raises :class:`FactorizationError` naming the first pivot that is not
    strictly greater than ``min_pivot``.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DomainError(f"cholesky needs a non-empty square matrix, got shape {a.shape}")
    scale = 1.0 + np.max(np.abs(a))
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise DomainError("cholesky needs a symmetric matrix")
    n = a.shape[0]
    low = np.zeros_like(a)
    for k in range(n):
        pivot = a[k, k] - low[k, :k] @ low[k, :k]
        if not pivot > min_pivot:
            raise FactorizationError(k + 1, float(pivot))
        low[k, k] = math.sqrt(pivot)
        for i in range(k + 1, n):
            low[i, k] = (a[i, k] - low[i, :k] @ low[k, :k]) / low[k, k]
    low.setflags(write=False)
    return CholeskyFactor(n, low)


def make_generator(seed: int, *spawn_key: int) -> np.random.Generator:
    """Philox counter-based generator keyed by a 64-bit seed and optional sub-stream ids."""
    seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(seq))


def sample_gaussian(mean, factor: CholeskyFactor, count: int, seed: int, *spawn_key: int) -> np.ndarray:
    """Draw ``count`` samples of N(mean, L L^T) as a ``(count, dim)`` array."""
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (factor.dim,):
        raise DomainError(f"mean has shape {mean.shape}, factor has dimension {factor.dim}")
    if count < 1:
        raise DomainError("count must be positive")
    rng = make_generator(seed, *spawn_key)
    white = rng.standard_normal((int(count), factor.dim))
    return mean + white @ factor.lower_triangular.T
