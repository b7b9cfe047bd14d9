"""Studentized step-correlation statistics and the termination estimate.

Variance estimation from the full least-squares fit, chi-squared tail
thresholds, tail-sum statistics over path steps, and the stopping rule that
estimates how many steps carry signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq
from scipy.special import gammaincc, ndtri

from .exceptions import InvalidTail
from .linalg import ProjectionBasis, append_innovation, project
from .path import LarPath, StandardizedData

Vector = NDArray[np.float64]


def full_column_basis(data: StandardizedData) -> ProjectionBasis:
    """Orthonormal basis of the full column space of the design."""
    basis = ProjectionBasis.empty(data.n)
    for j in range(data.p):
        basis, _ = append_innovation(basis, data.X[:, j], j)
    return basis


def sigma_hat(
    data: StandardizedData,
    y_raw: Vector,
    basis: ProjectionBasis | None = None,
) -> float:
    """Residual-scale estimate sqrt(RSS / (n - p)) of the full fit.

    ``y_raw`` is the response in original units with the same centering as
    ``data.y`` (i.e. ``data.y * data.response_scale``).  The projection onto
    the column space is invariant to column scaling, so the standardized
    design is used directly.
    """
    y = np.asarray(y_raw, dtype=np.float64)
    if basis is None:
        basis = full_column_basis(data)
    resid = y - project(basis, y)
    return math.sqrt(float(resid @ resid) / (data.n - data.p))


def chi2_upper_quantile(df: int, tail: float) -> float:
    """Value q with upper chi-squared tail probability equal to ``tail``.

    Computed by bracketed monotone inversion of the regularized upper
    incomplete gamma function; the initial bracket comes from the
    Wilson-Hilferty normal approximation.  Absolute accuracy <= 1e-8.
    """
    if not 0.0 < tail < 1.0:
        raise InvalidTail(f"tail must be in (0, 1), got {tail}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")

    def excess(q: float) -> float:
        return float(gammaincc(df / 2.0, q / 2.0)) - tail

    z = float(ndtri(1.0 - tail))
    guess = df * max(1e-3, 1.0 - 2.0 / (9.0 * df) + z * math.sqrt(2.0 / (9.0 * df))) ** 3
    lo = guess
    while excess(lo) <= 0.0:
        lo /= 2.0
        if lo < 1e-300:
            return 0.0
    hi = max(guess, lo * 2.0)
    while excess(hi) >= 0.0:
        hi *= 2.0
    return float(brentq(excess, lo, hi, xtol=1e-10, rtol=8.9e-16))


def chi2_thresholds(p: int, n: int) -> Vector:
    """Upper 1/n chi-squared quantiles with p-k+1 degrees of freedom, k=1..p."""
    return np.array([chi2_upper_quantile(p - k + 1, 1.0 / n) for k in range(1, p + 1)])


def tail_sums(path: LarPath, sigma: float, n: int) -> tuple[Vector, Vector]:
    """Per-step statistics W and their tail sums S over a full sample path."""
    increments = path.inv_angle_sq_increments
    W = n * increments * path.correlations**2 / sigma**2
    S = W[::-1].cumsum()[::-1]
    return W, S


def estimate_m(S: Vector, thresholds: Vector) -> int:
    """Largest prefix length over which tail sums strictly exceed thresholds.

    Returns 0 when the first tail sum does not exceed its threshold; equality
    counts as failure.
    """
    S = np.asarray(S, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if S.shape != thresholds.shape:
        raise ValueError("S and thresholds must have equal length")
    exceeds = S > thresholds
    if not exceeds[0]:
        return 0
    below = np.flatnonzero(~exceeds)
    return int(below[0]) if below.size else S.shape[0]


def studentized_T(
    path: LarPath, centers: Vector, sigma: float, n: int
) -> Vector:
    """Studentized step-correlation statistics relative to given centers."""
    centers = np.asarray(centers, dtype=np.float64)
    k = len(path.steps)
    if centers.shape[0] != k:
        raise ValueError(f"need {k} centers, got {centers.shape[0]}")
    scale = np.sqrt(path.inv_angle_sq_increments)
    return path.signs * scale * math.sqrt(n) * (path.correlations - centers) / sigma


@dataclass(frozen=True)
class InferenceReport:
    sigma_hat: float
    W: Vector
    S: Vector
    thresholds: Vector
    m_bar: int
    T_hat: Vector


def build_inference_report(
    data: StandardizedData,
    path: LarPath,
    centers: Vector | None = None,
    basis: ProjectionBasis | None = None,
) -> InferenceReport:
    """Full inference summary for a sample path.

    When ``centers`` is omitted the studentized statistics are centered at
    the thresholded correlations (observed values up to the estimated
    termination step, zero beyond).
    """
    sigma = sigma_hat(data, data.y * data.response_scale, basis)
    W, S = tail_sums(path, sigma, data.n)
    thresholds = chi2_thresholds(data.p, data.n)
    m_bar = estimate_m(S, thresholds)
    if centers is None:
        centers = np.where(np.arange(1, len(path.steps) + 1) <= m_bar,
                           path.correlations, 0.0)
    T_hat = studentized_T(path, centers, sigma, data.n)
    return InferenceReport(sigma, W, S, thresholds, m_bar, T_hat)
