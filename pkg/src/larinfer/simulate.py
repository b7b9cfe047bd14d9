"""Scenario generation, coverage studies, the mid-path tie demonstration,
and the asymptotic coefficient-covariance oracle.

Scenario designs are drawn from an AR(1)-correlated Gaussian model and
accepted only when the population path admits exactly one variable per step
for m steps and clears the requested margin; replications then add fresh
standard-normal noise and run the full inference pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .bootstrap import BootstrapConfig, bootstrap_intervals
from .exceptions import DegenerateResponse, NotPrototypical, RejectionBudgetExceeded
from .inference import chi2_thresholds, estimate_m, full_column_basis, sigma_hat, tail_sums
from .path import (
    LarPath,
    StandardizedData,
    equiangular,
    lar_path,
    margins,
    standardize,
)

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    p: int
    m: int
    delta0: float
    rho: float = 0.5
    beta_range: float = 2.0
    reps: int = 200
    boot_draws: int = 200
    seed: int = 0
    alpha: float = 0.05
    rejection_cap: int = 10_000
    threads: int = 1

    def __post_init__(self):
        if not (1 <= self.m <= self.p < self.n):
            raise ValueError(f"need m <= p < n, got m={self.m}, p={self.p}, n={self.n}")
        if self.delta0 <= 0.0:
            raise ValueError(f"delta0 must be positive, got {self.delta0}")


def ar1_covariance(p: int, rho: float) -> Matrix:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


@dataclass(frozen=True)
class ScenarioDraw:
    data: StandardizedData
    mu: Vector  # population response on the standardized scale
    beta: Vector  # raw-design coefficients that generated the mean
    pop_path: LarPath
    delta: float


def generate_scenario(spec: ScenarioSpec, rng: np.random.Generator) -> ScenarioDraw:
    """Rejection-sample a design and mean satisfying the margin constraint."""
    chol = np.linalg.cholesky(ar1_covariance(spec.p, spec.rho))
    for _ in range(spec.rejection_cap):
        X_n = rng.standard_normal((spec.n, spec.p)) @ chol.T
        support = rng.choice(spec.p, spec.m, replace=False)
        beta = np.zeros(spec.p)
        beta[support] = rng.uniform(-spec.beta_range, spec.beta_range, spec.m)
        mu_n = X_n @ beta
        try:
            data = standardize(X_n, mu_n, center=True)
        except DegenerateResponse:
            continue
        mu = data.y
        pop_path = lar_path(data, mu, zero_tol=1e-10, kind="population")
        if pop_path.tie_steps or pop_path.terminated_at != spec.m:
            continue
        try:
            report = margins(pop_path, data, mu)
        except NotPrototypical:
            continue
        if report.delta >= spec.delta0:
            return ScenarioDraw(data, mu, beta, pop_path, report.delta)
    raise RejectionBudgetExceeded(
        f"no acceptable design within {spec.rejection_cap} attempts"
    )


@dataclass(frozen=True)
class CoverageResult:
    corr_coverage: float
    coef_coverage: float
    m_correct: float
    terminal_coverage: float
    zero_step_coverage: float  # coverage of the zero targets at steps k > m
    reps_evaluated: int


def run_coverage(
    spec: ScenarioSpec,
    naive: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> CoverageResult:
    """Coverage study over fresh-noise replications of one accepted scenario.

    ``naive`` recenters the bootstrap on the full least-squares fit instead
    of the truncated projection, demonstrating its failure on the zero
    targets beyond the true termination step.
    """
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    draw = generate_scenario(spec, rng)
    data, mu, pop = draw.data, draw.mu, draw.pop_path
    n, p, m = spec.n, spec.p, spec.m
    basis = full_column_basis(data)
    thresholds = chi2_thresholds(p, n)
    target_C = np.zeros(p)
    target_C[:m] = pop.correlations
    # population step coefficients; constant at the terminal value beyond m
    target_b = np.vstack([pop.coefficients, np.tile(pop.coefficients[-1], (p - m, 1))])

    corr_cov: list[float] = []
    coef_cov: list[float] = []
    term_cov: list[float] = []
    zero_cov: list[float] = []
    m_hits = 0
    evaluated = 0
    for i in range(spec.reps):
        noise_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1, i]))
        eps = noise_rng.standard_normal(n)
        d = data.with_response(data.y * data.response_scale + eps)
        path = lar_path(d, d.y, zero_tol=0.0, kind="sample")
        sigma = sigma_hat(d, d.y * d.response_scale, basis)
        _, S = tail_sums(path, sigma, n)
        m_bar = estimate_m(S, thresholds)
        m_hits += m_bar == m
        if m_bar == 0:
            continue
        evaluated += 1
        boot_seed = int(np.random.SeedSequence([spec.seed, 2, i]).generate_state(1)[0])
        cfg = BootstrapConfig(
            draws=spec.boot_draws, alpha=spec.alpha, seed=boot_seed,
            parallel=spec.threads > 1, threads=spec.threads,
        )
        iv = bootstrap_intervals(d, path, m_bar, cfg, basis=basis, naive=naive)
        corr = iv.correlation_intervals
        hits = [
            corr[k - 1, 0] <= target_C[k - 1] <= corr[k - 1, 1]
            for k in range(1, m_bar + 1)
        ]
        corr_cov.append(float(np.mean(hits)))
        cells = list(iv.coefficient_intervals.items())
        coef_hits = [
            lo <= target_b[k - 1, j] <= hi for (k, j), (lo, hi) in cells
        ]
        coef_cov.append(float(np.mean(coef_hits)))
        term_hits = [
            lo <= target_b[m - 1, j] <= hi
            for (k, j), (lo, hi) in cells
            if k == m_bar
        ]
        term_cov.append(float(np.mean(term_hits)))
        if m < p:
            zero_hits = [
                corr[k - 1, 0] <= 0.0 <= corr[k - 1, 1] for k in range(m + 1, p + 1)
            ]
            zero_cov.append(float(np.mean(zero_hits)))
        if progress is not None:
            progress(i + 1, spec.reps)

    def _mean(xs: list[float]) -> float:
        return float(np.mean(xs)) if xs else math.nan

    return CoverageResult(
        _mean(corr_cov),
        _mean(coef_cov),
        m_hits / spec.reps,
        _mean(term_cov),
        _mean(zero_cov),
        evaluated,
    )


@dataclass(frozen=True)
class TieDemoResult:
    correlations: Matrix  # reps x 4 sample step correlations
    second_entrants: NDArray[np.int64]  # step-2 entrant per draw
    population_path: LarPath
    data: StandardizedData
    mu: Vector


def tie_demo(n: int, reps: int, rng: np.random.Generator) -> TieDemoResult:
    """Construction with a deliberate population tie at step 2.

    The mean points along the first column plus the equiangular vector of
    the first three columns of a strongly AR(1)-correlated design, so the
    second and third variables tie for entry at population step 2.  Noisy
    draws resolve the tie either way, splitting the later step correlations
    into two clusters.
    """
    p = 4
    chol = np.linalg.cholesky(ar1_covariance(p, 0.9))
    X_n = rng.standard_normal((n, p)) @ chol.T
    data = standardize(X_n, np.ones(n), center=False)
    X = data.X
    a3, _ = equiangular(X[:, :3])
    mu = X[:, 0] + a3
    pop = lar_path(data, mu, zero_tol=1e-10, kind="population")
    corr = np.zeros((reps, p))
    second = np.zeros(reps, dtype=np.int64)
    root_n = math.sqrt(n)
    for r in range(reps):
        y = mu + rng.standard_normal(n) / root_n
        path = lar_path(data, y, zero_tol=0.0, kind="sample")
        corr[r] = path.correlations
        second[r] = path.entrants[1]
    return TieDemoResult(corr, second, pop, data, mu)


@dataclass(frozen=True)
class AsymptoticCoefCov:
    blocks: dict[tuple[int, int], Matrix]  # (k, k') -> k x k' block, k <= k'
    lambdas: Vector
    R: Matrix
    signs: Vector
    sigma: float
    matrix: Matrix  # assembled m(m+1)/2-dimensional covariance


def asymptotic_coef_cov(
    R: Matrix, order: list[int], signs: Vector, sigma: float
) -> AsymptoticCoefCov:
    """Limiting covariance blocks of the scaled step-coefficient errors.

    Block (k, k') is the covariance between the active-set restrictions of
    the step-k and step-k' coefficient deviations, in entry order.  The
    terminal step has lambda = 0, so its variance block is the plain
    least-squares covariance on the final active set.
    """
    R = np.asarray(R, dtype=np.float64)
    s = np.asarray(signs, dtype=np.float64)
    m = len(order)
    actives = [list(order[:k]) for k in range(1, m + 1)]
    grams = [R[np.ix_(a, a)] for a in actives]
    lambdas = np.zeros(m)
    for k in range(1, m):
        j_next = order[k]
        row = R[j_next, actives[k - 1]]
        denom = 1.0 - s[k] * float(row @ np.linalg.solve(grams[k - 1], s[:k]))
        lambdas[k - 1] = s[k] / denom

    blocks: dict[tuple[int, int], Matrix] = {}
    for k in range(1, m + 1):
        Gk = grams[k - 1]
        sk = s[:k]
        if k < m:
            j_next = order[k]
            row = R[j_next, actives[k - 1]]
            cond_var = float(R[j_next, j_next] - row @ np.linalg.solve(Gk, row))
            inner = Gk + lambdas[k - 1] ** 2 * cond_var * np.outer(sk, sk)
        else:
            inner = Gk
        half = np.linalg.solve(Gk, inner)
        blocks[(k, k)] = sigma**2 * np.linalg.solve(Gk, half.T).T
        for kp in range(k + 1, m + 1):
            Gkp = grams[kp - 1]
            cross = R[np.ix_(actives[k - 1], actives[kp - 1])]
            j_next = order[k]
            row_kp = R[j_next, actives[kp - 1]]
            row_k = R[j_next, actives[k - 1]]
            cond_row = row_kp - row_k @ np.linalg.solve(Gk, cross)
            inner_c = cross - lambdas[k - 1] * np.outer(sk, cond_row)
            half_c = np.linalg.solve(Gk, inner_c)
            blocks[(k, kp)] = sigma**2 * np.linalg.solve(Gkp, half_c.T).T

    dim = m * (m + 1) // 2
    offsets = np.concatenate([[0], np.cumsum(np.arange(1, m + 1))])
    full = np.zeros((dim, dim))
    for k in range(1, m + 1):
        for kp in range(k, m + 1):
            block = blocks[(k, kp)]
            full[offsets[k - 1] : offsets[k], offsets[kp - 1] : offsets[kp]] = block
            if kp != k:
                full[offsets[kp - 1] : offsets[kp], offsets[k - 1] : offsets[k]] = block.T
    return AsymptoticCoefCov(blocks, lambdas, R, s, sigma, full)
