import math

import numpy as np
import pytest
from helpers import orthonormal_design

from larinfer.bootstrap import ols_on_active
from larinfer.exceptions import RejectionBudgetExceeded
from larinfer.path import lar_path, margins, standardize
from larinfer.simulate import (
    ScenarioSpec,
    ar1_covariance,
    asymptotic_coef_cov,
    generate_scenario,
    run_coverage,
    tie_demo,
)


class TestScenarioSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ScenarioSpec(n=10, p=10, m=3, delta0=0.1)  # p must be < n
        with pytest.raises(ValueError):
            ScenarioSpec(n=50, p=5, m=6, delta0=0.1)  # m must be <= p
        with pytest.raises(ValueError):
            ScenarioSpec(n=50, p=5, m=2, delta0=0.0)


class TestAr1Covariance:
    def test_entries(self):
        S = ar1_covariance(3, 0.5)
        assert np.allclose(S, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]], atol=0)

    def test_sampled_moments_match(self):
        rng = np.random.default_rng(0)
        S = ar1_covariance(6, 0.7)
        chol = np.linalg.cholesky(S)
        Z = rng.standard_normal((10_000, 6)) @ chol.T
        emp = Z.T @ Z / 10_000
        assert np.max(np.abs(emp - S)) <= 0.05


class TestGenerateScenario:
    def test_postconditions(self):
        spec = ScenarioSpec(n=200, p=20, m=3, delta0=0.2, seed=0)
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
        draw = generate_scenario(spec, rng)
        assert draw.pop_path.terminated_at == spec.m
        assert len(draw.pop_path.steps) == spec.m
        assert not draw.pop_path.tie_steps
        assert draw.delta >= spec.delta0
        assert np.count_nonzero(draw.beta) == spec.m
        # recompute the margin from scratch on the returned design
        fresh = lar_path(draw.data, draw.mu, zero_tol=1e-10, kind="population")
        assert fresh.entrants == draw.pop_path.entrants
        report = margins(fresh, draw.data, draw.mu)
        assert report.delta == pytest.approx(draw.delta, rel=1e-12)
        assert not report.vacuous

    def test_budget_exceeded_on_impossible_margin(self):
        spec = ScenarioSpec(n=40, p=4, m=2, delta0=1e6, rejection_cap=25, seed=1)
        rng = np.random.default_rng(2)
        with pytest.raises(RejectionBudgetExceeded):
            generate_scenario(spec, rng)


class TestRunCoverage:
    def test_serial_parallel_reproducible(self):
        base = dict(n=120, p=6, m=2, delta0=0.05, reps=3, boot_draws=50, seed=5)
        serial = run_coverage(ScenarioSpec(**base, threads=1))
        threaded = run_coverage(ScenarioSpec(**base, threads=4))
        assert serial == threaded
        assert serial.reps_evaluated <= 3
        for value in (serial.corr_coverage, serial.coef_coverage):
            if not math.isnan(value):
                assert 0.0 <= value <= 1.0


class TestTieDemo:
    def test_population_tie_and_bimodal_resolution(self):
        rng = np.random.default_rng(7)
        result = tie_demo(n=400, reps=400, rng=rng)
        pop = result.population_path
        assert pop.entrants[0] == 0
        assert 2 in pop.tie_steps
        assert set(np.unique(result.second_entrants)) <= {1, 2}
        share_1 = float(np.mean(result.second_entrants == 1))
        assert 0.1 <= share_1 <= 0.9
        # the two tie resolutions leave distinct step-3 correlation clusters
        c3_a = result.correlations[result.second_entrants == 1, 2]
        c3_b = result.correlations[result.second_entrants == 2, 2]
        assert abs(c3_a.mean() - c3_b.mean()) > 2 * (c3_a.std() + c3_b.std()) / math.sqrt(
            min(len(c3_a), len(c3_b))
        )


class TestAsymptoticCoefCov:
    def test_single_full_step_is_plain_variance(self):
        out = asymptotic_coef_cov(np.eye(1), [0], np.array([1.0]), 1.7)
        assert out.matrix.shape == (1, 1)
        assert out.matrix[0, 0] == pytest.approx(1.7**2, rel=1e-12)

    def test_terminal_block_is_least_squares_covariance(self):
        rng = np.random.default_rng(8)
        A = rng.standard_normal((20, 4))
        R = A.T @ A / 20
        d = np.sqrt(np.diag(R))
        R = R / np.outer(d, d)
        order = [2, 0, 3]
        signs = np.array([1.0, -1.0, 1.0])
        out = asymptotic_coef_cov(R, order, signs, 1.0)
        assert out.lambdas[-1] == 0.0
        G = R[np.ix_(order, order)]
        assert np.allclose(out.blocks[(3, 3)], np.linalg.inv(G), atol=1e-10)

    def test_assembled_matrix_is_symmetric_psd(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((30, 5))
        R = A.T @ A / 30
        d = np.sqrt(np.diag(R))
        R = R / np.outer(d, d)
        out = asymptotic_coef_cov(R, [1, 4, 0], np.array([1.0, 1.0, -1.0]), 0.9)
        assert out.matrix.shape == (6, 6)
        assert np.allclose(out.matrix, out.matrix.T, atol=1e-12)
        assert np.linalg.eigvalsh(out.matrix).min() >= -1e-8

    def test_orthonormal_closed_form(self):
        s = np.array([1.0, -1.0])
        out = asymptotic_coef_cov(np.eye(3), [0, 2], s, 1.0)
        assert out.blocks[(1, 1)][0, 0] == pytest.approx(2.0, rel=1e-12)
        assert np.allclose(out.blocks[(2, 2)], np.eye(2), atol=0)
        assert np.allclose(out.blocks[(1, 2)], [[1.0, -s[0] * s[1]]], atol=1e-12)

    def test_monte_carlo_orthonormal_design(self):
        rng = np.random.default_rng(10)
        n, p, m = 2000, 4, 2
        Q = orthonormal_design(rng, n, p)
        beta = np.array([8.0, 4.0, 0.0, 0.0])
        mu_n = Q @ beta
        data = standardize(Q, mu_n, center=False)
        mu = data.y
        pop = lar_path(data, mu, zero_tol=1e-10, kind="population")
        assert pop.entrants == [0, 1]
        target = asymptotic_coef_cov(
            np.eye(p), list(pop.entrants), np.asarray(pop.signs, dtype=float), 1.0
        )
        samples = []
        for _ in range(2500):
            d = data.with_response(mu_n + rng.standard_normal(n))
            path = lar_path(d, d.y)
            if path.entrants[:m] != pop.entrants:
                continue
            b_hat = path.coefficients.copy()
            # the terminal target is the least-squares refit on the active set
            b_hat[m - 1] = ols_on_active(d, list(path.entrants[:m]), d.y)
            z = []
            for k in range(1, m + 1):
                active = list(pop.entrants[:k])
                z.extend(
                    math.sqrt(n)
                    * (b_hat[k - 1, active] - pop.coefficients[k - 1, active])
                )
            samples.append(z)
        Z = np.asarray(samples)
        assert len(Z) >= 2400
        emp = np.cov(Z, rowvar=False)
        assert np.max(np.abs(emp - target.matrix)) <= 0.15
