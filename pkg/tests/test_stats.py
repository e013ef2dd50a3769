from fractions import Fraction

import numpy as np
import pytest

from nonconv.ordering import PolyFamily
from nonconv.polyalg import parse_poly
from nonconv.process import BaseM, FiniteMarkov
from nonconv.stats import (RunConfig, coboundary_flag, estimate_covariance,
                           functional_gaussianity, gaussianity_test,
                           moment_growth_audit, sample_paths, slln_audit,
                           theoretical_covariance)
from nonconv.sums import TensorTable, indicator_product

P_STAY = ((Fraction(9, 10), Fraction(1, 10)), (Fraction(1, 10), Fraction(9, 10)))


def fam(*texts):
    return PolyFamily([parse_poly(t) for t in texts])


def base_cfg(**kw):
    defaults = dict(family=fam("n", "n+N", "n^2"),
                    observable=indicator_product([2, 2, 2], [[1], [1], [1]]),
                    model=BaseM(2), N=2048, reps=300, seed=99, centered=True)
    defaults.update(kw)
    return RunConfig(**defaults)


class TestSlln:
    def test_constant_observable_exact(self):
        cfg = base_cfg(observable=TensorTable(np.full((2, 2, 2), 0.7)), N=500)
        res = slln_audit(cfg)
        assert res.mean == pytest.approx(0.7, abs=1e-12)
        assert res.passed

    def test_indicator_tracks_product_mean(self):
        res = slln_audit(base_cfg(N=60000))
        assert res.bar_F == pytest.approx(0.125)
        assert res.passed

    def test_markov_family(self):
        cfg = base_cfg(family=fam("n", "n+N"),
                       observable=indicator_product([2, 2], [[1], [1]]),
                       model=FiniteMarkov(P=P_STAY, f=(0, 1)), N=20000)
        res = slln_audit(cfg)
        assert res.bar_F == pytest.approx(0.25)
        assert res.passed


class TestMomentAudit:
    def test_zero_observable(self):
        cfg = base_cfg(observable=TensorTable(np.zeros((2, 2, 2))), reps=50)
        audit = moment_growth_audit(cfg, [256, 512], bootstrap=50)
        for row in audit.rows:
            assert row.sum_abs_mean == 0 and row.var_ratio == 0 and row.m4_ratio == 0
        assert audit.bounded

    def test_iid_single_poly_variance(self):
        # ell = 1, q = n: independent summands, Var/N = Var F exactly in law
        cfg = base_cfg(family=fam("n"), observable=indicator_product([2], [[1]]),
                       reps=400)
        audit = moment_growth_audit(cfg, [4096], bootstrap=80)
        row = audit.rows[0]
        assert abs(row.var_ratio - 0.25) <= 4 * row.var_ratio_se

    def test_bounded_verdict_on_pipeline(self):
        audit = moment_growth_audit(base_cfg(reps=200), [512, 1024, 2048],
                                    bootstrap=80)
        assert audit.bounded


class TestCovariance:
    def test_iid_min_ts_structure(self):
        cfg = base_cfg(family=fam("n^2"), observable=indicator_product([2], [[1]]),
                       reps=600, N=4096, time_grid=(0.0, 0.25, 0.5, 0.75, 1.0))
        cov = estimate_covariance(cfg)
        assert np.allclose(cov.b_hat, cov.b_hat.T)
        assert np.allclose(cov.b_hat[0], 0.0)  # b_hat(0, .) = 0
        for a, t in enumerate(cfg.time_grid):
            for b, s in enumerate(cfg.time_grid):
                se = max(cov.stderr[a, b], 1e-6)
                assert abs(cov.b_hat[a, b] - min(t, s) * 0.25) <= 4 * se

    def test_reps_gate(self):
        with pytest.raises(ValueError):
            estimate_covariance(base_cfg(reps=50))


class TestTheoreticalCovariance:
    def test_diagonal_quarter_t(self):
        theo = theoretical_covariance(fam("n^2"), _centered_indicator(),
                                      BaseM(2), "diagonal",
                                      grid=(0.25, 0.5, 0.75, 1.0), scan_N=1024)
        for a, t in enumerate((0.25, 0.5, 0.75, 1.0)):
            assert theo[a, a] == pytest.approx(t / 4, abs=0.01)

    def test_zero_observable(self):
        theo = theoretical_covariance(fam("n^2"), TensorTable(np.zeros(2)),
                                      BaseM(2), "diagonal", grid=(1.0,),
                                      scan_N=512)
        assert theo[0, 0] == pytest.approx(0.0)

    def test_equivalent_pair_matches_monte_carlo(self):
        family = fam("n^2", "n^2+2n+1")
        obs = indicator_product([2, 2], [[1], [1]])
        cfg = RunConfig(family=family, observable=obs, model=BaseM(2), N=4096,
                        reps=1500, seed=17, centered=True, time_grid=(1.0,))
        cov = estimate_covariance(cfg)
        theo = theoretical_covariance(family, cfg.effective_observable(),
                                      BaseM(2), "equivalent", grid=(1.0,),
                                      scan_N=1024)
        assert abs(cov.D2_hat - theo[0, 0]) <= 3 * cov.stderr[0, 0]

    def test_equivalent_mode_requires_integer_shift(self):
        with pytest.raises(ValueError):
            theoretical_covariance(fam("n^2+n", "n^2"), _centered_indicator(2),
                                   BaseM(2), "equivalent", scan_N=512)


def _centered_indicator(ell: int = 1):
    obs = indicator_product([2] * ell, [[1]] * ell)
    return TensorTable(obs.table - 0.5 ** ell)


class TestGaussianity:
    def test_normal_oracle_passes(self):
        rng = np.random.default_rng(5)
        samples = rng.standard_normal(2000)
        assert gaussianity_test(samples).passed

    def test_shifted_mean_fails(self):
        rng = np.random.default_rng(6)
        samples = rng.standard_normal(2000)
        res = gaussianity_test(samples, mean=5.0, var=1.0)
        assert not res.passed

    def test_degenerate_reported(self):
        res = gaussianity_test(np.zeros(500))
        assert res.degenerate and res.passed

    def test_functional_on_gaussian_process(self):
        rng = np.random.default_rng(7)
        cov = np.array([[1.0, 0.5], [0.5, 2.0]])
        L = np.linalg.cholesky(cov)
        S = rng.standard_normal((1500, 2)) @ L.T
        res = functional_gaussianity(S, cov, seed=3)
        assert res.passed

    def test_sample_size_gate(self):
        with pytest.raises(ValueError):
            gaussianity_test(np.zeros(100))


class TestCoboundaryFlag:
    def test_zero_observable_bounded(self):
        cfg = base_cfg(observable=TensorTable(np.zeros((2, 2, 2))), reps=40)
        flag = coboundary_flag(cfg, [128, 256, 512], bootstrap=40)
        assert flag.bounded_verdict

    def test_iid_growth_detected(self):
        cfg = base_cfg(family=fam("n"), observable=indicator_product([2], [[1]]),
                       reps=400)
        flag = coboundary_flag(cfg, [256, 1024, 4096], bootstrap=100)
        assert not flag.bounded_verdict
        assert flag.slope > 0


class TestDeterminism:
    def test_paths_reproducible(self):
        a = sample_paths(base_cfg(reps=20))
        b = sample_paths(base_cfg(reps=20))
        assert np.array_equal(a, b)

    def test_thread_count_invariance(self):
        a = sample_paths(base_cfg(reps=16, threads=1))
        b = sample_paths(base_cfg(reps=16, threads=4))
        assert np.array_equal(a, b)
