import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy import stats as sps

from nonconv.process import (BaseM, CapabilityError, ContinuedFraction,
                             FiniteMarkov, build_markov, cf_digit_probability,
                             cf_digits, generate, mixing_profile, stationary_law)

P_STAY = ((Fraction(9, 10), Fraction(1, 10)), (Fraction(1, 10), Fraction(9, 10)))


class TestBuildMarkov:
    def test_two_state(self):
        md = build_markov(P_STAY, [0, 1])
        assert md.pi == (Fraction(1, 2), Fraction(1, 2))
        assert md.dobrushin == Fraction(4, 5)
        assert md.profile.C == 2.0 and md.profile.lam == 0.8

    def test_iid_rows(self):
        md = build_markov([[0.5, 0.5], [0.5, 0.5]], [0, 1])
        assert md.dobrushin == 0
        assert md.profile.phi_bound(1) == 0.0

    def test_reducible_rejected(self):
        with pytest.raises(ValueError):
            build_markov([[1, 0], [0, 1]], [0, 1])

    def test_periodic_rejected(self):
        with pytest.raises(ValueError):
            build_markov([[0, 1], [1, 0]], [0, 1])

    def test_nonstochastic_rejected(self):
        with pytest.raises(ValueError):
            build_markov([[Fraction(1, 2), Fraction(1, 3)],
                          [Fraction(1, 2), Fraction(1, 2)]], [0, 1])

    def test_joint_law_marginals(self):
        md = build_markov(P_STAY, [0, 1])
        for k in (0, 1, 5):
            jl = md.joint(k)
            total = sum(sum(row) for row in jl.table)
            assert total == 1
            row_marg = [sum(row) for row in jl.table]
            assert row_marg == [Fraction(1, 2), Fraction(1, 2)]
        # lag 0 concentrates on the diagonal
        jl0 = md.joint(0)
        assert jl0.table[0][1] == 0 and jl0.table[1][0] == 0

    def test_certificate_dominates_exact_covariances(self):
        # |Cov(f(Y_0), g(Y_n))| <= phi_bound(n) ||f||inf ||g||inf, exactly,
        # for all +-1-valued f, g and n <= 30
        md = build_markov(P_STAY, [0, 1])
        d = 2
        for n in range(1, 31):
            jl = md.joint(n)
            bound = Fraction(2) * Fraction(4, 5) ** n
            for f_vals in product((-1, 1), repeat=d):
                for g_vals in product((-1, 1), repeat=d):
                    cov = sum(
                        Fraction(f_vals[i]) * g_vals[j] *
                        (jl.table[i][j] - Fraction(1, 2) * Fraction(1, 2))
                        for i in range(d) for j in range(d))
                    assert abs(cov) <= bound


class TestGenerate:
    def test_base2_frequency(self):
        digits = generate(BaseM(2), 10 ** 5, seed=42)
        assert abs(digits.mean() - 0.5) <= 3.0 / math.sqrt(10 ** 5)

    def test_sparse_consistency(self):
        prefix = generate(BaseM(2), 64, seed=42)
        sparse = generate(BaseM(2), np.array([5, 10 ** 9], dtype=np.uint64), seed=42)
        assert sparse[0] == prefix[5]

    def test_markov_transition_frequency(self):
        mk = FiniteMarkov(P=P_STAY, f=(0, 1))
        path = generate(mk, 100_000, seed=7)
        stay = float(np.mean(path[1:] == path[:-1]))
        se = math.sqrt(0.9 * 0.1 / 100_000)
        assert abs(stay - 0.9) <= 3 * se

    def test_sparse_rejected_for_path_models(self):
        mk = FiniteMarkov(P=P_STAY, f=(0, 1))
        with pytest.raises(CapabilityError):
            generate(mk, np.array([3, 5], dtype=np.uint64), seed=0)

    def test_reproducible_and_order_free(self):
        a = generate(BaseM(3), 1000, seed=11)
        b = generate(BaseM(3), 1000, seed=11)
        assert np.array_equal(a, b)
        idx = np.array([999, 3, 500], dtype=np.uint64)
        c = generate(BaseM(3), idx, seed=11)
        assert np.array_equal(c, a[idx.astype(int)])

    def test_stationarity_chi_square(self):
        # one-dimensional marginal at several positions, 1% level
        reps = 400
        positions = (0, 1000, 5000)
        counts = {p: np.zeros(2) for p in positions}
        for r in range(reps):
            draws = generate(BaseM(2), np.array(positions, dtype=np.uint64),
                             seed=900 + r)
            for p, v in zip(positions, draws):
                counts[p][int(v)] += 1
        for p in positions:
            stat, pvalue = sps.chisquare(counts[p])
            assert pvalue > 0.01

    def test_markov_stationarity(self):
        mk = FiniteMarkov(P=P_STAY, f=(0, 1))
        reps = 300
        counts = {0: np.zeros(2), 50: np.zeros(2), 500: np.zeros(2)}
        for r in range(reps):
            path = generate(mk, 501, seed=4000 + r)
            for p in counts:
                counts[p][int(path[p])] += 1
        for p, cnt in counts.items():
            _, pvalue = sps.chisquare(cnt)
            assert pvalue > 0.01


class TestContinuedFraction:
    def test_first_digit_law(self):
        reps = 3000
        counts = {}
        for s in range(reps):
            d, _ = cf_digits(1, seed=s)
            counts[d[0]] = counts.get(d[0], 0) + 1
        for k in (1, 2):
            p = cf_digit_probability(k)
            se = math.sqrt(p * (1 - p) / reps)
            assert abs(counts.get(k, 0) / reps - p) <= 3 * se

    def test_known_probabilities(self):
        assert abs(cf_digit_probability(1) - 0.41504) < 1e-5
        assert abs(cf_digit_probability(2) - 0.16993) < 1e-5

    def test_precision_doubling_invariance(self):
        for seed in (1, 22, 333):
            d1, meta = cf_digits(25, seed=seed)
            d2, _ = cf_digits(25, seed=seed, precision=2 * meta.working_bits)
            assert d1 == d2

    def test_prefix_generation_buckets(self):
        model = ContinuedFraction(digit_cap=5)
        vals = generate(model, 50, seed=3)
        assert vals.min() >= 0 and vals.max() <= 5

    def test_prefix_cap(self):
        model = ContinuedFraction(digit_cap=5, max_prefix=100)
        with pytest.raises(CapabilityError):
            generate(model, 101, seed=0)

    def test_digits_positive(self):
        d, meta = cf_digits(40, seed=77)
        assert len(d) == 40 and all(v >= 1 for v in d)
        assert meta.seed_bits == 8 * 40 + 64


class TestStationaryLaw:
    def test_base_m(self):
        values, mu = stationary_law(BaseM(4))
        assert values == (0, 1, 2, 3)
        assert all(x == Fraction(1, 4) for x in mu)

    def test_markov_through_map(self):
        # collapse both states to one value
        values, mu = stationary_law(FiniteMarkov(P=P_STAY, f=(1, 1)))
        assert values == (1,) and mu == (Fraction(1),)

    def test_profiles(self):
        assert mixing_profile(BaseM(2)).phi_bound(3) == 0.0
        p = mixing_profile(FiniteMarkov(P=P_STAY, f=(0, 1)))
        assert p.phi_bound(5) == pytest.approx(2 * 0.8 ** 5)
        assert p.phi_bound(2) == 1.0  # 2 * 0.8^2 > 1 clamps to the trivial bound
        assert p.phi_bound(0) == 1.0

    def test_every_generator_certifies_beta_zero(self):
        # xi_n is a function of the n-th coordinate for all three generators
        for model in (BaseM(2), FiniteMarkov(P=P_STAY, f=(0, 1)),
                      ContinuedFraction(digit_cap=8)):
            assert mixing_profile(model).beta_zero
