import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from nonconv.ordering import PolyFamily
from nonconv.polyalg import parse_poly
from nonconv.process import BaseM, FiniteMarkov
from nonconv.sums import (BlackBox, TensorTable, bar_F, check_assumptions,
                          compute_path, count_recurrences, decompose_F,
                          indicator_product)

P_STAY = ((Fraction(9, 10), Fraction(1, 10)), (Fraction(1, 10), Fraction(9, 10)))


def fam(*texts):
    return PolyFamily([parse_poly(t) for t in texts])


class TestCheckAssumptions:
    def test_bounded_table_case(self):
        rep = check_assumptions(w=8, q=100, v=1, iota=0, kappa=1, theta=6)
        assert rep.moment_ok

    def test_theta_threshold(self):
        assert check_assumptions(8, 100, 1, 0, 1, 6).clt_ok        # 6 > 16/3
        assert not check_assumptions(8, 100, 1, 0, 1, 5).clt_ok    # 5 < 16/3

    def test_w_gate(self):
        rep = check_assumptions(w=4, q=10, v=1, iota=2, kappa=1, theta=6)
        assert not rep.moment_ok and rep.reasons


class TestBarF:
    def test_indicator_pair(self):
        obs = indicator_product([2, 2], [[1], [1]])
        assert bar_F(obs, [0.5, 0.5]) == pytest.approx(0.25)

    def test_constant(self):
        obs = TensorTable(np.full((2, 2), 3.5))
        assert bar_F(obs, [0.5, 0.5]) == pytest.approx(3.5)

    def test_markov_identity_product(self):
        # pi = (1/2, 1/2), f identity, F = x1 * x2 under the product measure
        table = np.array([[i * j for j in (0, 1)] for i in (0, 1)], dtype=float)
        assert bar_F(TensorTable(table), [0.5, 0.5]) == pytest.approx(0.25)

    def test_centered_table_integrates_to_zero(self, rng):
        for _ in range(10):
            A = rng.choice([2, 3, 5])
            ell = rng.choice([1, 2, 3])
            table = np.array([rng.uniform(-2, 2) for _ in range(A ** ell)]
                             ).reshape((A,) * ell)
            mu = np.full(A, 1.0 / A)
            centered = TensorTable(table - bar_F(TensorTable(table), mu))
            assert abs(bar_F(centered, mu)) <= 1e-15

    def test_exact_matches_float(self, rng):
        for _ in range(20):
            A = rng.choice([2, 3])
            shape = (A,) * rng.choice([1, 2, 3])
            table = np.array([rng.randint(-4, 4) / 4 for _ in range(int(np.prod(shape)))]
                             ).reshape(shape)
            mu = [Fraction(1, A)] * A
            exact = bar_F(TensorTable(table), mu, exact=True)
            approx = bar_F(TensorTable(table), [float(x) for x in mu])
            assert abs(float(exact) - approx) < 1e-12


class TestDecomposeF:
    def test_worked_pair(self):
        obs = indicator_product([2, 2], [[1], [1]])
        dec = decompose_F(obs, [0.5, 0.5], (0, 1))
        assert np.allclose(dec.part(1), [-0.25, 0.25])
        assert np.allclose(dec.part(2), obs.table - 0.25 -
                           dec.part(1)[:, None])

    def test_constant_observable(self):
        dec = decompose_F(TensorTable(np.full((3, 3), 2.0)), [1 / 3] * 3, (0, 1))
        for j in (1, 2):
            assert np.allclose(dec.part(j), 0.0)

    def test_invariants_random_tables(self, rng):
        # zero last-marginal and telescoping for ell <= 4, alphabet <= 5, all perms
        for _ in range(12):
            ell = rng.randint(1, 4)
            A = rng.randint(2, 5)
            table = np.array([rng.uniform(-1, 1) for _ in range(A ** ell)]
                             ).reshape((A,) * ell)
            mu = np.full(A, 1.0 / A)
            for perm in itertools.permutations(range(ell)):
                dec = decompose_F(TensorTable(table), mu, perm)
                F_perm = np.transpose(table, perm)
                total = sum(part.reshape(part.shape + (1,) * (ell - j))
                            for j, part in enumerate(dec.parts, start=1))
                assert np.max(np.abs(total - (F_perm - dec.mean))) < 1e-12
                for part in dec.parts:
                    marg = np.tensordot(part, mu, axes=([part.ndim - 1], [0]))
                    assert np.max(np.abs(marg)) < 1e-12

    def test_blackbox_unsupported(self):
        bb = BlackBox(fn=lambda x: x, ell=1, K=1.0)
        with pytest.raises(ValueError):
            decompose_F(bb, [0.5, 0.5], (0,))


class TestComputePath:
    def test_uncentered_count(self):
        obs = TensorTable(np.ones((2, 2, 2)))
        path = compute_path(fam("n", "n+N", "n^2"), obs, BaseM(2), 400,
                            [0.0, 1.0], seed=1)
        assert path.values[0] == 0.0
        assert path.values[1] == pytest.approx(math.sqrt(400))

    def test_grid_refinement_consistency(self):
        obs = indicator_product([2, 2], [[1], [0]])
        family = fam("n", "n+N")
        coarse = compute_path(family, obs, BaseM(2), 512, [0.0, 0.5, 1.0], seed=9)
        fine = compute_path(family, obs, BaseM(2), 512,
                            [0.0, 0.25, 0.5, 0.75, 1.0], seed=9)
        for t, v in zip(coarse.grid, coarse.values):
            assert fine.value_at(t) == v

    def test_required_length_reported(self):
        path = compute_path(fam("n^2"), indicator_product([2], [[1]]), BaseM(2),
                            100, [1.0], seed=0)
        assert path.required_length == 100 ** 2 + 1

    def test_markov_path(self):
        obs = indicator_product([2, 2], [[1], [1]])
        mk = FiniteMarkov(P=P_STAY, f=(0, 1))
        path = compute_path(fam("n", "n+N"), obs, mk, 300, [1.0], seed=2)
        assert 0.0 <= path.values[0] * math.sqrt(300) <= 300


class TestCountRecurrences:
    def test_hand_counted_digits(self):
        digits = generate_digits = None
        from nonconv.process import generate
        family = fam("n")
        N = 8
        digits = generate(BaseM(2), N + 1, seed=5)
        expected = sum(1 for n in range(1, N + 1) if digits[n] == 1)
        assert count_recurrences(family, BaseM(2), N, [[1]], seed=5) == expected

    def test_full_alphabet_counts_everything(self):
        assert count_recurrences(fam("n", "n+N"), BaseM(2), 50,
                                 [[0, 1], [0, 1]], seed=3) == 50

    def test_matches_path_identity(self):
        family = fam("n", "n+N", "n^2")
        obs = indicator_product([2, 2, 2], [[1], [1], [1]])
        for seed in (0, 7, 123):
            m = count_recurrences(family, BaseM(2), 50, [[1], [1], [1]], seed=seed)
            path = compute_path(family, obs, BaseM(2), 50, [1.0], seed=seed)
            assert m == round(math.sqrt(50) * path.values[0], 6)

    def test_brute_force_recount(self):
        # independent scan against a third implementation over raw draws
        from nonconv.process import generate
        family = fam("n", "2n+N")
        N = 50
        idx1 = [family.polys[0].eval(n, N) for n in range(1, N + 1)]
        idx2 = [family.polys[1].eval(n, N) for n in range(1, N + 1)]
        digits = generate(BaseM(2), max(idx2) + 1, seed=31)
        expected = sum(1 for a, b in zip(idx1, idx2)
                       if digits[a] == 1 and digits[b] == 0)
        got = count_recurrences(family, BaseM(2), N, [[1], [0]], seed=31)
        assert got == expected


@pytest.fixture
def rng():
    return random.Random(1234)
