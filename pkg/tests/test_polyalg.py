import random
from fractions import Fraction

import pytest

from nonconv.polyalg import (BivariatePoly, UniPoly, compose_affine, format_poly,
                             hom_decompose, parse_poly)
from conftest import random_family_poly


class TestEval:
    def test_mixed_quadratic(self):
        assert parse_poly("n^2+3nN+N^2").eval(2, 5) == 59

    def test_origin_gives_constant(self):
        p = parse_poly("7+2n+5N^3")
        assert p.eval(0, 0) == 7

    def test_large_linear(self):
        assert parse_poly("2n+3N").eval(10**6, 10**6) == 5_000_000

    def test_no_overflow(self):
        p = parse_poly("n^4")
        assert p.eval(10**6, 1) == 10**24


class TestHomDecompose:
    def test_quadratic_regroups(self):
        d = hom_decompose(parse_poly("n^2+3nN+N^2"))
        assert d.k == 2
        assert d.part(2).coefficients == (1, 3, 1)
        assert d.part(1).is_zero() and d.part(0).is_zero()

    def test_single_variable(self):
        d = hom_decompose(parse_poly("n"))
        assert d.k == 1 and d.part(1).coefficients == (0, 1)

    def test_square_plus_linear(self):
        d = hom_decompose(parse_poly("n^2+2n+1"))
        assert d.part(2).coefficients == (0, 0, 1)
        assert d.part(1).coefficients == (0, 2)
        assert d.part(0).coefficients == (1,)
        assert d.n_part.coefficients == (1, 2, 1)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            hom_decompose(BivariatePoly({}))

    def test_reconstruction_200_random(self, rng):
        # sum_j N^j Q_j(n/N) in exact rationals equals eval(p, n, N)
        for _ in range(200):
            p = random_family_poly(rng)
            d = hom_decompose(p)
            n, N = rng.randint(0, 10**4), rng.randint(1, 10**4)
            assert d.reconstruct_eval(n, N) == p.eval(n, N)

    def test_degree_matches_diagonal_univariate(self, rng):
        for _ in range(50):
            p = random_family_poly(rng)
            diag = {}
            for (i, j), c in p.coeffs.items():
                diag[i + j] = diag.get(i + j, 0) + c
            uni = UniPoly([diag.get(s, 0) for s in range(max(diag) + 1)])
            assert hom_decompose(p).k == uni.degree()

    def test_part_degree_bound(self, rng):
        for _ in range(50):
            d = hom_decompose(random_family_poly(rng))
            for j, part in enumerate(d.parts):
                assert part.degree() <= j


class TestComposeAffine:
    def test_shift_by_one(self):
        assert compose_affine(parse_poly("n^2"), 1, 1) == parse_poly("n^2+2n+1")

    def test_scale_by_two(self):
        assert compose_affine(parse_poly("n+N"), 2, 0) == parse_poly("2n+N")

    def test_rational_scale(self):
        out = compose_affine(parse_poly("n^2"), Fraction(1, 2), 0)
        assert out.coeffs == {(2, 0): Fraction(1, 4)}

    def test_identity(self, rng):
        for _ in range(25):
            p = random_family_poly(rng)
            assert compose_affine(p, 1, 0) == p


class TestTextGrammar:
    @pytest.mark.parametrize("text", ["n^2+3nN+N^2", "4n^2", "2n+3N", "n", "N^3",
                                      "7", "nN", "12n^4N^2+n"])
    def test_roundtrip_fixed(self, text):
        p = parse_poly(text)
        assert parse_poly(format_poly(p)) == p

    def test_roundtrip_random(self, rng):
        for _ in range(100):
            p = random_family_poly(rng)
            assert parse_poly(format_poly(p)) == p

    def test_bad_terms_rejected(self):
        for bad in ["", "n^", "x", "3*n", "n--2"]:
            with pytest.raises(ValueError):
                parse_poly(bad)

    def test_zero(self):
        assert parse_poly("0").is_zero()


class TestUniPoly:
    def test_monotone_inverse(self):
        p = UniPoly([0, 0, 1])  # x^2
        assert abs(p.inverse_at(12) - 12 ** 0.5) < 1e-12

    def test_inverse_requires_monotone(self):
        with pytest.raises(ValueError):
            UniPoly([3]).inverse_at(5)

    def test_taylor_coefficient(self):
        p = UniPoly([1, 2, 3])  # 1 + 2x + 3x^2 at x=1: value 6, slope 8, curv 3
        assert p.taylor_coefficient(0, 1) == 6
        assert p.taylor_coefficient(1, 1) == 8
        assert p.taylor_coefficient(2, 1) == 3

    def test_mul_pow(self):
        p = UniPoly([1, 1])
        assert (p * p).coefficients == (1, 2, 1)
        assert p.pow(3).coefficients == (1, 3, 3, 1)
