"""Shared generators for randomized exact-arithmetic tests."""

import random

import pytest

from nonconv.polyalg import BivariatePoly, compose_affine


def random_family_poly(rng: random.Random, max_degree: int = 4,
                       max_coeff: int = 6) -> BivariatePoly:
    """Random polynomial with nonnegative integer coefficients that depends
    on n (a valid family member)."""
    k = rng.randint(1, max_degree)
    coeffs = {}
    n_terms = rng.randint(1, 5)
    for _ in range(n_terms):
        i = rng.randint(0, k)
        j = rng.randint(0, k - i)
        coeffs[(i, j)] = coeffs.get((i, j), 0) + rng.randint(1, max_coeff)
    i = rng.randint(1, k)
    coeffs[(i, k - i)] = coeffs.get((i, k - i), 0) + rng.randint(1, max_coeff)
    return BivariatePoly(coeffs)


def random_equivalent_pair(rng: random.Random, max_degree: int = 4):
    """(qi, qj, c, r, d): family polynomials with qi(n,N) - qj(c n + r, N) = d.

    Built from a base polynomial g via qj(m, N) = g(v m, N) and
    qi(n, N) = g(u n + s, N) + d, giving c = u/v and r = s/v exactly.
    """
    from fractions import Fraction

    while True:
        k = rng.randint(2, max_degree)
        coeffs = {}
        for _ in range(rng.randint(1, 4)):
            i = rng.randint(0, k)
            j = rng.randint(0, k - i)
            coeffs[(i, j)] = coeffs.get((i, j), 0) + rng.randint(1, 4)
        i = rng.randint(1, k)
        coeffs[(i, k - i)] = coeffs.get((i, k - i), 0) + rng.randint(1, 4)
        g = BivariatePoly(coeffs)
        if g.degree() < 2 or not g.depends_on_n():
            continue
        dec_top_deg = max(i for (i, j) in g.coeffs if i + j == g.degree())
        if dec_top_deg < 1:
            continue  # top homogeneous part must be non-constant
        u, v = rng.randint(1, 4), rng.randint(1, 4)
        s = rng.randint(0, 5)
        d = rng.randint(0, 9)
        qj = compose_affine(g, v, 0)
        qi = compose_affine(g, u, s) + BivariatePoly({(0, 0): d})
        if not (qi.is_family_member() and qj.is_family_member()):
            continue
        return qi, qj, Fraction(u, v), Fraction(s, v), Fraction(d)


@pytest.fixture
def rng():
    return random.Random(0x5EED)
