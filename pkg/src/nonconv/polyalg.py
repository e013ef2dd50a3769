"""Exact arithmetic for bivariate polynomials q(n, N) with integer or
rational coefficients.

A polynomial is stored as a sparse map from exponent pairs ``(i, j)`` (the
powers of ``n`` and ``N``) to nonzero coefficients.  All arithmetic is exact:
integer coefficients stay Python ints, everything else becomes
``fractions.Fraction``.  Values such as q(n, N) for n, N up to 1e5 and degree
4+ exceed 64-bit range, so no floating point is used anywhere in this module.

The homogeneous decomposition writes q(n, N) = sum_j N^j Q_j(n/N) with
deg Q_j <= j; it is the basis for the polynomial-pair classification in
:mod:`nonconv.classify`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Tuple, Union

Coeff = Union[int, Fraction]
Exponents = Tuple[int, int]  # (power of n, power of N)

_TERM_RE = re.compile(
    r"^(?P<sign>-)?(?P<coeff>\d+(?:/\d+)?)?(?P<n>n(?:\^(?P<ni>\d+))?)?"
    r"(?P<N>N(?:\^(?P<Nj>\d+))?)?$"
)


def _norm(value: Coeff) -> Coeff:
    """Collapse integral Fractions back to int so dict values stay light."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value


class BivariatePoly:
    """Immutable sparse bivariate polynomial in (n, N).

    ``coeffs`` maps (i, j) -> coefficient; absent pairs mean zero and stored
    coefficients are always nonzero.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[Exponents, Coeff]):
        cleaned: Dict[Exponents, Coeff] = {}
        for (i, j), c in coeffs.items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent pair {(i, j)}")
            c = _norm(Fraction(c) if not isinstance(c, (int, Fraction)) else c)
            if c != 0:
                cleaned[(int(i), int(j))] = c
        object.__setattr__(self, "coeffs", cleaned)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("BivariatePoly is immutable")

    # -- basic queries -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """Total degree: the degree of the univariate polynomial p(x, x).

        For nonnegative coefficients (the only family this library admits at
        classification entry points) there is no cancellation, so this equals
        max(i + j) over stored monomials.
        """
        if not self.coeffs:
            return -1
        return max(i + j for (i, j) in self.coeffs)

    def depends_on_n(self) -> bool:
        return any(i > 0 for (i, j) in self.coeffs)

    def is_family_member(self) -> bool:
        """Nonnegative integer coefficients and at least one n-dependent term."""
        return all(
            isinstance(c, int) and c >= 0 for c in self.coeffs.values()
        ) and self.depends_on_n()

    def constant_coeff(self) -> Coeff:
        return self.coeffs.get((0, 0), 0)

    def min_N_exponent(self) -> int:
        """Largest e with N^e dividing every monomial (inf -> 0 for zero poly)."""
        if not self.coeffs:
            return 0
        return min(j for (_, j) in self.coeffs)

    # -- arithmetic ----------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, BivariatePoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __add__(self, other: "BivariatePoly") -> "BivariatePoly":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return BivariatePoly(out)

    def __sub__(self, other: "BivariatePoly") -> "BivariatePoly":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) - c
        return BivariatePoly(out)

    def __mul__(self, other: "BivariatePoly") -> "BivariatePoly":
        out: Dict[Exponents, Coeff] = {}
        for (i1, j1), c1 in self.coeffs.items():
            for (i2, j2), c2 in other.coeffs.items():
                e = (i1 + i2, j1 + j2)
                out[e] = out.get(e, 0) + c1 * c2
        return BivariatePoly(out)

    def scale(self, factor: Coeff) -> "BivariatePoly":
        return BivariatePoly({e: c * factor for e, c in self.coeffs.items()})

    # -- evaluation ----------------------------------------------------

    def eval(self, n: int, N: int) -> Coeff:
        """Exact value at integer (n, N); never overflows."""
        npow: Dict[int, Coeff] = {0: 1}
        Npow: Dict[int, Coeff] = {0: 1}
        total: Coeff = 0
        for (i, j), c in self.coeffs.items():
            if i not in npow:
                npow[i] = n ** i
            if j not in Npow:
                Npow[j] = N ** j
            total += c * npow[i] * Npow[j]
        return _norm(total if isinstance(total, int) else Fraction(total))

    def univariate_in_n(self, N: int) -> "UniPoly":
        """The univariate polynomial x -> p(x, N) for fixed N."""
        coeffs: Dict[int, Coeff] = {}
        for (i, j), c in self.coeffs.items():
            coeffs[i] = coeffs.get(i, 0) + c * (N ** j)
        deg = max(coeffs) if coeffs else 0
        return UniPoly([coeffs.get(i, 0) for i in range(deg + 1)])

    # -- display -------------------------------------------------------

    def __repr__(self):
        return f"BivariatePoly({format_poly(self)!r})"


@dataclass(frozen=True)
class UniPoly:
    """Dense univariate polynomial with exact rational coefficients.

    ``coefficients[s]`` is the coefficient of x^s; trailing zeros stripped.
    """

    coefficients: Tuple[Coeff, ...]

    def __init__(self, coefficients: Iterable[Coeff]):
        coeffs = [_norm(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    def is_zero(self) -> bool:
        return not self.coefficients

    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, s: int) -> Coeff:
        if 0 <= s < len(self.coefficients):
            return self.coefficients[s]
        return 0

    def eval(self, x: Coeff) -> Coeff:
        total: Coeff = 0
        for c in reversed(self.coefficients):
            total = total * x + c
        return _norm(total if isinstance(total, int) else Fraction(total))

    def eval_float(self, x: float) -> float:
        total = 0.0
        for c in reversed(self.coefficients):
            total = total * x + float(c)
        return total

    def derivative(self, order: int = 1) -> "UniPoly":
        coeffs = list(self.coefficients)
        for _ in range(order):
            coeffs = [s * c for s, c in enumerate(coeffs)][1:]
        return UniPoly(coeffs)

    def scale_arg(self, c: Coeff) -> "UniPoly":
        """p(c*x) expanded exactly."""
        return UniPoly([coef * (Fraction(c) ** s) for s, coef in enumerate(self.coefficients)])

    def __add__(self, other: "UniPoly") -> "UniPoly":
        n = max(len(self.coefficients), len(other.coefficients))
        return UniPoly([self[s] + other[s] for s in range(n)])

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        n = max(len(self.coefficients), len(other.coefficients))
        return UniPoly([self[s] - other[s] for s in range(n)])

    def __mul__(self, other: "UniPoly") -> "UniPoly":
        if self.is_zero() or other.is_zero():
            return UniPoly([])
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            if a == 0:
                continue
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return UniPoly(out)

    def pow(self, exponent: int) -> "UniPoly":
        result = UniPoly([1])
        for _ in range(exponent):
            result = result * self
        return result

    def scale(self, factor: Coeff) -> "UniPoly":
        return UniPoly([c * factor for c in self.coefficients])

    def taylor_coefficient(self, order: int, at: Coeff) -> Coeff:
        """Coefficient of (x - at)^order, i.e. p^(order)(at) / order!."""
        fact = 1
        for k in range(2, order + 1):
            fact *= k
        return _norm(Fraction(self.derivative(order).eval(at), fact))

    def is_nonneg_increasing(self) -> bool:
        """True when all coefficients >= 0 and some positive-degree one is > 0,
        making the polynomial strictly increasing on [0, inf)."""
        return all(c >= 0 for c in self.coefficients) and any(
            c > 0 for c in self.coefficients[1:]
        )

    def inverse_at(self, value: Coeff) -> float:
        """Solve p(x) = value for x >= 0 by monotone bisection.

        Requires nonnegative coefficients with some positive-degree term and
        value >= p(0).
        """
        if not self.is_nonneg_increasing():
            raise ValueError("inverse requires a nondecreasing polynomial")
        v = float(value)
        if v < self.eval_float(0.0):
            raise ValueError("value below p(0); no nonnegative root")
        lo, hi = 0.0, 1.0
        while self.eval_float(hi) < v:
            hi *= 2.0
            if hi > 1e300:  # pragma: no cover - guards pathological input
                raise OverflowError("inverse bracketing failed")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.eval_float(mid) < v:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class HomDecomposition:
    """q(n, N) = sum_{j<=k} N^j Q_j(n/N) with deg Q_j <= j.

    ``n_part`` is the univariate polynomial q(x, 0); its x^s coefficient
    equals the y^s coefficient of Q_s.
    """

    k: int
    parts: Tuple[UniPoly, ...]  # Q_0 .. Q_k
    n_part: UniPoly = field(repr=False)

    def part(self, j: int) -> UniPoly:
        if 0 <= j < len(self.parts):
            return self.parts[j]
        return UniPoly([])

    def reconstruct_eval(self, n: int, N: int) -> Coeff:
        """Evaluate sum_j N^j Q_j(n/N) in exact rationals (N > 0)."""
        y = Fraction(n, N)
        total: Coeff = 0
        for j, Q in enumerate(self.parts):
            total += Fraction(N) ** j * Q.eval(y)
        return _norm(Fraction(total))


def hom_decompose(p: BivariatePoly) -> HomDecomposition:
    """Route each monomial n^i N^j to Q_{i+j} as the coefficient of y^i."""
    if p.is_zero():
        raise ValueError("cannot decompose the zero polynomial")
    k = p.degree()
    rows: List[Dict[int, Coeff]] = [dict() for _ in range(k + 1)]
    for (i, j), c in p.coeffs.items():
        u = i + j
        rows[u][i] = rows[u].get(i, 0) + c
    parts = tuple(
        UniPoly([row.get(i, 0) for i in range(u + 1)]) for u, row in enumerate(rows)
    )
    n_part = UniPoly(
        [
            next((c for (i, j), c in p.coeffs.items() if j == 0 and i == s), 0)
            for s in range(k + 1)
        ]
    )
    return HomDecomposition(k=k, parts=parts, n_part=n_part)


def compose_affine(p: BivariatePoly, c: Coeff, r: Coeff) -> BivariatePoly:
    """Exact expansion of p(c*n + r, N) in monomials of (n, N)."""
    c = Fraction(c)
    r = Fraction(r)
    out: Dict[Exponents, Coeff] = {}
    binom_cache: Dict[int, List[int]] = {}
    for (i, j), coeff in p.coeffs.items():
        if i not in binom_cache:
            row = [1]
            for _ in range(i):
                row = [1] + [row[t] + row[t + 1] for t in range(len(row) - 1)] + [1]
            binom_cache[i] = row
        row = binom_cache[i]
        # (c n + r)^i = sum_t C(i,t) c^t r^(i-t) n^t
        for t in range(i + 1):
            term = coeff * row[t] * (c ** t) * (r ** (i - t))
            if term != 0:
                out[(t, j)] = out.get((t, j), 0) + term
    return BivariatePoly(out)


# ----------------------------------------------------------------------
# Text grammar:  term ("+" term)*,  term = [coeff]["n"["^"i]]["N"["^"j]]
# ----------------------------------------------------------------------

def parse_poly(text: str) -> BivariatePoly:
    """Parse e.g. "n^2+3nN+N^2" or "4n^2"; round-trips with format_poly."""
    raw = text.replace(" ", "")
    if not raw:
        raise ValueError("empty polynomial string")
    # Split on '+' but keep '-'-prefixed terms (extension of the grammar used
    # when printing internal rational/negative results).
    terms = raw.replace("-", "+-").split("+")
    coeffs: Dict[Exponents, Coeff] = {}
    for term in terms:
        if term == "":
            continue
        m = _TERM_RE.match(term)
        if not m or (m.group("coeff") is None and m.group("n") is None and m.group("N") is None):
            raise ValueError(f"bad term {term!r} in polynomial {text!r}")
        cs = m.group("coeff")
        if cs is None:
            coeff: Coeff = 1
        elif "/" in cs:
            coeff = Fraction(cs)
        else:
            coeff = int(cs)
        if m.group("sign"):
            coeff = -coeff
        i = 0
        if m.group("n"):
            i = int(m.group("ni") or 1)
        j = 0
        if m.group("N"):
            j = int(m.group("Nj") or 1)
        coeffs[(i, j)] = coeffs.get((i, j), 0) + coeff
    return BivariatePoly(coeffs)


def format_poly(p: BivariatePoly) -> str:
    """Canonical text form; parse_poly(format_poly(p)) == p bit-exactly."""
    if p.is_zero():
        return "0"
    items = sorted(p.coeffs.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0]))
    out = []
    for (i, j), c in items:
        neg = c < 0
        mag = -c if neg else c
        body = ""
        if i:
            body += "n" if i == 1 else f"n^{i}"
        if j:
            body += "N" if j == 1 else f"N^{j}"
        if mag != 1 or not body:
            body = str(mag) + body
        out.append(("-" if neg else "+") + body)
    text = "".join(out)
    return text[1:] if text.startswith("+") else text
