"""Stationary digit/state process generators with certified mixing profiles.

Three generators are supported: i.i.d. base-m digits (lazy per-index
access), finite-state Markov chains under their stationary law (prefix
access, Dobrushin-certified phi-mixing), and continued-fraction digits of a
Gauss-distributed point (prefix access, interval-certified digit
extraction).  Every generator makes xi_n measurable from the n-th
coordinate, so the approximation coefficient beta_q(r) vanishes identically.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _rng

try:  # GMP-backed bigints make long CF prefixes practical
    import gmpy2
    _mpz = gmpy2.mpz
    _isqrt_big = gmpy2.isqrt
except ImportError:  # pragma: no cover - gmpy2 is present in CI
    _mpz = int
    _isqrt_big = math.isqrt

Rational = Union[int, Fraction]

CF_PRECISION_CAP = 1 << 20  # bits; exceeding it is probabilistically negligible


class CapabilityError(RuntimeError):
    """Requested access pattern not supported by the generator."""


@dataclass(frozen=True)
class MixingProfile:
    """Certified bound phi(n) <= C * lambda^n (clamped at 1), beta == 0."""

    C: float
    lam: float
    beta_zero: bool = True

    def phi_bound(self, n: float) -> float:
        if n <= 0:
            return 1.0
        return min(1.0, self.C * self.lam ** n)


@dataclass(frozen=True)
class JointLaw:
    """Exact pairwise law of (xi_0, xi_k) over a finite alphabet."""

    k: int
    values: Tuple[int, ...]
    table: Tuple[Tuple[Fraction, ...], ...]  # indexed by value positions

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.table])


# ----------------------------------------------------------------------
# Models
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BaseM:
    """I.i.d. uniform digits in {0..m-1}; supports sparse index access."""

    m: int

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(range(self.m))

    def stationary(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(1, self.m) for _ in range(self.m))


@dataclass(frozen=True)
class FiniteMarkov:
    """Row-stochastic chain observed through a state map f."""

    P: Tuple[Tuple[Rational, ...], ...]
    f: Tuple[int, ...]

    @property
    def n_states(self) -> int:
        return len(self.P)

    @property
    def alphabet(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.f)))


@dataclass(frozen=True)
class ContinuedFraction:
    """Gauss-measure continued-fraction digits; digits above the cap are
    bucketed so finite-alphabet observables stay applicable."""

    digit_cap: int = 20
    max_prefix: int = 20000  # precision grows ~1.7 bits/digit; keep demos sane

    @property
    def alphabet(self) -> Tuple[int, ...]:
        # positions 0..cap-1 = digits 1..cap, position cap = overflow bucket
        return tuple(range(self.digit_cap + 1))


ProcessModel = Union[BaseM, FiniteMarkov, ContinuedFraction]


# ----------------------------------------------------------------------
# Markov machinery
# ----------------------------------------------------------------------

def _is_exact(P: Sequence[Sequence[Rational]]) -> bool:
    return all(isinstance(x, (int, Fraction)) for row in P for x in row)


def _solve_stationary_exact(P) -> List[Fraction]:
    """Gaussian elimination for pi (P^T - I) = 0, sum pi = 1, over Fractions."""
    d = len(P)
    rows: List[List[Fraction]] = []
    for i in range(d):
        rows.append([Fraction(P[j][i]) - (1 if i == j else 0) for j in range(d)] + [Fraction(0)])
    rows.append([Fraction(1)] * d + [Fraction(1)])
    # Eliminate
    pivot_cols: List[int] = []
    r = 0
    for c in range(d):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivot_cols.append(c)
        r += 1
    pi = [Fraction(0)] * d
    for r_idx, c in enumerate(pivot_cols):
        pi[c] = rows[r_idx][-1]
    return pi


def _primitive(P) -> bool:
    """Irreducible + aperiodic via boolean matrix powers (primitivity)."""
    d = len(P)
    A = np.array([[float(x) > 0 for x in row] for row in P], dtype=bool)
    M = A.copy()
    limit = (d - 1) * (d - 1) + 1
    for _ in range(limit):
        if M.all():
            return True
        M = (M.astype(np.int8) @ A.astype(np.int8)) > 0
    return bool(M.all())


@dataclass(frozen=True)
class MarkovData:
    model: FiniteMarkov
    pi: Tuple[Fraction, ...]
    profile: MixingProfile
    dobrushin: Fraction
    exact: bool
    joint: Callable[[int], JointLaw] = field(repr=False)


def build_markov(P: Sequence[Sequence[Rational]], f: Sequence[int]) -> MarkovData:
    """Stationary law, Dobrushin-certified mixing profile and joint laws.

    The certificate is phi(n) <= 2 * delta(P)^n with delta the one-step
    total-variation contraction coefficient; exact arithmetic whenever the
    transition matrix is given in rationals.
    """
    d = len(P)
    if any(len(row) != d for row in P):
        raise ValueError("P must be square")
    if len(f) != d:
        raise ValueError("state map must cover every state")
    exact = _is_exact(P)
    P_frac = tuple(tuple(Fraction(x) for x in row) for row in P)
    for row in P_frac:
        if any(x < 0 for x in row):
            raise ValueError("negative transition probability")
        s = sum(row)
        if exact:
            if s != 1:
                raise ValueError("rows must sum to 1 exactly")
        elif abs(float(s) - 1.0) > 1e-12:
            raise ValueError("rows must sum to 1 within 1e-12")
    if not _primitive(P_frac):
        raise ValueError("chain must be irreducible and aperiodic")

    pi = tuple(_solve_stationary_exact(P_frac))
    delta = Fraction(0)
    for i in range(d):
        for j in range(i + 1, d):
            tv = sum(abs(P_frac[i][k] - P_frac[j][k]) for k in range(d)) / 2
            delta = max(delta, tv)

    model = FiniteMarkov(P=P_frac, f=tuple(int(v) for v in f))
    values = model.alphabet
    vpos = {v: i for i, v in enumerate(values)}

    def joint(k: int) -> JointLaw:
        if k < 0:
            raise ValueError("lag must be nonnegative")
        Pk = _mat_pow(P_frac, k)
        table = [[Fraction(0)] * len(values) for _ in values]
        for i in range(d):
            for j in range(d):
                table[vpos[model.f[i]]][vpos[model.f[j]]] += pi[i] * Pk[i][j]
        return JointLaw(k=k, values=values, table=tuple(tuple(r) for r in table))

    return MarkovData(model=model, pi=pi,
                      profile=MixingProfile(C=2.0, lam=float(delta)),
                      dobrushin=delta, exact=exact, joint=joint)


def _mat_pow(P, k: int):
    d = len(P)
    result = [[Fraction(1) if i == j else Fraction(0) for j in range(d)] for i in range(d)]
    base = [list(row) for row in P]
    while k:
        if k & 1:
            result = _mat_mul(result, base)
        base = _mat_mul(base, base)
        k >>= 1
    return result


def _mat_mul(A, B):
    d = len(A)
    return [[sum(A[i][t] * B[t][j] for t in range(d)) for j in range(d)] for i in range(d)]


def stationary_law(model: ProcessModel) -> Tuple[Tuple[int, ...], Tuple[Fraction, ...]]:
    """(alphabet values, stationary probabilities) for a finite-alphabet model."""
    if isinstance(model, BaseM):
        return model.alphabet, model.stationary()
    if isinstance(model, FiniteMarkov):
        data = build_markov(model.P, model.f)
        values = model.alphabet
        mass: Dict[int, Fraction] = {v: Fraction(0) for v in values}
        for i, v in enumerate(model.f):
            mass[v] += data.pi[i]
        return values, tuple(mass[v] for v in values)
    if isinstance(model, ContinuedFraction):
        values = model.alphabet
        probs = []
        acc = Fraction(0)
        for pos in range(model.digit_cap):
            k = pos + 1
            pk = Fraction(math.log2(1 + 1 / (k * (k + 2))))  # float-backed; display only
            probs.append(pk)
            acc += pk
        probs.append(Fraction(1) - acc)
        return values, tuple(probs)
    raise TypeError(f"unknown model {model!r}")


def mixing_profile(model: ProcessModel) -> MixingProfile:
    if isinstance(model, BaseM):
        return MixingProfile(C=0.0, lam=0.0)  # independence: phi(n) = 0, n >= 1
    if isinstance(model, FiniteMarkov):
        return build_markov(model.P, model.f).profile
    if isinstance(model, ContinuedFraction):
        # Exponential psi-mixing of the Gauss map's digit filtration; the
        # classical contraction rate per step is below 0.304 (Wirsing-type),
        # certified loosely here with a conservative constant.
        return MixingProfile(C=2.0, lam=0.50)
    raise TypeError(f"unknown model {model!r}")


# ----------------------------------------------------------------------
# Generation
# ----------------------------------------------------------------------

def generate(model: ProcessModel, where: Union[int, np.ndarray], seed: int) -> np.ndarray:
    """Realize xi at a prefix length (int) or sparse index set (array).

    Sparse access is legal only for i.i.d. models: path-dependent generators
    must materialize the full prefix, which the caller sizes via
    ``PolyFamily.max_index``.
    """
    sparse = not isinstance(where, int)
    if isinstance(model, BaseM):
        key = _rng.stream_key(seed, 0xBA5E)
        if sparse:
            return _rng.index_draws(key, np.asarray(where, dtype=np.uint64), model.m)
        return _rng.index_draws(key, np.arange(where, dtype=np.uint64), model.m)
    if sparse:
        raise CapabilityError(f"{type(model).__name__} supports prefix access only")
    if isinstance(model, FiniteMarkov):
        return _markov_prefix(model, where, seed)
    if isinstance(model, ContinuedFraction):
        if where > model.max_prefix:
            raise CapabilityError(
                f"continued-fraction prefix {where} exceeds the practical cap "
                f"{model.max_prefix}; restrict the family's index growth")
        digits, _ = cf_digits(where, seed)
        capped = np.minimum(np.array(digits, dtype=np.int64), model.digit_cap + 1)
        return capped - 1  # alphabet positions 0..cap
    raise TypeError(f"unknown model {model!r}")


@lru_cache(maxsize=32)
def _markov_tables(model: FiniteMarkov):
    data = build_markov(model.P, model.f)
    pi_cum = tuple(float(sum(data.pi[: i + 1])) for i in range(model.n_states))
    rows = tuple(tuple(float(sum(row[: i + 1])) for i in range(model.n_states))
                 for row in model.P)
    return pi_cum, rows


def _markov_prefix(model: FiniteMarkov, length: int, seed: int) -> np.ndarray:
    pi_cum, rows = _markov_tables(model)
    d = model.n_states
    u = _rng.uniforms(_rng.stream_key(seed, 0x3A8C0F), length).tolist()
    out = [0] * length
    s = 0
    u0 = u[0]
    while s < d - 1 and u0 > pi_cum[s]:
        s += 1
    out[0] = s
    if d == 2:
        r0, r1 = rows[0][0], rows[1][0]
        for t in range(1, length):
            s = 0 if u[t] <= (r0 if s == 0 else r1) else 1
            out[t] = s
    else:
        for t in range(1, length):
            row = rows[s]
            s = 0
            ut = u[t]
            while s < d - 1 and ut > row[s]:
                s += 1
            out[t] = s
    f_arr = np.array(model.f, dtype=np.int64)
    return f_arr[np.array(out, dtype=np.int64)]


# ----------------------------------------------------------------------
# Continued fractions with certified digits
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CFMeta:
    seed_bits: int
    working_bits: int
    restarts: int
    tv_bias_exponent: int  # the sampled point's law is within 2^-this of Gauss


def cf_digits(count: int, seed: int, precision: Optional[int] = None
              ) -> Tuple[List[int], CFMeta]:
    """First ``count`` continued-fraction digits of a Gauss-distributed point.

    The point is x = 2^U - 1 with U uniform on seed-determined B0 = 8*count+64
    bits (inverse CDF of the Gauss measure).  The Gauss map is iterated in
    outward-rounded integer interval arithmetic at a working precision that
    starts at max(B0, precision) and doubles until every digit is certified
    unambiguous, so the output is invariant under further precision doubling.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    b0 = 8 * count + 64
    u = _rng.bits_from_key(_rng.stream_key(seed, 0xCF), b0)
    if u == 0:
        u = 1  # x = 0 has no expansion; probability 2^-b0
    work = max(b0, precision or 0)
    restarts = 0
    while True:
        if work > CF_PRECISION_CAP:
            raise RuntimeError("continued-fraction precision cap exceeded")
        digits = _cf_digits_at_precision(u, b0, count, work)
        if digits is not None:
            return digits, CFMeta(seed_bits=b0, working_bits=work,
                                  restarts=restarts, tv_bias_exponent=b0)
        work *= 2
        restarts += 1


def _pow2_interval(u: int, b0: int, prec: int) -> Tuple[int, int]:
    """Outward-rounded interval for 2^(u/2^b0), scaled by 2^prec.

    Uses the product over set bits of u of the repeated square roots of 2;
    isqrt gives directed rounding in both directions.
    """
    one = _mpz(1) << prec
    lo = hi = one
    # sqrt chain: s_i approximates 2^(2^-i), i = 1..b0
    s_lo = _mpz(2) << prec  # value 2 at scale
    s_hi = s_lo
    for i in range(1, b0 + 1):
        s_lo = _isqrt_big(s_lo << prec)
        s_hi = _isqrt_big(s_hi << prec) + 1
        if (u >> (b0 - i)) & 1:
            lo = (lo * s_lo) >> prec
            hi = ((hi * s_hi) >> prec) + 1
    return int(lo), int(hi)


def _cf_digits_at_precision(u: int, b0: int, count: int, prec: int
                            ) -> Optional[List[int]]:
    one = 1 << prec
    lo, hi = _pow2_interval(u, b0, prec)
    lo, hi = lo - one, hi - one  # x = 2^U - 1 in (0, 1)
    digits: List[int] = []
    lo = _mpz(lo)
    hi = _mpz(hi)
    big_one = _mpz(one)
    four = _mpz(1) << (2 * prec)
    for _ in range(count):
        if lo <= 0:
            return None
        inv_lo = four // hi
        inv_hi = four // lo + 1
        a_lo = int(inv_lo >> prec)
        a_hi = int(inv_hi >> prec)
        if a_lo != a_hi or a_lo < 1:
            return None
        digits.append(a_lo)
        shift = _mpz(a_lo) << prec
        lo, hi = inv_lo - shift, inv_hi - shift
        if hi > big_one:
            hi = big_one
        if lo < 0:
            lo = _mpz(0)
    return digits


def cf_digit_probability(k: int) -> float:
    """Gauss-measure probability of digit k: log2(1 + 1/(k(k+2)))."""
    if k < 1:
        raise ValueError("digits start at 1")
    return math.log2(1.0 + 1.0 / (k * (k + 2)))
