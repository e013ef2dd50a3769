"""Classification of bivariate polynomial pairs.

Given two same-degree nonlinear polynomials q(m, N) and p(n, N) with
nonnegative integer coefficients, this module decides whether the pair is
linearly related / Q-equivalent (an affine reindexing m = c n + r makes the
difference constant), whether the differences |q(m,N) - p(n,N)| grow
linearly in N away from a sparse lattice ("exploding"), or whether neither
can be certified symbolically, in which case an empirical explosion
certificate is attached.

The structure functions gamma_k, R_k and C_u come from the homogeneous
decompositions of the pair; the exact difference identity rebuilt in
:func:`lemma_identity_residual` is the correctness anchor for all of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .polyalg import (
    BivariatePoly,
    Coeff,
    HomDecomposition,
    UniPoly,
    compose_affine,
    hom_decompose,
)

EULER_GAMMA = 0.5772156649015328606

_SAMPLE_POINTS = [0.05 + 0.95 * t / 20 for t in range(21)]  # 21 points on [0.05, 1]
_NUMERIC_TOL = 1e-9


def _iroot(value: int, k: int) -> int:
    """Floor of the k-th root of a nonnegative integer (exact)."""
    if value < 0:
        raise ValueError("negative radicand")
    if value == 0:
        return 0
    if k == 1:
        return value
    if k == 2:
        return math.isqrt(value)
    x = int(round(value ** (1.0 / k))) + 1
    while x ** k > value:
        x = ((k - 1) * x + value // x ** (k - 1)) // k
    while (x + 1) ** k <= value:
        x += 1
    return x


def _is_perfect_power(value: int, k: int) -> Optional[int]:
    """Return the exact integer k-th root of value, or None."""
    if value < 0:
        return None
    r = _iroot(value, k)
    return r if r ** k == value else None


# ----------------------------------------------------------------------
# Linear relation and Q-equivalence
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinearRelation:
    """Witness of Q_{j,k}(c y) = Q_{i,k}(y) and the R-matching constant r.

    ``exact`` is True when both c and r were verified as identities in exact
    rational arithmetic; otherwise the verification was numeric at 21 sample
    points (tolerance 1e-9) and the values are floats.
    """

    c: Union[Fraction, float]
    r: Union[Fraction, float]
    exact: bool


def detect_linear_relation(qi: BivariatePoly, qj: BivariatePoly) -> Optional[LinearRelation]:
    """Find (c, r) making the pair linearly related, if any.

    Both polynomials must share a degree k > 1 with non-constant top parts.
    c comes from the leading-coefficient ratio's d-th root; the remaining
    coefficient equations are checked by the exact rational criterion
    (coeff ratio)^d == (leading ratio)^m, so no algebraic-number arithmetic
    is ever needed.
    """
    di, dj = hom_decompose(qi), hom_decompose(qj)
    k = di.k
    if dj.k != k:
        raise ValueError("degree mismatch")
    if k <= 1:
        raise ValueError("linear relation is defined for degree > 1")
    A, B = di.part(k), dj.part(k)  # Q_{i,k}, Q_{j,k}
    if A.degree() < 1 or B.degree() < 1:
        raise ValueError("constant leading homogeneous parts")

    if A[0] != B[0]:
        return None
    supp_a = {s for s in range(1, A.degree() + 1) if A[s] != 0}
    supp_b = {s for s in range(1, B.degree() + 1) if B[s] != 0}
    if supp_a != supp_b:
        return None
    d = A.degree()
    rho = Fraction(A[d], B[d])
    if rho <= 0:
        return None
    # Exact cross-ratio checks for every matching coefficient.
    for s in supp_a:
        ratio = Fraction(A[s], B[s])
        if ratio <= 0 or ratio ** d != rho ** s:
            return None

    c_exact = _rational_root(rho, d)
    if c_exact is not None:
        r = _solve_r_exact(di, dj, k, c_exact)
        if r is None:
            return None
        return LinearRelation(c=c_exact, r=r, exact=True)

    c_num = float(rho) ** (1.0 / d)
    r_num = _solve_r_numeric(di, dj, k, c_num)
    if r_num is None:
        return None
    return LinearRelation(c=c_num, r=r_num, exact=False)


def _rational_root(rho: Fraction, d: int) -> Optional[Fraction]:
    """The positive rational d-th root of rho, when it exists."""
    p = _is_perfect_power(rho.numerator, d)
    q = _is_perfect_power(rho.denominator, d)
    if p is None or q is None:
        return None
    return Fraction(p, q)


def _solve_r_exact(di: HomDecomposition, dj: HomDecomposition, k: int,
                   c: Fraction) -> Optional[Fraction]:
    """Solve Q_{i,k-1}(y) - Q_{j,k-1}(c y) = r * Q'_{j,k}(c y) exactly."""
    lhs = di.part(k - 1) - dj.part(k - 1).scale_arg(c)
    den = dj.part(k).derivative().scale_arg(c)
    if den.is_zero():  # unreachable: top part non-constant
        return None
    if lhs.is_zero():
        return Fraction(0)
    pivot = next(s for s in range(den.degree() + 1) if den[s] != 0)
    if lhs[pivot] == 0:
        return None
    r = Fraction(lhs[pivot], den[pivot])
    return r if (den.scale(r) - lhs).is_zero() else None


def _solve_r_numeric(di: HomDecomposition, dj: HomDecomposition, k: int,
                     c: float) -> Optional[float]:
    lhs = di.part(k - 1)
    rhs_base = dj.part(k - 1)
    den = dj.part(k).derivative()
    ratios = []
    for y in _SAMPLE_POINTS:
        dv = den.eval_float(c * y)
        lv = lhs.eval_float(y) - rhs_base.eval_float(c * y)
        if abs(dv) < 1e-15:
            continue
        ratios.append(lv / dv)
    if not ratios:
        return None
    r = sorted(ratios)[len(ratios) // 2]
    scale = 1.0 + abs(r)
    if any(abs(v - r) > _NUMERIC_TOL * scale for v in ratios):
        return None
    return r


def detect_q_equivalence(qi: BivariatePoly, qj: BivariatePoly
                         ) -> Optional[Tuple[Fraction, Fraction, Fraction]]:
    """Return (c, r, d) with qi(n,N) - qj(c n + r, N) == d identically, or None.

    The candidate (c, r) comes from the linear-relation detector and must be
    rational; the constancy of the difference is then checked symbolically.
    """
    try:
        rel = detect_linear_relation(qi, qj)
    except ValueError:
        return None
    if rel is None or not rel.exact:
        return None
    c, r = rel.c, rel.r
    diff = qi - compose_affine(qj, c, r)
    nonconst = {e: v for e, v in diff.coeffs.items() if e != (0, 0)}
    if nonconst:
        return None
    return Fraction(c), Fraction(r), Fraction(diff.constant_coeff())


# ----------------------------------------------------------------------
# Structure functions gamma_k, R_k, C_u
# ----------------------------------------------------------------------

class GammaKind(Enum):
    RATIONAL_LINEAR = "rational_linear"
    RADICAL = "radical"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class RationalFunction:
    """num(y)/den(y) with exact rational polynomial parts."""

    num: UniPoly
    den: UniPoly

    def eval(self, y: Coeff) -> Fraction:
        d = self.den.eval(y)
        if d == 0:
            raise ZeroDivisionError("rational function pole")
        return Fraction(self.num.eval(y), 1) / Fraction(d)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def constant_value(self) -> Optional[Fraction]:
        """The constant r when num == r * den identically, else None."""
        if self.num.is_zero():
            return Fraction(0)
        pivot = next(s for s in range(self.den.degree() + 1) if self.den[s] != 0)
        if self.num[pivot] == 0:
            return None
        r = Fraction(self.num[pivot], self.den[pivot])
        return r if (self.den.scale(r) - self.num).is_zero() else None


@dataclass
class RelatedData:
    """Structure functions of an ordered pair (q, p) of common degree k > 1.

    Role convention throughout: q supplies the Q_j parts (and is the
    polynomial evaluated at m), p supplies the P_j parts (evaluated at n);
    gamma_k solves Q_k(gamma_k(y)) = P_k(y).
    """

    k: int
    gamma_kind: GammaKind
    gamma: Callable[[float], float]
    gamma_c: Optional[Fraction] = None           # rational-linear slope
    radical: Optional[Tuple[int, int, Tuple[int, ...]]] = None  # (a, b, alphas)
    R_k: Optional[RationalFunction] = None        # exact in the rational case
    R_k_num: Optional[Callable[[float], float]] = None
    C_u: Dict[int, RationalFunction] = field(default_factory=dict)
    C_u_num: Dict[int, Callable[[float], float]] = field(default_factory=dict)
    C_zero: Dict[int, bool] = field(default_factory=dict)
    s0: Optional[int] = None
    constant_d: Optional[Fraction] = None
    numeric_verdict: bool = False
    q_parts: Tuple[UniPoly, ...] = ()
    p_parts: Tuple[UniPoly, ...] = ()
    q_n_part: Optional[UniPoly] = None

    def gamma_value(self, y: Coeff) -> Union[Fraction, float]:
        if self.gamma_kind is GammaKind.RATIONAL_LINEAR:
            return self.gamma_c * Fraction(y)
        return self.gamma(float(y))


def structure_functions(q: BivariatePoly, p: BivariatePoly) -> RelatedData:
    """Compute gamma_k, R_k and the C_u family for the ordered pair (q, p).

    Zero decisions for C_u are exact (polynomial identity) when gamma is
    rational linear, and sampled at 21 points with tolerance 1e-9 otherwise
    (flagged through ``numeric_verdict``).
    """
    dq, dp = hom_decompose(q), hom_decompose(p)
    k = dq.k
    if dp.k != k or k <= 1:
        raise ValueError("pair must share a common degree k > 1")
    Qk, Pk = dq.part(k), dp.part(k)
    if Qk.degree() < 1 or Pk.degree() < 1:
        raise ValueError("leading homogeneous parts must be non-constant")
    if Qk.eval(0) > Pk.eval(0):
        raise ValueError("requires Q_k(0) <= P_k(0); swap the pair roles")

    data = RelatedData(
        k=k,
        gamma_kind=GammaKind.NUMERIC,
        gamma=lambda y: Qk.inverse_at(Pk.eval_float(y)),
        q_parts=dq.parts,
        p_parts=dp.parts,
        q_n_part=dq.n_part,
    )

    rel: Optional[LinearRelation]
    try:
        rel = detect_linear_relation(p, q)  # Q_k(c y) = P_k(y)
    except ValueError:
        rel = None

    if rel is not None and rel.exact:
        data.gamma_kind = GammaKind.RATIONAL_LINEAR
        data.gamma_c = Fraction(rel.c)
        c = data.gamma_c
        data.gamma = lambda y, c=float(c): c * y
        den = Qk.derivative().scale_arg(c)
        r_num = dp.part(k - 1) - dq.part(k - 1).scale_arg(c)
        data.R_k = RationalFunction(r_num, den)
        # The re-expansion constant at order N^(k-u): the bare
        # Q_{k-u}(gamma) - P_{k-u} difference acquires R-shift corrections
        # sum_{s=1..u} Q^{(s)}_{s+k-u}(gamma) R^s / s! when R_k is nonzero.
        for u in range(2, k):
            num = (dq.part(k - u).scale_arg(c) - dp.part(k - u)) * den.pow(u)
            fact = 1
            for s in range(1, u + 1):
                fact *= s
                j = s + k - u
                if j > k:
                    break
                term = dq.part(j).derivative(s).scale_arg(c)
                num = num + (term * r_num.pow(s) * den.pow(u - s)).scale(Fraction(1, fact))
            data.C_u[u] = RationalFunction(num, den * den.pow(u))
            data.C_zero[u] = num.is_zero()
    else:
        if _radical_pattern(Qk, Pk) is not None:
            a, b, alphas = _radical_pattern(Qk, Pk)
            data.gamma_kind = GammaKind.RADICAL
            data.radical = (a, b, alphas)
            data.gamma = lambda y, a=a: Pk.eval_float(y) ** (1.0 / a)
        gamma = data.gamma
        Qk_d = Qk.derivative()

        def _r_value(y: float) -> float:
            g = gamma(y)
            return (dp.part(k - 1).eval_float(y) - dq.part(k - 1).eval_float(g)) \
                / Qk_d.eval_float(g)

        def _c_value(u: int, y: float) -> float:
            g = gamma(y)
            rv = _r_value(y)
            total = dq.part(k - u).eval_float(g) - dp.part(k - u).eval_float(y)
            fact = 1.0
            for s in range(1, u + 1):
                fact *= s
                j = s + k - u
                if j > k:
                    break
                total += dq.part(j).derivative(s).eval_float(g) * rv ** s / fact
            return total / Qk_d.eval_float(g)

        data.R_k_num = _r_value
        for u in range(2, k):
            fn = (lambda y, u=u: _c_value(u, y))
            data.C_u_num[u] = fn
            data.C_zero[u] = all(abs(fn(y)) <= _NUMERIC_TOL for y in _SAMPLE_POINTS)
        data.numeric_verdict = True

    nonzero = [u for u in range(2, k) if not data.C_zero.get(u, True)]
    data.s0 = min(nonzero) if nonzero else None

    r_const = data.R_k.constant_value() if data.R_k is not None else None
    if r_const is not None:
        data.constant_d = Fraction(dq.n_part.eval(r_const)) - Fraction(dp.part(0).eval(0))
    return data


def _radical_pattern(Qk: UniPoly, Pk: UniPoly) -> Optional[Tuple[int, int, Tuple[int, ...]]]:
    """Match Q_k(y) = y^a against P_k(y) = sum_{j=b..a} alpha_j y^j."""
    a = Qk.degree()
    if Qk[a] != 1 or any(Qk[s] != 0 for s in range(a)):
        return None
    if Pk.degree() > a or Pk.eval(0) != 0:
        return None
    b = next((s for s in range(1, a + 1) if Pk[s] != 0), None)
    if b is None:
        return None
    alphas = tuple(int(Pk[j]) for j in range(b, a + 1))
    if any(Fraction(Pk[j]).denominator != 1 for j in range(b, a + 1)):
        return None
    return a, b, alphas


# ----------------------------------------------------------------------
# Exact difference identity
# ----------------------------------------------------------------------

def lemma_identity_residual(q: BivariatePoly, p: BivariatePoly,
                            n: int, N: int, m: int,
                            data: Optional[RelatedData] = None
                            ) -> Union[Fraction, float]:
    """LHS - RHS of the exact difference identity

        q(m,N) - p(n,N) = q0(R_k(y)) - P_0 + Q_k'(gamma_k(y)) N^(k-1) H_{N,y}(xi)

    with y = n/N and xi = m - N*gamma_k(y) - R_k(y).  H_{N,y} is rebuilt
    constructively: its constant term from the C_u formula and its higher
    coefficients by the double Taylor re-expansion (around gamma_k(y), then
    around R_k(y)).  Exact Fraction arithmetic when gamma is rational linear
    (must give exactly 0); float residual otherwise.
    """
    if data is None:
        data = structure_functions(q, p)
    if data.gamma_kind is GammaKind.RATIONAL_LINEAR:
        return _identity_residual_exact(q, p, data, n, N, m)
    return _identity_residual_numeric(q, p, data, n, N, m)


def _h_poly_coeffs(data: RelatedData, y: Fraction, N: int
                   ) -> Tuple[List[Fraction], Fraction, Fraction, Fraction]:
    """Coefficients of H_{N,y} plus (gamma, R, Qk'(gamma)) at exact y."""
    k = data.k
    gamma = data.gamma_c * y
    R = data.R_k.eval(y)
    Qk_d_gamma = Fraction(data.q_parts[k].derivative().eval(gamma))
    if Qk_d_gamma == 0:
        raise ZeroDivisionError("Q_k'(gamma_k(y)) vanishes; identity undefined here")

    # Taylor coefficients of G(x) = q_N(N gamma + x) - p_N(n): coefficient of
    # x^s is sum_{u>=s} N^(k-u) * Q_{s+k-u}^{(s)}(gamma)/s!.
    g_coeffs: List[Fraction] = []
    for s in range(k + 1):
        total = Fraction(0)
        for u in range(s, k + 1):
            j = s + k - u
            if j < 0 or j > k:
                continue
            total += Fraction(N) ** (k - u) * Fraction(data.q_parts[j].taylor_coefficient(s, gamma))
        g_coeffs.append(total)

    scale = Qk_d_gamma * Fraction(N) ** (k - 1)
    # Re-center at R: coefficient of xi^s in G(xi + R), for s >= 1.
    h: List[Fraction] = [Fraction(0)] * (k + 1)
    for s in range(1, k + 1):
        acc = Fraction(0)
        for sp in range(s, k + 1):
            acc += g_coeffs[sp] * math.comb(sp, s) * R ** (sp - s)
        h[s] = acc / scale
    # Constant term from the C_u formula (the identity's real claim).
    h0 = Fraction(0)
    for u in range(2, k):
        h0 += Fraction(N) ** (-(u - 1)) * data.C_u[u].eval(y)
    h[0] = h0
    return h, gamma, R, Qk_d_gamma


def _identity_residual_exact(q: BivariatePoly, p: BivariatePoly,
                             data: RelatedData, n: int, N: int, m: int) -> Fraction:
    y = Fraction(n, N)
    h, gamma, R, Qk_d_gamma = _h_poly_coeffs(data, y, N)
    xi = Fraction(m) - N * gamma - R
    H = Fraction(0)
    for s in range(len(h) - 1, -1, -1):
        H = H * xi + h[s]
    d0 = Fraction(data.q_n_part.eval(R)) - Fraction(data.p_parts[0].eval(0))
    rhs = d0 + Qk_d_gamma * Fraction(N) ** (data.k - 1) * H
    lhs = Fraction(q.eval(m, N)) - Fraction(p.eval(n, N))
    return lhs - rhs


def identity_residual_grid(q: BivariatePoly, p: BivariatePoly,
                           Ns: Sequence[int], n_range: Sequence[int],
                           m_range: Sequence[int],
                           data: Optional[RelatedData] = None) -> Fraction:
    """Max |residual| of the exact identity over a (N, n, m) grid.

    Hoists the H-coefficient construction out of the m sweep, so the cost is
    O(|Ns| |n| k^2) constructions plus O(|Ns| |n| |m| k) Horner evaluations.
    Exact-arithmetic pairs only.
    """
    if data is None:
        data = structure_functions(q, p)
    if data.gamma_kind is not GammaKind.RATIONAL_LINEAR:
        raise ValueError("grid residuals require the exact rational structure")
    worst = Fraction(0)
    k = data.k
    for N in Ns:
        q_vals = {m: Fraction(q.eval(m, N)) for m in m_range}
        Nk1 = Fraction(N) ** (k - 1)
        for n in n_range:
            y = Fraction(n, N)
            h, gamma, R, Qk_d_gamma = _h_poly_coeffs(data, y, N)
            d0 = Fraction(data.q_n_part.eval(R)) - Fraction(data.p_parts[0].eval(0))
            p_val = Fraction(p.eval(n, N))
            scale = Qk_d_gamma * Nk1
            base = N * gamma + R
            for m in m_range:
                xi = Fraction(m) - base
                H = Fraction(0)
                for s in range(len(h) - 1, -1, -1):
                    H = H * xi + h[s]
                residual = q_vals[m] - p_val - d0 - scale * H
                if residual != 0:
                    worst = max(worst, abs(residual))
    return worst


def _identity_residual_numeric(q: BivariatePoly, p: BivariatePoly,
                               data: RelatedData, n: int, N: int, m: int) -> float:
    k = data.k
    y = n / N
    gamma = data.gamma(y)
    R = data.R_k_num(y)
    q_parts = data.q_parts
    Qk_d_gamma = q_parts[k].derivative().eval_float(gamma)
    g_coeffs = []
    for s in range(k + 1):
        total = 0.0
        fact = math.factorial(s)
        for u in range(s, k + 1):
            j = s + k - u
            if 0 <= j <= k:
                total += float(N) ** (k - u) * q_parts[j].derivative(s).eval_float(gamma) / fact
        g_coeffs.append(total)
    xi = m - N * gamma - R
    # H(xi) = h_0 + sum_{s>=1} h_s xi^s with the same double re-expansion.
    hs = []
    for s in range(1, k + 1):
        acc = 0.0
        for sp in range(s, k + 1):
            acc += g_coeffs[sp] * math.comb(sp, s) * R ** (sp - s)
        hs.append(acc / (Qk_d_gamma * float(N) ** (k - 1)))
    h0 = 0.0
    for u in range(2, k):
        h0 += float(N) ** (-(u - 1)) * data.C_u_num[u](y)
    H = h0 + sum(h * xi ** (s + 1) for s, h in enumerate(hs))
    d0 = data.q_n_part.eval_float(R) - float(data.p_parts[0].eval(0))
    rhs = d0 + Qk_d_gamma * float(N) ** (k - 1) * H
    lhs = float(q.eval(m, N) - p.eval(n, N))
    return lhs - rhs


# ----------------------------------------------------------------------
# Proposition-1 style lower bound
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Prop1Result:
    bound: Optional[float]
    holds: Optional[bool]
    equal_values: bool
    delta: Optional[float] = None


def prop1_lower_bound(q: BivariatePoly, p: BivariatePoly, H: BivariatePoly,
                      Q: BivariatePoly, P: BivariatePoly,
                      s: BivariatePoly, r: BivariatePoly,
                      n: int, m: int, N: int) -> Prop1Result:
    """Check |q_N(m) - p_N(n)| >= Delta_N(n,m) |H(N)| - |s(m,N) - r(n,N)|.

    The decompositions p = H*P + r and q = H*Q + s are verified exactly;
    Delta uses monotone numeric inversion of the fixed-N univariate slices.
    """
    if any(i > 0 for (i, _) in H.coeffs):
        raise ValueError("H must depend on N only")
    if (H * P + r) != p or (H * Q + s) != q:
        raise ValueError("decomposition mismatch: p != H*P + r or q != H*Q + s")
    if H.degree() <= max(s.degree(), r.degree()):
        raise ValueError("deg H must exceed max(deg s, deg r)")

    pN, qN = p.univariate_in_n(N), q.univariate_in_n(N)
    if not (pN.eval(n) > qN.eval(0) and qN.eval(m) > pN.eval(0)):
        raise ValueError("requires p_N(n) > q_N(0) and q_N(m) > p_N(0)")

    QN, PN = Q.univariate_in_n(N), P.univariate_in_n(N)
    if QN.eval(m) == PN.eval(n):
        return Prop1Result(bound=None, holds=None, equal_values=True)

    t = QN.inverse_at(PN.eval(n))
    u = PN.inverse_at(QN.eval(m))
    QNd, PNd = QN.derivative(), PN.derivative()
    delta = min(QNd.eval_float(t) / QNd.eval_float(float(m)),
                PNd.eval_float(u) / PNd.eval_float(float(n)))
    hval = abs(H.eval(0, N))
    bound = delta * float(hval) - abs(float(s.eval(m, N)) - float(r.eval(n, N)))
    lhs = abs(q.eval(m, N) - p.eval(n, N))
    return Prop1Result(bound=bound, holds=float(lhs) >= bound, equal_values=False,
                       delta=delta)


# ----------------------------------------------------------------------
# Empirical explosion certificate
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExplosionCertificate:
    """Exact minimal gaps min_m |q(m,N) - p(n,N)| scanned over n in (dN, N].

    ``violator_density[c]`` is the fraction of scanned n whose gap is < c*N;
    m ranges over all positive integers (the bracketing inverse never needs
    an upper cutoff since q_N is strictly increasing).
    """

    N: int
    delta: float
    violator_density: Dict[float, float]
    max_certified_c: float
    scanned: int
    gap_zero_n: Tuple[int, ...] = ()


def explosion_certificate(q: BivariatePoly, p: BivariatePoly, delta: float,
                          N: int, c_grid: Sequence[float] = (0.0, 0.001, 0.01, 0.05, 0.1, 0.25, 0.5)
                          ) -> ExplosionCertificate:
    """Scan n with delta*N < n <= N; for each, the exact minimal integer gap."""
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if N < 100:
        raise ValueError("N too small for a meaningful certificate")
    if not q.is_family_member() or not p.is_family_member():
        raise ValueError("certificate requires family polynomials")
    lo = int(math.floor(delta * N)) + 1
    ns = range(lo, N + 1)
    if not len(ns):
        raise ValueError("empty scan range")

    qN = q.univariate_in_n(N)
    gaps: List[int] = []
    zero_hits: List[int] = []
    for n in ns:
        target = p.eval(n, N)
        g = _min_gap_monotone(qN, target)
        gaps.append(g)
        if g == 0:
            zero_hits.append(n)
    count = len(gaps)
    density = {}
    for c in sorted(set(float(c) for c in c_grid)):
        threshold = c * N
        viol = sum(1 for g in gaps if g < threshold) if c > 0 else sum(1 for g in gaps if g == 0)
        # c = 0 means exact hits; positive thresholds use the strict < c*N rule.
        density[c] = viol / count
    budget = delta * N
    certified = [c for c in density if c > 0 and density[c] * count <= budget]
    return ExplosionCertificate(
        N=N, delta=delta, violator_density=density,
        max_certified_c=max(certified) if certified else 0.0,
        scanned=count, gap_zero_n=tuple(zero_hits),
    )


def _min_gap_monotone(qN: UniPoly, target: int) -> int:
    """min over integers m >= 1 of |q_N(m) - target| via monotone bracketing."""
    if qN.eval(1) >= target:
        return abs(qN.eval(1) - target)
    lo, hi = 1, 2
    while qN.eval(hi) < target:
        lo, hi = hi, hi * 2
    # invariant: q_N(lo) < target <= q_N(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if qN.eval(mid) < target:
            lo = mid
        else:
            hi = mid
    return min(target - qN.eval(lo), qN.eval(hi) - target)


# ----------------------------------------------------------------------
# Perfect-power sieve and the totient inequality
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SieveResult:
    count: int
    density: float
    witnesses: Tuple[Tuple[int, int, int, int], ...]  # (n, m, v, z)


def sieve_density(a: int, b: int, alphas: Sequence[int], N: int) -> SieveResult:
    """Exact scan of m^a = sum_{j=b..a} alpha_j n^j N^(a-j) over n in [1, N].

    Each witness is decomposed as n = v z^a with v = gcd(n, N), verifying the
    structural claim behind the rarity bound.
    """
    if not (a > b >= 1):
        raise ValueError("requires a > b >= 1")
    if math.gcd(a, b) != 1:
        raise ValueError("a and b must be coprime")
    alphas = list(alphas)
    if len(alphas) != a - b + 1:
        raise ValueError("alphas must list coefficients for j = b..a")
    if abs(alphas[0]) != 1:
        raise ValueError("|alpha_b| must equal 1")

    Npow = [N ** e for e in range(a - b + 1)]
    witnesses: List[Tuple[int, int, int, int]] = []
    for n in range(1, N + 1):
        npow = n ** b
        rhs = 0
        for idx, alpha in enumerate(alphas):
            # j = b + idx contributes alpha * n^j * N^(a-j)
            rhs += alpha * npow * Npow[a - b - idx]
            npow *= n
        if rhs <= 0:
            continue
        m = _is_perfect_power(rhs, a)
        if m is not None:
            v = math.gcd(n, N)
            z = _iroot(n // v, a)
            witnesses.append((n, m, v, z))
    return SieveResult(count=len(witnesses), density=len(witnesses) / N,
                       witnesses=tuple(witnesses))


@dataclass(frozen=True)
class TotientBound:
    phi: int
    R: float
    holds: bool


def totient_value(M: int) -> int:
    """Euler phi by trial-division factorization."""
    if M < 1:
        raise ValueError("M must be positive")
    phi, rem, p = M, M, 2
    while p * p <= rem:
        if rem % p == 0:
            phi -= phi // p
            while rem % p == 0:
                rem //= p
        p += 1 if p == 2 else 2
    if rem > 1:
        phi -= phi // rem
    return phi


def totient_lower_bound(M: int) -> float:
    """R(M) = M / (e^gamma ln ln M + 3 / ln ln M), valid for M > 2."""
    if M <= 2:
        raise ValueError("bound defined for M > 2")
    ll = math.log(math.log(M))
    return M / (math.exp(EULER_GAMMA) * ll + 3.0 / ll)


def totient_bound(M: int) -> TotientBound:
    phi = totient_value(M)
    R = totient_lower_bound(M)
    return TotientBound(phi=phi, R=R, holds=phi >= R)


def totient_scan(limit: int) -> Tuple[bool, int, float]:
    """Check phi(M) >= R(M) for every 3 <= M <= limit with a sieve.

    Returns (all_hold, argmin M, min margin phi - R).  The sieve route is
    cross-validated against the trial-division route in the test suite.
    """
    import numpy as np

    phi = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if phi[p] == p:  # p prime
            phi[p::p] -= phi[p::p] // p
    M = np.arange(3, limit + 1, dtype=np.float64)
    ll = np.log(np.log(M))
    R = M / (math.exp(EULER_GAMMA) * ll + 3.0 / ll)
    margin = phi[3:].astype(np.float64) - R
    worst = int(np.argmin(margin))
    return bool((margin >= 0).all()), worst + 3, float(margin[worst])


# ----------------------------------------------------------------------
# The decision tree
# ----------------------------------------------------------------------

class PairKind(Enum):
    BOTH_LINEAR = "both_linear"
    DIFFERENT_DEGREE = "different_degree"
    LINEARLY_RELATED = "linearly_related"
    Q_EQUIVALENT = "q_equivalent"
    FRACTIONAL_EXPLODING = "fractional_exploding"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PairVerdict:
    kind: PairKind
    explodes: str  # "yes" | "no" | "unknown"
    c: Optional[Union[Fraction, float]] = None
    r: Optional[Union[Fraction, float]] = None
    d: Optional[Fraction] = None
    exact: bool = True
    radical: Optional[Tuple[int, int, Tuple[int, ...]]] = None
    evidence: Optional[ExplosionCertificate] = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "explodes": self.explodes, "exact": self.exact}
        for name in ("c", "r", "d"):
            v = getattr(self, name)
            if v is not None:
                out[name] = str(v) if isinstance(v, Fraction) else v
        if self.radical is not None:
            a, b, alphas = self.radical
            out["radical"] = {"a": a, "b": b, "alphas": list(alphas)}
        if self.evidence is not None:
            out["certificate"] = {
                "N": self.evidence.N,
                "delta": self.evidence.delta,
                "violator_density": {str(k): v for k, v in self.evidence.violator_density.items()},
                "max_certified_c": self.evidence.max_certified_c,
            }
        return out


def classify_pair(qi: BivariatePoly, qj: BivariatePoly,
                  certificate_N: int = 1000,
                  certificate_delta: float = 0.1) -> PairVerdict:
    """Full decision tree for a pair of family polynomials."""
    if not qi.is_family_member() or not qj.is_family_member():
        raise ValueError("classify_pair expects family polynomials "
                         "(nonnegative integer coefficients, n-dependent)")
    ki, kj = qi.degree(), qj.degree()
    if ki != kj:
        return PairVerdict(kind=PairKind.DIFFERENT_DEGREE, explodes="yes")
    if ki == 1:
        return PairVerdict(kind=PairKind.BOTH_LINEAR, explodes="no")

    try:
        rel = detect_linear_relation(qi, qj)
    except ValueError:
        rel = None
    if rel is not None:
        if rel.exact:
            qe = detect_q_equivalence(qi, qj)
            if qe is not None:
                c, r, d = qe
                return PairVerdict(kind=PairKind.Q_EQUIVALENT, explodes="no",
                                   c=c, r=r, d=d)
        return PairVerdict(kind=PairKind.LINEARLY_RELATED, explodes="yes",
                           c=rel.c, r=rel.r, exact=rel.exact)

    radical = _fractional_exploding(qi, qj) or _ncor_exploding(qi, qj)
    if radical is not None:
        return PairVerdict(kind=PairKind.FRACTIONAL_EXPLODING, explodes="yes",
                           radical=radical)

    cert = explosion_certificate(qj, qi, certificate_delta, certificate_N)
    return PairVerdict(kind=PairKind.UNKNOWN, explodes="unknown", evidence=cert)


def _fractional_exploding(qi: BivariatePoly, qj: BivariatePoly
                          ) -> Optional[Tuple[int, int, Tuple[int, ...]]]:
    """Radical gamma with R_k == 0, coprimality and the a < s window."""
    for q, p in ((qi, qj), (qj, qi)):
        try:
            data = structure_functions(q, p)
        except ValueError:
            continue
        if data.gamma_kind is not GammaKind.RADICAL:
            continue
        a, b, alphas = data.radical
        if math.gcd(a, b) != 1 or abs(alphas[0]) != 1 or not (a > b >= 1):
            continue
        r_zero = (data.R_k.is_zero() if data.R_k is not None
                  else all(abs(data.R_k_num(y)) <= _NUMERIC_TOL for y in _SAMPLE_POINTS))
        if not r_zero:
            continue
        s_max = (data.s0 - 1) if data.s0 is not None else data.k - 1
        if a < s_max:
            return (a, b, alphas)
    return None


def _ncor_exploding(qi: BivariatePoly, qj: BivariatePoly
                    ) -> Optional[Tuple[int, int, Tuple[int, ...]]]:
    """Common N^e factor with Q = m^a and P = sum alpha_j n^j N^(a-j)."""
    e = min(qi.min_N_exponent(), qj.min_N_exponent())
    if e < 1:
        return None
    for q, p in ((qi, qj), (qj, qi)):
        Q = BivariatePoly({(i, j - e): c for (i, j), c in q.coeffs.items()})
        P = BivariatePoly({(i, j - e): c for (i, j), c in p.coeffs.items()})
        # Q must be the pure monomial m^a.
        if set(Q.coeffs) != {(max(i for i, _ in Q.coeffs), 0)}:
            continue
        (a, _), coeff = next(iter(Q.coeffs.items()))
        if coeff != 1 or a < 2:
            continue
        # P homogeneous of total degree a in (n, N) with n-exponents in [b, a].
        if any(i + j != a or i < 1 for (i, j) in P.coeffs):
            continue
        b = min(i for (i, _) in P.coeffs)
        if not (a > b >= 1) or math.gcd(a, b) != 1:
            continue
        alpha_b = P.coeffs.get((b, a - b), 0)
        if abs(alpha_b) != 1:
            continue
        alphas = tuple(int(P.coeffs.get((jj, a - jj), 0)) for jj in range(b, a + 1))
        return (a, b, alphas)
    return None
