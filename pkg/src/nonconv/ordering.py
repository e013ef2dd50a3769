"""Finite-N ordering partition of a polynomial family.

For a family q_1, ..., q_ell the scanner splits [1, N] into maximal runs on
which the exact values q_i(n, N) are strictly sorted by one fixed
permutation.  Ties, runs shorter than ceil(sqrt(N)) and runs whose
permutation mixes degree blocks are routed to the exceptional set; the
surviving segments realize the asymptotic interval partition, with the
per-segment interior minimum gap between consecutive same-nonlinear-degree
values recorded for the sqrt(N)-gap audit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .polyalg import BivariatePoly, format_poly
from .classify import PairVerdict, classify_pair


@dataclass(frozen=True)
class PolyFamily:
    """Ordered family q_1..q_ell with nondecreasing degrees."""

    polys: Tuple[BivariatePoly, ...]

    def __init__(self, polys: Sequence[BivariatePoly]):
        object.__setattr__(self, "polys", tuple(polys))
        if not self.polys:
            raise ValueError("empty family")

    @property
    def ell(self) -> int:
        return len(self.polys)

    @property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(p.degree() for p in self.polys)

    def linear_form(self, i: int) -> Optional[Tuple[int, int]]:
        """(a, b) when q_i == a*n + b*N with a >= 1, else None."""
        p = self.polys[i]
        if p.degree() != 1 or not set(p.coeffs) <= {(1, 0), (0, 1)}:
            return None
        a = p.coeffs.get((1, 0), 0)
        b = p.coeffs.get((0, 1), 0)
        if a < 1:
            return None
        return int(a), int(b)

    def max_index(self, N: int) -> int:
        """1 + the largest sequence index any member reaches by n = N."""
        return max(int(p.eval(N, N)) for p in self.polys)

    def degree_blocks(self) -> List[Tuple[int, ...]]:
        """Indices grouped by degree, in family order."""
        blocks: List[List[int]] = []
        for i, d in enumerate(self.degrees):
            if blocks and self.degrees[blocks[-1][0]] == d:
                blocks[-1].append(i)
            else:
                blocks.append([i])
        return [tuple(b) for b in blocks]

    def describe(self) -> List[str]:
        return [format_poly(p) for p in self.polys]


def d_min(family: PolyFamily, n: int, m: int, N: int) -> int:
    """Exact min over all index pairs of |q_i(n,N) - q_j(m,N)| (includes i=j)."""
    vals_n = [p.eval(n, N) for p in family.polys]
    vals_m = [p.eval(m, N) for p in family.polys]
    return min(abs(a - b) for a in vals_n for b in vals_m)


@dataclass(frozen=True)
class Segment:
    lo: int
    hi: int
    perm: Tuple[int, ...]  # 1-based poly indices, ascending value order
    min_same_degree_gap: Optional[int]

    def length(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class OrderingPartition:
    N: int
    segments: Tuple[Segment, ...]
    exceptional: Tuple[int, ...]

    def exceptional_fraction(self) -> float:
        return len(self.exceptional) / self.N

    def permutation_lengths(self) -> Dict[Tuple[int, ...], int]:
        out: Dict[Tuple[int, ...], int] = {}
        for seg in self.segments:
            out[seg.perm] = out.get(seg.perm, 0) + seg.length()
        return out


def _values_matrix(family: PolyFamily, N: int) -> List[Sequence[int]]:
    """Exact values q_i(n, N), n = 1..N, with a fast int64 path when safe."""
    rows: List[Sequence[int]] = []
    n_arr = np.arange(1, N + 1, dtype=np.int64)
    for p in family.polys:
        top = p.eval(N, N)
        if abs(top) < 2 ** 62:
            acc = np.zeros(N, dtype=np.int64)
            for (i, j), c in p.coeffs.items():
                acc += int(c) * (N ** j) * n_arr ** i
            rows.append(acc)
        else:
            rows.append([p.eval(n, N) for n in range(1, N + 1)])
    return rows


def scan_partition(family: PolyFamily, N: int) -> OrderingPartition:
    """Exact linear scan n = 1..N; see the module docstring for the rules."""
    ell = family.ell
    if N < ell * ell:
        raise ValueError("N must be at least ell^2")
    values = _values_matrix(family, N)
    degrees = family.degrees
    blocks = family.degree_blocks()
    block_of = {}
    for bi, block in enumerate(blocks):
        for i in block:
            block_of[i] = bi

    min_len = math.isqrt(N)
    if min_len * min_len < N:
        min_len += 1  # ceil(sqrt(N))

    perms: List[Optional[Tuple[int, ...]]] = []
    for n0 in range(N):
        vals = [values[i][n0] for i in range(ell)]
        order = sorted(range(ell), key=lambda i: vals[i])
        tie = any(vals[order[t]] == vals[order[t + 1]] for t in range(ell - 1))
        perms.append(None if tie else tuple(order))

    exceptional: List[int] = []
    segments: List[Segment] = []
    run_start = 0
    for pos in range(1, N + 1):
        if pos < N and perms[pos] == perms[run_start]:
            continue
        perm = perms[run_start]
        lo_n, hi_n = run_start + 1, pos  # 1-based n range of the closed run
        if perm is None:
            exceptional.extend(range(lo_n, hi_n + 1))
        elif (hi_n - lo_n + 1) < min_len or not _respects_blocks(perm, block_of):
            exceptional.extend(range(lo_n, hi_n + 1))
        else:
            gap = _interior_min_gap(values, degrees, perm, lo_n, hi_n, min_len)
            segments.append(Segment(lo=lo_n, hi=hi_n,
                                    perm=tuple(i + 1 for i in perm),
                                    min_same_degree_gap=gap))
        run_start = pos
    return OrderingPartition(N=N, segments=tuple(segments),
                             exceptional=tuple(sorted(exceptional)))


def _respects_blocks(perm: Tuple[int, ...], block_of: Dict[int, int]) -> bool:
    """Tensor structure: rank order never interleaves distinct degree blocks."""
    seen = [block_of[i] for i in perm]
    return all(seen[t] <= seen[t + 1] for t in range(len(seen) - 1))


def _interior_min_gap(values, degrees, perm, lo_n, hi_n, trim) -> Optional[int]:
    """Min gap between consecutive same-nonlinear-degree values, interior only.

    The segment is trimmed by ceil(sqrt(N)) on both sides, mirroring the
    asymptotic construction's trimming of interval endpoints; falls back to
    the full run when the trim empties it.
    """
    pairs = [(perm[t], perm[t + 1]) for t in range(len(perm) - 1)
             if degrees[perm[t]] == degrees[perm[t + 1]] and degrees[perm[t]] > 1]
    if not pairs:
        return None
    a, b = lo_n + trim, hi_n - trim
    if a > b:
        a, b = lo_n, hi_n
    best: Optional[int] = None
    for i, j in pairs:
        vi, vj = values[i], values[j]
        if isinstance(vi, np.ndarray):
            seg_gap = int(np.min(vj[a - 1:b] - vi[a - 1:b]))
        else:
            seg_gap = min(vj[t] - vi[t] for t in range(a - 1, b))
        best = seg_gap if best is None else min(best, seg_gap)
    return best


@dataclass(frozen=True)
class FamilyDiagnostics:
    a1_ok: bool
    a1_failures: Tuple[Tuple[int, int], ...]
    a2_report: Dict[Tuple[int, int], PairVerdict]
    degree_ok: bool
    nonconstant_diffs_ok: bool
    linear_form_ok: bool

    @property
    def ok(self) -> bool:
        return (self.a1_ok and self.degree_ok and self.nonconstant_diffs_ok
                and self.linear_form_ok)


def validate_family(family: PolyFamily, certificate_N: int = 500) -> FamilyDiagnostics:
    """Check the family hypotheses; Unknown pair verdicts are warnings only.

    A1 on linear pairs: (a_i - a_j) divisible by gcd(b_i, b_j), with
    gcd(0, x) = x and no constraint when both b's vanish.
    """
    ell = family.ell
    for p in family.polys:
        if not p.is_family_member():
            raise ValueError(f"not a family polynomial: {format_poly(p)}")

    degree_ok = all(family.degrees[i] <= family.degrees[i + 1] for i in range(ell - 1))

    linear_form_ok = all(
        family.linear_form(i) is not None
        for i in range(ell) if family.degrees[i] == 1
    )

    nonconstant = True
    for i in range(ell):
        for j in range(i + 1, ell):
            diff = family.polys[i] - family.polys[j]
            if all(e == (0, 0) for e in diff.coeffs):
                nonconstant = False

    a1_failures: List[Tuple[int, int]] = []
    for i in range(ell):
        for j in range(i + 1, ell):
            fi, fj = family.linear_form(i), family.linear_form(j)
            if fi is None or fj is None:
                continue
            g = math.gcd(fi[1], fj[1])
            if g != 0 and (fi[0] - fj[0]) % g != 0:
                a1_failures.append((i + 1, j + 1))

    a2_report: Dict[Tuple[int, int], PairVerdict] = {}
    for i in range(ell):
        for j in range(i + 1, ell):
            if family.degrees[i] == family.degrees[j] and family.degrees[i] > 1:
                a2_report[(i + 1, j + 1)] = classify_pair(
                    family.polys[i], family.polys[j], certificate_N=certificate_N)

    return FamilyDiagnostics(
        a1_ok=not a1_failures,
        a1_failures=tuple(a1_failures),
        a2_report=a2_report,
        degree_ok=degree_ok,
        nonconstant_diffs_ok=nonconstant,
        linear_form_ok=linear_form_ok,
    )
