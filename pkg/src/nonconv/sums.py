"""Observables, their zero-marginal decomposition, and nonconventional sums.

S_N(t) = N^(-1/2) * sum_{n <= [Nt]} F(xi_{q_1(n,N)}, ..., xi_{q_ell(n,N)})
is realized by exact index evaluation through :mod:`nonconv.polyalg` and a
single lookup pass over the generated process; the recurrence counter M(N)
is the uncentered indicator special case and is recomputed here by an
independent scan for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from .ordering import PolyFamily
from .process import BaseM, CapabilityError, ProcessModel, generate


@dataclass(frozen=True)
class TensorTable:
    """F as an ell-dimensional table over a finite alphabet."""

    table: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise ValueError("table entries must be finite")
        object.__setattr__(self, "table", arr)

    @property
    def ell(self) -> int:
        return self.table.ndim

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.table)))


@dataclass(frozen=True)
class BlackBox:
    """Opaque evaluator with declared growth/smoothness data (K, iota, kappa)."""

    fn: Callable[..., float]
    ell: int
    K: float
    iota: float = 0.0
    kappa: float = 1.0


Observable = Union[TensorTable, BlackBox]


def indicator_product(alphabet_sizes: Sequence[int], targets: Sequence[Sequence[int]]) -> TensorTable:
    """Indicator of xi_{q_j} in A_j for every j, as a tensor table."""
    if len(alphabet_sizes) != len(targets):
        raise ValueError("one target set per coordinate")
    table = np.ones(tuple(alphabet_sizes))
    for axis, targets_j in enumerate(targets):
        mask = np.zeros(alphabet_sizes[axis])
        mask[list(targets_j)] = 1.0
        shape = [1] * len(alphabet_sizes)
        shape[axis] = alphabet_sizes[axis]
        table = table * mask.reshape(shape)
    return TensorTable(table)


# ----------------------------------------------------------------------
# Assumption gates
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    moment_ok: bool
    clt_ok: bool
    reasons: Tuple[str, ...]


def check_assumptions(w: float, q: float, v: float, iota: float, kappa: float,
                      theta: float) -> AssumptionReport:
    """Gate: w > 4 with 1/w > iota/v + kappa/q, and theta > 4w/(w-2)."""
    if min(w, q, v, kappa, theta) <= 0 or iota < 0:
        raise ValueError("parameters must be positive (iota may be zero)")
    reasons: List[str] = []
    moment_ok = True
    if w <= 4:
        moment_ok = False
        reasons.append(f"w={w} must exceed 4")
    if 1.0 / w <= iota / v + kappa / q:
        moment_ok = False
        reasons.append(f"1/w={1.0 / w:.6g} must exceed iota/v + kappa/q="
                       f"{iota / v + kappa / q:.6g}")
    threshold = 4.0 * w / (w - 2.0) if w > 2 else math.inf
    clt_ok = theta > threshold
    if not clt_ok:
        reasons.append(f"theta={theta} must exceed 4w/(w-2)={threshold:.6g}")
    return AssumptionReport(moment_ok=moment_ok, clt_ok=clt_ok, reasons=tuple(reasons))


# ----------------------------------------------------------------------
# Product-measure integrals and the zero-marginal decomposition
# ----------------------------------------------------------------------

def _weights(mu: Sequence, exact: bool):
    if exact:
        return [Fraction(x) for x in mu]
    return np.asarray([float(x) for x in mu])


def bar_F(obs: Observable, mu: Sequence, exact: bool = False) -> Union[float, Fraction]:
    """Integral of F against the product measure mu x ... x mu.

    ``exact=True`` runs the contraction in Fraction arithmetic (table entries
    are converted through their exact binary values).
    """
    if not isinstance(obs, TensorTable):
        raise ValueError("exact product integrals require a TensorTable")
    if exact:
        w = _weights(mu, True)
        total = Fraction(0)
        for idx in iter_product(*(range(s) for s in obs.table.shape)):
            cell = Fraction(float(obs.table[idx]))
            for axis, pos in enumerate(idx):
                cell *= w[pos]
            total += cell
        return total
    out = obs.table
    w = _weights(mu, False)
    for _ in range(obs.ell):
        out = np.tensordot(out, w, axes=([out.ndim - 1], [0]))
    return float(out)


@dataclass(frozen=True)
class Decomposition:
    """Parts F_{eps,1}..F_{eps,ell}; part j is a j-dim table over
    (x_{eps(1)}, ..., x_{eps(j)})."""

    perm: Tuple[int, ...]  # 0-based permutation eps
    parts: Tuple[np.ndarray, ...]
    mean: float

    def part(self, j: int) -> np.ndarray:
        """1-based accessor matching the F_{eps,j} notation."""
        return self.parts[j - 1]


def decompose_F(obs: TensorTable, mu: Sequence, perm: Sequence[int],
                check_tol: float = 1e-12) -> Decomposition:
    """Iterated partial integration along the reversed permutation order.

    Invariants verified at construction: integrating any part over its last
    coordinate against mu gives 0, and the parts telescope to F - bar_F.
    """
    if not isinstance(obs, TensorTable):
        raise ValueError("decomposition requires a TensorTable")
    ell = obs.ell
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(ell)):
        raise ValueError("perm must be a 0-based permutation of the coordinates")
    w = np.asarray([float(x) for x in mu])

    # Reorder axes to (eps(1), ..., eps(ell)).
    T = np.transpose(obs.table, axes=perm)
    partial = [T]  # partial[t] = F integrated over the last t reordered axes
    for _ in range(ell):
        partial.append(np.tensordot(partial[-1], w, axes=([partial[-1].ndim - 1], [0])))
    mean = float(partial[-1])

    parts: List[np.ndarray] = []
    for j in range(1, ell + 1):
        G_j = partial[ell - j]        # function of first j reordered coords
        G_prev = partial[ell - j + 1]  # function of first j-1
        parts.append(G_j - np.expand_dims(G_prev, axis=-1) if j > 1 else G_j - G_prev)

    for j, part in enumerate(parts, start=1):
        marg = np.tensordot(part, w, axes=([part.ndim - 1], [0]))
        if float(np.max(np.abs(marg))) > check_tol:
            raise AssertionError(f"zero-last-marginal violated for part {j}")
    telescoped = sum(
        part.reshape(part.shape + (1,) * (ell - j)) for j, part in enumerate(parts, start=1)
    )
    if float(np.max(np.abs(telescoped - (T - mean)))) > check_tol:
        raise AssertionError("telescoping identity violated")
    return Decomposition(perm=perm, parts=tuple(parts), mean=mean)


# ----------------------------------------------------------------------
# Paths
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PathSample:
    N: int
    grid: Tuple[float, ...]
    values: Tuple[float, ...]  # S_N(t) on the grid
    seed: int
    required_length: int

    def value_at(self, t: float) -> float:
        return self.values[self.grid.index(t)]


def family_indices(family: PolyFamily, N: int) -> List[np.ndarray]:
    """Exact index arrays q_i(n, N), n = 1..N, int64-checked."""
    out = []
    n_arr = np.arange(1, N + 1, dtype=np.int64)
    for p in family.polys:
        if p.eval(N, N) >= 2 ** 62:
            raise CapabilityError("index magnitude exceeds the int64 fast path")
        acc = np.zeros(N, dtype=np.int64)
        for (i, j), c in p.coeffs.items():
            acc += int(c) * (N ** j) * n_arr ** i
        out.append(acc)
    return out


def path_summands(family: PolyFamily, obs: Observable, model: ProcessModel,
              N: int, seed: int) -> np.ndarray:
    """Per-n values F(Xi_{n,N}) for n = 1..N."""
    idx = family_indices(family, N)
    max_index = int(max(int(a[-1]) for a in idx))  # family polys increase in n
    if isinstance(model, BaseM):
        vals = [generate(model, a.astype(np.uint64), seed) for a in idx]
    else:
        prefix = generate(model, max_index + 1, seed)
        vals = [prefix[a] for a in idx]
    if isinstance(obs, TensorTable):
        return obs.table[tuple(vals)]
    fn = np.vectorize(obs.fn)
    return fn(*vals).astype(np.float64)


def compute_path(family: PolyFamily, obs: Observable, model: ProcessModel,
                 N: int, grid: Sequence[float], seed: int) -> PathSample:
    """Realize S_N on a time grid; deterministic in (seed, configuration)."""
    grid = tuple(sorted(float(t) for t in grid))
    if grid and (grid[0] < 0.0 or grid[-1] > 1.0):
        raise ValueError("grid must lie inside [0, 1]")
    summands = path_summands(family, obs, model, N, seed)
    csum = np.concatenate([[0.0], np.cumsum(summands)])
    scale = 1.0 / math.sqrt(N)
    values = tuple(float(csum[int(math.floor(N * t))]) * scale for t in grid)
    idx = family_indices(family, N)
    required = 1 + int(max(int(a[-1]) for a in idx))
    return PathSample(N=N, grid=grid, values=values, seed=seed,
                      required_length=required)


def count_recurrences(family: PolyFamily, model: ProcessModel, N: int,
                      targets: Sequence[Sequence[int]], seed: int) -> int:
    """M(N) = #{n <= N : xi_{q_j(n,N)} in A_j for every j}.

    Written as an independent scan (per-n boolean conjunction over exact
    indices) rather than reusing the path accumulator, so the identity
    M(N) = sqrt(N) * S_N(1) on a shared seed is a real cross-check.
    """
    if len(targets) != family.ell:
        raise ValueError("one target set per family member")
    sets = [frozenset(int(v) for v in t) for t in targets]
    idx = family_indices(family, N)
    if isinstance(model, BaseM):
        vals = [generate(model, a.astype(np.uint64), seed) for a in idx]
    else:
        prefix = generate(model, 1 + int(max(int(a[-1]) for a in idx)), seed)
        vals = [prefix[a] for a in idx]
    count = 0
    for n0 in range(N):
        hit = True
        for j in range(family.ell):
            if int(vals[j][n0]) not in sets[j]:
                hit = False
                break
        if hit:
            count += 1
    return count
