"""Monte Carlo verification layer: SLLN, moment growth, limiting
covariances, Gaussianity, and the bounded-variance degeneracy proxy.

Replications are independent streams keyed by (seed, N, replication index);
reductions are fixed-order array operations, so every estimator is
deterministic in (seed, config) and invariant to worker scheduling.
Tolerances follow the 3-standard-error convention with the documented
finite-size slack terms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from . import _rng
from .classify import detect_q_equivalence
from .ordering import OrderingPartition, PolyFamily, scan_partition
from .process import FiniteMarkov, ProcessModel, build_markov, stationary_law
from .sums import Observable, TensorTable, bar_F, compute_path, decompose_F


@dataclass
class RunConfig:
    family: PolyFamily
    observable: Observable
    model: ProcessModel
    N: int
    time_grid: Tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    reps: int = 200
    seed: int = 0
    centered: bool = True
    threads: int = 1

    def centered_observable(self) -> TensorTable:
        values, mu = stationary_law(self.model)
        table = self.observable.table
        mean = bar_F(self.observable, [float(x) for x in mu])
        return TensorTable(table - mean)

    def effective_observable(self) -> Observable:
        if self.centered and isinstance(self.observable, TensorTable):
            return self.centered_observable()
        return self.observable


def _rep_seed(seed: int, N: int, rep: int) -> int:
    return _rng.stream_key(seed, N, rep)


def sample_paths(cfg: RunConfig, N: Optional[int] = None,
                 reps: Optional[int] = None,
                 grid: Optional[Sequence[float]] = None) -> np.ndarray:
    """Matrix S[r, j] of S_N(t_j) over replications; fixed-slot reduction."""
    N = N or cfg.N
    reps = reps or cfg.reps
    grid = tuple(grid) if grid is not None else cfg.time_grid
    obs = cfg.effective_observable()

    def one(rep: int) -> Tuple[int, Tuple[float, ...]]:
        path = compute_path(cfg.family, obs, cfg.model, N, grid,
                            _rep_seed(cfg.seed, N, rep))
        return rep, path.values

    out = np.empty((reps, len(grid)))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            for rep, values in pool.map(one, range(reps)):
                out[rep] = values
    else:
        for rep in range(reps):
            out[rep] = one(rep)[1]
    return out


# ----------------------------------------------------------------------
# SLLN
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SllnResult:
    N: int
    reps: int
    mean: float
    bar_F: float
    abs_error: float
    tolerance: float
    passed: bool


def slln_audit(cfg: RunConfig, N: Optional[int] = None,
               reps: int = 1) -> SllnResult:
    """Check |mean of S_N/N - bar_F| <= 3*sd/sqrt(R) + 5/sqrt(N).

    Uses the uncentered convention: the raw sum divided by N.
    """
    N = N or cfg.N
    uncentered = RunConfig(**{**cfg.__dict__, "centered": False})
    S = sample_paths(uncentered, N=N, reps=reps, grid=(1.0,))
    averages = S[:, 0] / math.sqrt(N)
    _, mu = stationary_law(cfg.model)
    target = float(bar_F(cfg.observable, [float(x) for x in mu]))
    mean = float(np.mean(averages))
    sd = float(np.std(averages, ddof=1)) if reps > 1 else 0.0
    tol = 3.0 * sd / math.sqrt(reps) + 5.0 / math.sqrt(N)
    err = abs(mean - target)
    return SllnResult(N=N, reps=reps, mean=mean, bar_F=target, abs_error=err,
                      tolerance=tol, passed=err <= tol)


# ----------------------------------------------------------------------
# Moment growth audit
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MomentRow:
    N: int
    sum_abs_mean: float
    sum_abs_mean_se: float
    var_ratio: float
    var_ratio_se: float
    m4_ratio: float
    m4_ratio_se: float


@dataclass(frozen=True)
class MomentAudit:
    rows: Tuple[MomentRow, ...]
    bounded: bool
    column_verdicts: Dict[str, bool]


def moment_growth_audit(cfg: RunConfig, N_grid: Sequence[int],
                        bootstrap: int = 200) -> MomentAudit:
    """sqrt(N)|mean|, Var/N and M4/N^2 of the centered sum over an N grid.

    Boundedness verdict: no column value exceeds twice its grid median by
    more than three bootstrap standard errors.
    """
    rows: List[MomentRow] = []
    for N in N_grid:
        S = sample_paths(cfg, N=N, grid=(1.0,))[:, 0]  # S_N(1), centered
        sums = S * math.sqrt(N)  # Sigma bar-F
        reps = len(sums)
        stats_fn = lambda x: (abs(np.mean(x)), np.var(x, ddof=1) / N,
                              np.mean(x ** 4) / N ** 2)
        base = stats_fn(sums)
        bs = np.empty((bootstrap, 3))
        rng_idx = _rng.index_draws(_rng.stream_key(cfg.seed, N, 0xB007),
                                   np.arange(bootstrap * reps, dtype=np.uint64),
                                   reps).reshape(bootstrap, reps)
        for b in range(bootstrap):
            bs[b] = stats_fn(sums[rng_idx[b]])
        ses = bs.std(axis=0, ddof=1)
        rows.append(MomentRow(N=N,
                              sum_abs_mean=float(base[0]), sum_abs_mean_se=float(ses[0]),
                              var_ratio=float(base[1]), var_ratio_se=float(ses[1]),
                              m4_ratio=float(base[2]), m4_ratio_se=float(ses[2])))
    verdicts: Dict[str, bool] = {}
    for col in ("sum_abs_mean", "var_ratio", "m4_ratio"):
        vals = np.array([getattr(r, col) for r in rows])
        ses = np.array([getattr(r, f"{col}_se") for r in rows])
        med = float(np.median(vals))
        verdicts[col] = bool(np.all(vals <= 2.0 * med + 3.0 * ses))
    return MomentAudit(rows=tuple(rows), bounded=all(verdicts.values()),
                       column_verdicts=verdicts)


# ----------------------------------------------------------------------
# Covariances
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CovEstimate:
    grid: Tuple[float, ...]
    b_hat: np.ndarray
    stderr: np.ndarray
    D2_hat: float
    reps: int


def estimate_covariance(cfg: RunConfig, N: Optional[int] = None) -> CovEstimate:
    """Sample covariance of (S_N(t), S_N(s)) across replications, with
    jackknife standard errors."""
    if cfg.reps < 100:
        raise ValueError("covariance estimation needs reps >= 100")
    S = sample_paths(cfg, N=N)
    reps, J = S.shape
    mean = S.mean(axis=0)
    centered = S - mean
    b_hat = centered.T @ centered / (reps - 1)

    # Leave-one-out covariances via sufficient statistics.
    se = np.empty((J, J))
    sum_x = S.sum(axis=0)
    sum_xy = S.T @ S
    for a in range(J):
        for b in range(J):
            loo = np.empty(reps)
            for r in range(reps):
                n = reps - 1
                sx = sum_x[a] - S[r, a]
                sy = sum_x[b] - S[r, b]
                sxy = sum_xy[a, b] - S[r, a] * S[r, b]
                loo[r] = (sxy - sx * sy / n) / (n - 1)
            se[a, b] = math.sqrt((reps - 1) / reps * float(np.sum((loo - loo.mean()) ** 2)))
    one = cfg.time_grid.index(1.0) if 1.0 in cfg.time_grid else J - 1
    return CovEstimate(grid=cfg.time_grid, b_hat=b_hat, stderr=se,
                       D2_hat=float(b_hat[one, one]), reps=reps)


def theoretical_covariance(family: PolyFamily, obs: TensorTable,
                           model: ProcessModel, mode: str,
                           grid: Sequence[float] = (1.0,),
                           partition: Optional[OrderingPartition] = None,
                           scan_N: int = 2000) -> np.ndarray:
    """Limit covariance b(t, s) assembled from exact product integrals.

    mode "diagonal": a nonlinear member not equivalent to any other
    contributes min(s,t)-weighted sums of integral F_{eps,i}^2 over the
    ordering segments.  mode "equivalent": an equivalence class with c = 1
    and integer shift; pairwise terms couple through the lag-d joint law.
    """
    values, mu = stationary_law(model)
    mu_f = [float(x) for x in mu]
    if partition is None:
        partition = scan_partition(family, scan_N)
    grid = tuple(grid)
    J = len(grid)
    out = np.zeros((J, J))

    if mode == "diagonal":
        targets = _nonequivalent_nonlinear_indices(family)
        if not targets:
            raise ValueError("no nonlinear member free of equivalences")
        for a in range(J):
            for b in range(J):
                tau = min(grid[a], grid[b])
                total = 0.0
                for seg in partition.segments:
                    eps0 = tuple(i - 1 for i in seg.perm)
                    dec = decompose_F(obs, mu_f, eps0)
                    frac = _segment_overlap(seg, partition.N, tau)
                    for i0 in targets:
                        pos = eps0.index(i0) + 1
                        part = dec.part(pos)
                        total += frac * _weighted_square(part, mu_f)
                out[a, b] = total
        return out

    if mode == "equivalent":
        return _equivalent_covariance(family, obs, model, mu_f, grid, partition)
    raise ValueError(f"unknown mode {mode!r}")


def _segment_overlap(seg, N: int, tau: float) -> float:
    hi = min(seg.hi, int(math.floor(N * tau)))
    return max(0, hi - seg.lo + 1) / N


def _weighted_square(part: np.ndarray, mu: Sequence[float]) -> float:
    out = part ** 2
    w = np.asarray(mu)
    for _ in range(part.ndim):
        out = np.tensordot(out, w, axes=([out.ndim - 1], [0]))
    return float(out)


def _nonequivalent_nonlinear_indices(family: PolyFamily) -> List[int]:
    ell = family.ell
    out = []
    for i in range(ell):
        if family.degrees[i] <= 1:
            continue
        solo = True
        for j in range(ell):
            if j == i or family.degrees[j] != family.degrees[i]:
                continue
            if detect_q_equivalence(family.polys[i], family.polys[j]) is not None:
                solo = False
        if solo:
            out.append(i)
    return out


def _joint_law_array(model: ProcessModel, lag: int, values: Sequence[int],
                     mu: Sequence[float]) -> np.ndarray:
    """Pairwise law of (xi_0, xi_lag) over alphabet positions."""
    A = len(values)
    if lag == 0:
        out = np.zeros((A, A))
        np.fill_diagonal(out, mu)
        return out
    if isinstance(model, FiniteMarkov):
        data = build_markov(model.P, model.f)
        return data.joint(abs(lag)).as_array() if lag > 0 else data.joint(-lag).as_array().T
    # i.i.d. models: product law at any nonzero lag
    w = np.asarray(mu)
    return np.outer(w, w)


def _equivalent_covariance(family: PolyFamily, obs: TensorTable, model,
                           mu: Sequence[float], grid, partition) -> np.ndarray:
    """Assembly for an ell = 2 family forming one equivalence class."""
    if family.ell != 2:
        raise ValueError("equivalent mode is implemented for ell = 2 families; "
                         "larger classes are Monte-Carlo-only")
    qe = detect_q_equivalence(family.polys[0], family.polys[1])
    if qe is None:
        raise ValueError("family members are not Q-equivalent")
    c, r, _ = qe
    if c != 1 or Fraction(r).denominator != 1:
        raise ValueError("equivalent mode requires c = 1 with integer shift")
    values, _ = stationary_law(model)
    mu_arr = np.asarray(mu)

    J = len(grid)
    out = np.zeros((J, J))
    segs = partition.segments
    for a in range(J):
        for b in range(J):
            tau = min(grid[a], grid[b])
            total = 0.0
            for seg in segs:
                eps0 = tuple(i - 1 for i in seg.perm)
                dec = decompose_F(obs, mu, eps0)
                frac = _segment_overlap(seg, partition.N, tau)
                # Diagonal n = m contributions.
                for pos in (1, 2):
                    total += frac * _weighted_square(dec.part(pos), mu)
                # Lattice cross terms (i, j) with q_{eps(i)} ~ q_{eps(j)}.
                for i_pos, j_pos in ((1, 2), (2, 1)):
                    qi = family.polys[eps0[i_pos - 1]]
                    qj = family.polys[eps0[j_pos - 1]]
                    rel = detect_q_equivalence(qi, qj)
                    if rel is None:
                        continue
                    couplings = _lattice_couplings(family, eps0, i_pos, j_pos, rel)
                    total += frac * _coupled_integral(
                        dec.part(i_pos), dec.part(j_pos), couplings, model,
                        values, mu_arr)
            out[a, b] = total
    return out


def _lattice_couplings(family: PolyFamily, eps0, i_pos: int, j_pos: int, rel):
    """Argument pairs (l, z, lag) whose index difference is constant on the
    lattice m = n + r."""
    c, r, _ = rel
    couplings = []
    for l in range(1, i_pos + 1):
        for z in range(1, j_pos + 1):
            ql = family.polys[eps0[l - 1]]
            qz = family.polys[eps0[z - 1]]
            pair = detect_q_equivalence(ql, qz)
            if pair is not None and pair[0] == 1 and pair[1] == r:
                couplings.append((l, z, pair[2]))
    return couplings


def _coupled_integral(Fi: np.ndarray, Fj: np.ndarray, couplings, model,
                      values, mu_arr: np.ndarray) -> float:
    """integral F_i(xbar) F_j(ybar) dM with mu_d factors on coupled pairs."""
    if not couplings:
        return 0.0
    di, dj = Fi.ndim, Fj.ndim
    coupled_i = {l for l, _, _ in couplings}
    coupled_j = {z for _, z, _ in couplings}
    total = 0.0
    from itertools import product as iproduct
    laws = {(l, z): _joint_law_array(model, int(d), values, mu_arr)
            for l, z, d in couplings}
    for xi in iproduct(range(len(mu_arr)), repeat=di):
        for yj in iproduct(range(len(mu_arr)), repeat=dj):
            wgt = 1.0
            for l in range(1, di + 1):
                if l not in coupled_i:
                    wgt *= mu_arr[xi[l - 1]]
            for z in range(1, dj + 1):
                if z not in coupled_j:
                    wgt *= mu_arr[yj[z - 1]]
            for l, z, d in couplings:
                wgt *= laws[(l, z)][xi[l - 1], yj[z - 1]]
            if wgt:
                total += float(Fi[xi]) * float(Fj[yj]) * wgt
    return total


# ----------------------------------------------------------------------
# Gaussianity
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class KsResult:
    statistic: float
    threshold: float
    passed: bool
    degenerate: bool = False


def gaussianity_test(samples: np.ndarray, mean: Optional[float] = None,
                     var: Optional[float] = None,
                     slack: float = 1.5) -> KsResult:
    """One-sample KS distance against the fitted normal.

    pass <=> KS <= slack * 1.36 / sqrt(R); the slack absorbs the parameter
    fitting.  A fitted variance below 1e-12 is reported degenerate.
    """
    samples = np.asarray(samples, dtype=np.float64)
    R = len(samples)
    if R < 200:
        raise ValueError("need at least 200 samples")
    mean = float(np.mean(samples)) if mean is None else mean
    var = float(np.var(samples, ddof=1)) if var is None else var
    if var < 1e-12:
        return KsResult(statistic=0.0, threshold=0.0, passed=True, degenerate=True)
    stat = float(sps.kstest(samples, "norm", args=(mean, math.sqrt(var))).statistic)
    threshold = slack * 1.36 / math.sqrt(R)
    return KsResult(statistic=stat, threshold=threshold, passed=stat <= threshold)


@dataclass(frozen=True)
class FunctionalKsResult:
    per_projection: Tuple[KsResult, ...]
    n_pass: int
    n_required: int
    passed: bool


def functional_gaussianity(S: np.ndarray, b_hat: np.ndarray, seed: int,
                           n_projections: int = 20, required: int = 18,
                           slack: float = 1.5) -> FunctionalKsResult:
    """KS-test random unit projections of the finite-dimensional vector
    (S_N(t_1), ..., S_N(t_J)) against their b_hat-implied normals."""
    R, J = S.shape
    u_raw = _rng.uniforms(_rng.stream_key(seed, 0xF0), n_projections * J)
    normals = sps.norm.ppf(np.clip(u_raw, 1e-12, 1.0 - 1e-12))
    results: List[KsResult] = []
    for k in range(n_projections):
        u = normals[k * J:(k + 1) * J]
        norm = float(np.linalg.norm(u))
        u = u / (norm if norm > 0 else 1.0)
        proj = S @ u
        var = float(u @ b_hat @ u)
        results.append(gaussianity_test(proj, mean=float(np.mean(proj)),
                                        var=var, slack=slack))
    n_pass = sum(1 for r in results if r.passed)
    return FunctionalKsResult(per_projection=tuple(results), n_pass=n_pass,
                              n_required=required, passed=n_pass >= required)


# ----------------------------------------------------------------------
# Bounded-variance degeneracy proxy
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CoboundaryFlag:
    N_grid: Tuple[int, ...]
    variances: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    slope: float
    slope_se: float
    bounded_verdict: bool
    note: str = ("full coboundary representations are not decidable from "
                 "samples; this is the bounded-variance criterion only")


def coboundary_flag(cfg: RunConfig, N_grid: Sequence[int],
                    bootstrap: int = 200) -> CoboundaryFlag:
    """Var(sum of centered F) over the grid; bounded <=> slope CI covers 0."""
    variances: List[float] = []
    stderrs: List[float] = []
    for N in N_grid:
        S = sample_paths(cfg, N=N, grid=(1.0,))[:, 0] * math.sqrt(N)
        var = float(np.var(S, ddof=1))
        reps = len(S)
        idx = _rng.index_draws(_rng.stream_key(cfg.seed, N, 0xC0B),
                               np.arange(bootstrap * reps, dtype=np.uint64),
                               reps).reshape(bootstrap, reps)
        bs = np.array([np.var(S[idx[b]], ddof=1) for b in range(bootstrap)])
        variances.append(var)
        stderrs.append(float(bs.std(ddof=1)))
    x = np.asarray(N_grid, dtype=np.float64)
    y = np.asarray(variances)
    xc = x - x.mean()
    denom = float(np.sum(xc ** 2))
    slope = float(np.sum(xc * y) / denom) if denom else 0.0
    se_meas = math.sqrt(float(np.sum((xc * np.asarray(stderrs)) ** 2))) / denom if denom else 0.0
    resid = y - (y.mean() + slope * xc)
    dof = max(len(x) - 2, 1)
    se_fit = math.sqrt(float(np.sum(resid ** 2)) / dof / denom) if denom else 0.0
    slope_se = max(se_meas, se_fit)
    bounded = abs(slope) <= 3.0 * slope_se
    return CoboundaryFlag(N_grid=tuple(int(v) for v in N_grid),
                          variances=tuple(variances), stderrs=tuple(stderrs),
                          slope=slope, slope_se=slope_se, bounded_verdict=bounded)
