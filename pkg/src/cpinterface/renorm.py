"""Block renormalization of a Harris construction.

Cells (m, n) of the lattice {m + n even, n >= 0} sit on half-overlapping
intervals I_m of N sites and time slabs of length K N.  A cell is good
(Phi = 1) when the all-ones process has no long vacancy near it at the end
of its slab, every occupied site there descends from the cell's own
interval, and nothing from outside the interval sneaks into the thin box
J around its centre without a matching descent.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _sweep
from .contact import ContaminationError, interface_series, is_gamma_slow
from .graphical import (HarrisEvents, Kernel, SpaceTimeRegion, Window, WindowError,
                        closure_many, guard_width, sample_harris, shift_events)
from .opercolation import PercField, gamma_event
from .stats import wilson_interval

FIELD_SCHEMA = "# schema: block-field v1"


@dataclass(frozen=True)
class BlockParams:
    K: int
    N: int
    beta: float = 0.5
    vacant_len: Optional[int] = None  # default ceil(sqrt(N))

    def __post_init__(self):
        if self.K < 1 or self.N < 1:
            raise ValueError("K and N must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.vacant_len is None:
            object.__setattr__(self, "vacant_len", math.isqrt(self.N - 1) + 1)
        if self.vacant_len < 1:
            raise ValueError("vacant_len must be positive")

    @property
    def slab(self) -> int:
        return self.K * self.N

    def check_range(self, M: int) -> None:
        if self.N <= 2 * M:
            raise ValueError(f"N={self.N} must exceed 2M={2 * M}")
        if self.K <= M or self.N <= M:
            raise ValueError(f"K and N must exceed the range M={M}")


@dataclass(frozen=True)
class LambdaWindow:
    m_max: int
    n_max: int

    def __post_init__(self):
        if self.m_max < 0 or self.n_max < 0:
            raise ValueError("negative lattice window")

    def cells(self):
        for n in range(self.n_max + 1):
            for m in range(-self.m_max, self.m_max + 1):
                if (m + n) % 2 == 0:
                    yield m, n

    def row(self, n: int) -> list:
        lo = -self.m_max if (self.m_max + n) % 2 == 0 else -self.m_max + 1
        return list(range(lo, self.m_max + 1, 2))


# --- geometry ------------------------------------------------------------

def intervals(params: BlockParams, m: int) -> tuple:
    """I_m as an inclusive site range (lo, hi)."""
    N = params.N
    return ((m - 1) * N) // 2 + 1, ((m + 1) * N) // 2


def neighbour_span(params: BlockParams, m: int) -> tuple:
    """I_{m-1} union I_{m+1}, which is the contiguous range (mN/2 - N, mN/2 + N]."""
    return intervals(params, m - 1)[0], intervals(params, m + 1)[1]


def boxes(params: BlockParams, M: int, m: int, n: int) -> tuple:
    """J_{(m,n)} as (x_lo, x_hi, t_lo, t_hi)."""
    mN = m * params.N
    return (-((-mN) // 2) - M, mN // 2 + M, float(params.slab * n),
            float(params.slab * (n + 1)))


def owner(params: BlockParams, x, parity: int):
    """The m of the given parity with x in I_m (intervals of one parity tile Z)."""
    k = (2 * np.asarray(x, dtype=np.int64) - 1) // params.N
    return np.where((k - parity) % 2 == 0, k, k + 1)


def required_window(params: BlockParams, lw: LambdaWindow, kernel: Kernel,
                    guard: Optional[int] = None, t_extra: float = 0.0) -> Window:
    """Smallest guarded window that holds the field."""
    t_max = params.slab * (lw.n_max + 1) + t_extra
    g = guard_width(kernel, t_max) if guard is None else guard
    lo = neighbour_span(params, -lw.m_max)[0]
    hi = neighbour_span(params, lw.m_max)[1]
    return Window(lo - g, hi + g, float(t_max))


# --- the field -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlockField:
    phi: np.ndarray  # int8 (n_max + 1, 2 m_max + 1); -1 off the lattice
    params: BlockParams
    lw: LambdaWindow
    M: int
    seed: int
    window: Window
    vacancy: np.ndarray  # per-condition booleans, same layout
    descent: np.ndarray
    intrusion: np.ndarray
    contaminated: bool = False

    @property
    def psi(self) -> np.ndarray:
        return (self.phi > 0).astype(np.int8)

    def phi_at(self, m: int, n: int) -> int:
        return int(self.phi[n, m + self.lw.m_max])

    def psi_at(self, m: int, n: int) -> int:
        return int(self.phi_at(m, n) > 0)

    def perc_field(self) -> PercField:
        return PercField(self.lw.m_max, self.lw.n_max, self.phi > 0,
                         f"psi(seed={self.seed}, K={self.params.K}, N={self.params.N})")

    def to_csv(self) -> str:
        lines = [FIELD_SCHEMA, "m,n,phi,psi"]
        for m, n in self.lw.cells():
            p = self.phi_at(m, n)
            lines.append(f"{m},{n},{p},{int(p > 0)}")
        return "\n".join(lines) + "\n"


def _check_cover(h: HarrisEvents, params: BlockParams, lw: LambdaWindow) -> None:
    w = h.window
    t_need = params.slab * (lw.n_max + 1)
    if w.t_max < t_need:
        raise WindowError(f"window ends at t={w.t_max}, row {lw.n_max} needs {t_need}")
    for m, n in lw.cells():
        lo, hi = neighbour_span(params, m)
        if lo < w.x_min or hi > w.x_max:
            raise WindowError(f"cell ({m}, {n}) needs sites [{lo}, {hi}], "
                              f"window is [{w.x_min}, {w.x_max}]")


def block_field(h: HarrisEvents, params: BlockParams, lw: LambdaWindow) -> BlockField:
    """Phi and Psi over the lattice window, one compiled sweep for all rows."""
    M = h.kernel.range
    params.check_range(M)
    _check_cover(h, params, lw)
    if 2 * lw.m_max + 1 > 128:
        raise ValueError("at most 64 cells per row are supported")
    w = h.window
    sites = w.sites.astype(np.int64)
    own = np.stack([owner(params, sites, 0), owner(params, sites, 1)])
    rows = [lw.row(n) for n in range(lw.n_max + 1)]
    width = max(len(r) for r in rows)
    bit = np.full(own.shape, -1, dtype=np.int64)
    in_j = np.zeros(own.shape, dtype=np.bool_)
    for p in (0, 1):
        cells = rows[p] if p <= lw.n_max else []
        for c, m in enumerate(cells):
            bit[p, own[p] == m] = c
            jlo, jhi = boxes(params, M, m, 0)[:2]
            in_j[p, (sites >= jlo) & (sites <= jhi)] = True
    a_lo = np.zeros((lw.n_max + 1, width), dtype=np.int64)
    a_hi = np.full((lw.n_max + 1, width), -1, dtype=np.int64)
    for n, cells in enumerate(rows):
        for c, m in enumerate(cells):
            lo, hi = neighbour_span(params, m)
            a_lo[n, c], a_hi[n, c] = lo - w.x_min, hi - w.x_min
    kind, src, dst, time = h.arrays()
    vac, desc, intr = _sweep.block_rows(kind, src, dst, time, w.n_sites,
                                        float(params.slab), lw.n_max + 1, own,
                                        bit, in_j, a_lo, a_hi, params.vacant_len)
    shape = (lw.n_max + 1, 2 * lw.m_max + 1)
    phi = np.full(shape, -1, dtype=np.int8)
    cv, cd, ci = (np.zeros(shape, dtype=bool) for _ in range(3))
    for n, cells in enumerate(rows):
        for c, m in enumerate(cells):
            j = m + lw.m_max
            cv[n, j], cd[n, j], ci[n, j] = vac[n, c], desc[n, c], intr[n, c]
            good = bool(vac[n, c] and desc[n, c] and intr[n, c])
            if n == 0:
                phi[n, j] = int(good)
            else:
                parents = [phi[n - 1, j + d] for d in (-1, 1) if 0 <= j + d < shape[1]]
                phi[n, j] = 2 if 1 not in parents else int(good)
    return BlockField(phi, params, lw, M, h.seed, w, cv, cd, ci,
                      _field_contaminated(h, params, lw))


def _field_contaminated(h: HarrisEvents, params: BlockParams, lw: LambdaWindow) -> bool:
    w = h.window
    M = h.kernel.range
    t_end = float(params.slab * (lw.n_max + 1))
    kind, src, dst, time = h.arrays()
    fl, fr = _sweep.influence_fronts(kind, src, dst, time, w.n_sites, M,
                                     np.array([t_end]))
    lo = neighbour_span(params, -lw.m_max)[0] - M - w.x_min
    hi = neighbour_span(params, lw.m_max)[1] + M - w.x_min
    return bool(fl[0] >= lo or fr[0] <= hi)


def sample_block_field(kernel: Kernel, params: BlockParams, lw: LambdaWindow,
                       seed: int, guard: Optional[int] = None) -> BlockField:
    h = sample_harris(kernel, required_window(params, lw, kernel, guard), seed)
    return block_field(h, params, lw)


@dataclass(frozen=True)
class ConditionReport:
    cell: tuple
    vacancy: bool
    descent: bool
    intrusion: bool
    recursion: Optional[bool]  # None on row 0
    phi: int
    method: str = "sweep"

    def as_dict(self) -> dict:
        return asdict(self)


def verify_block_cell(h: HarrisEvents, params: BlockParams, cell: tuple,
                      parents: Optional[tuple] = None) -> ConditionReport:
    """Recompute one cell's conditions with the generic closure sweep.

    ``parents`` gives (Phi(m-1, n-1), Phi(m+1, n-1)) for rows n >= 1.
    The event count always exceeds the exhaustive-path cap here, so the
    check runs through the independent multi-source closure instead.
    """
    m, n = cell
    if (m + n) % 2:
        raise ValueError(f"({m}, {n}) is off the lattice")
    M = h.kernel.range
    params.check_range(M)
    w = h.window
    t0, t1 = float(params.slab * n), float(params.slab * (n + 1))
    lo, hi = neighbour_span(params, m)
    if lo < w.x_min or hi > w.x_max or t1 > w.t_max:
        raise WindowError(f"cell {cell} is not covered by {w}")
    everything = SpaceTimeRegion.at_time(range(w.x_min, w.x_max + 1), 0.0)
    ones, _ = closure_many(h, [everything], [t0, t1])
    upper0, upper1 = ones[0, 0], ones[1, 0]
    ilo, ihi = intervals(params, m)
    src_sites = [x for x in range(ilo, ihi + 1) if upper0[x - w.x_min]]
    jlo, jhi, _, _ = boxes(params, M, m, n)
    kind, s_idx, d_idx, time = h.slab(t0, t1)
    dst = d_idx + w.x_min
    hit = (kind == 1) & (time > t0) & (time <= t1) & (dst >= jlo) & (dst <= jhi)
    qt = np.unique(np.append(time[hit], t1))
    comp = [x for x in range(w.x_min, w.x_max + 1) if not ilo <= x <= ihi]
    regions = [SpaceTimeRegion.at_time(src_sites, t0) if src_sites else
               SpaceTimeRegion(()), SpaceTimeRegion.band(comp, t0, t1)]
    reach, _ = closure_many(h, regions, qt)
    jj = slice(jlo - w.x_min, jhi - w.x_min + 1)
    intrusion = not bool(np.any(reach[:, 1, jj] & ~reach[:, 0, jj]))
    span = slice(lo - w.x_min, hi - w.x_min + 1)
    occupied = upper1[span]
    descent = not bool(np.any(occupied & ~reach[-1, 0, span]))
    vacancy = _no_vacancy(occupied, params.vacant_len)
    good = vacancy and descent and intrusion
    if n == 0:
        return ConditionReport(cell, vacancy, descent, intrusion, None, int(good))
    if parents is None:
        raise ValueError("rows n >= 1 need the parents' Phi values")
    rec = 1 in parents
    return ConditionReport(cell, vacancy, descent, intrusion, rec,
                           int(good) if rec else 2)


def _no_vacancy(occupied: np.ndarray, length: int) -> bool:
    run = 0
    for v in occupied:
        run = 0 if v else run + 1
        if run >= length:
            return False
    return True


# --- expansion -----------------------------------------------------------

@dataclass(frozen=True)
class ExpandReport:
    cond_transmission: bool
    cond_no_death: bool
    cond_full_descent: bool
    cond_percolation: bool
    horizon_i: int
    overall: bool
    field: Optional[BlockField] = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("cond_transmission", "cond_no_death",
                                              "cond_full_descent", "cond_percolation",
                                              "horizon_i", "overall")}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def expanding_targets(params: BlockParams) -> np.ndarray:
    """I_{-2} union I_0 union I_2, a contiguous block of 3N sites."""
    lo = intervals(params, -2)[0]
    hi = intervals(params, 2)[1]
    return np.arange(lo, hi + 1, dtype=np.int64)


def expansion_field_window(horizon_i: int) -> LambdaWindow:
    return LambdaWindow(horizon_i + 2, horizon_i)


def expanding_window(params: BlockParams, kernel: Kernel, horizon_i: int,
                     guard: Optional[int] = None) -> Window:
    """Guarded window for an expansion check at the origin."""
    return required_window(params, expansion_field_window(horizon_i), kernel,
                           guard, t_extra=1.0)


def local_expand_window(params: BlockParams, kernel: Kernel) -> Window:
    """Guarded window [y_lo - g, y_hi + g] x [0, 1] around the expansion targets.

    The conditions on [0, 1] are evaluated on this window, so that they can
    be screened cheaply and exactly before the full construction is built.
    """
    ys = expanding_targets(params)
    g = guard_width(kernel, 1.0)
    return Window(int(ys[0]) - g, int(ys[-1]) + g, 1.0)


def _local_conditions(h: HarrisEvents, params: BlockParams) -> tuple:
    loc = local_expand_window(params, h.kernel)
    w = h.window
    if loc.x_min < w.x_min or loc.x_max > w.x_max or w.t_max < 1.0:
        raise WindowError(f"window {w} does not hold the expansion window {loc}")
    hl = h.restrict(loc)
    d0 = hl.deaths_at(0)
    no_death = not bool(np.any((d0 >= 0.0) & (d0 <= 1.0)))
    kind, src, dst, time = hl.arrays()
    ys = expanding_targets(params) - loc.x_min
    full, trans = _sweep._local_checks(kind, src, dst, time, loc.n_sites,
                                       -loc.x_min, ys)
    return bool(trans), no_death, bool(full)


def is_beta_expanding(h: HarrisEvents, params: BlockParams, horizon_i: int,
                      lazy: bool = True) -> ExpandReport:
    """Whether the origin is beta-expanding up to level ``horizon_i``.

    Transmission is only examined once full descent holds (a failed descent
    reports transmission False).  With ``lazy`` the block field is skipped
    once a condition on [0, 1] fails, and cond_percolation reads False.
    """
    if horizon_i < 0:
        raise ValueError("horizon_i must be non-negative")
    params.check_range(h.kernel.range)
    trans, no_death, full = _local_conditions(h, params)
    local_ok = trans and no_death and full
    perc = False
    bf = None
    if local_ok or not lazy:
        lw = expansion_field_window(horizon_i)
        bf = block_field(shift_events(h, 0, 1.0), params, lw)
        perc = bool(gamma_event(bf.perc_field(), params.beta, horizon_i))
    return ExpandReport(trans, no_death, full, perc, horizon_i, local_ok and perc, bf)


def _stream_tables(kernel: Kernel):
    from .graphical import _STREAM_ARROW, _STREAM_DEATH
    from .rng import poisson_cdf_table
    disp = np.array(sorted(d for d, p in kernel.weights.items() if kernel.lam * p > 0),
                    dtype=np.int64)
    tables = [poisson_cdf_table(1.0)] + [poisson_cdf_table(kernel.rate(int(d)))
                                         for d in disp]
    width = max(t.size for t in tables)
    cdfs = np.ones((len(tables), width))
    for i, t in enumerate(tables):
        cdfs[i, :t.size] = t
    lens = np.array([t.size for t in tables], dtype=np.int64)
    return disp, np.arange(1, disp.size + 1, dtype=np.int64), cdfs, lens, \
        _STREAM_DEATH, _STREAM_ARROW


def expand_prefilter(kernel: Kernel, params: BlockParams, seeds,
                     screen: bool = True) -> np.ndarray:
    """Seeds whose construction passes the conditions on [0, 1] at the origin.

    Regenerates the local window's events from the counter-based streams,
    so the answer equals the one is_beta_expanding would give on
    sample_harris(kernel, window, seed) for any window holding the local one.
    """
    seeds = np.asarray(seeds).astype(np.int64).view(np.uint64) \
        if np.asarray(seeds).dtype != np.uint64 else np.asarray(seeds)
    ys = expanding_targets(params)
    g = guard_width(kernel, 1.0)
    return _sweep.expand_prefilter(seeds, g, int(ys[0]), int(ys[-1]),
                                   *_stream_tables(kernel), screen)


@dataclass
class ExpandingSample:
    seed: int
    events: HarrisEvents
    report: ExpandReport


@dataclass
class RejectionLog:
    scanned: int = 0
    local_passed: int = 0
    accepted: int = 0

    @property
    def acceptance(self) -> float:
        return self.accepted / self.scanned if self.scanned else 0.0


def expanding_samples(kernel: Kernel, params: BlockParams, horizon_i: int,
                      n_accept: int, seed_start: int = 0, batch: int = 1 << 22,
                      max_seeds: Optional[int] = None,
                      log: Optional[RejectionLog] = None):
    """Rejection sampler for constructions whose origin is beta-expanding up
    to level ``horizon_i``.

    Seeds are tried in increasing order from ``seed_start``; the compiled
    screen decides the conditions on [0, 1] and the survivors are built in
    full and checked again.  Yields ExpandingSample objects.
    """
    log = RejectionLog() if log is None else log
    window = expanding_window(params, kernel, horizon_i)
    nxt = int(seed_start)
    while log.accepted < n_accept:
        if max_seeds is not None and log.scanned >= max_seeds:
            return
        size = batch if max_seeds is None else min(batch, max_seeds - log.scanned)
        seeds = np.arange(nxt, nxt + size, dtype=np.uint64)
        hits = seeds[expand_prefilter(kernel, params, seeds)]
        nxt += size
        for sd in hits.tolist():
            log.local_passed += 1
            h = sample_harris(kernel, window, sd)
            rep = is_beta_expanding(h, params, horizon_i)
            if rep.overall:
                log.accepted += 1
                log.scanned = sd - int(seed_start) + 1
                yield ExpandingSample(sd, h, rep)
                if log.accepted >= n_accept:
                    return
        log.scanned = nxt - int(seed_start)


def horizon_for_time(params: BlockParams, T: float) -> int:
    """The level i with T in (1 + KN(i-1), 1 + KN i]."""
    return max(0, math.ceil((T - 1.0) / params.slab))


# --- cone and barrier ----------------------------------------------------

def cone_contains(rho: float, point: tuple, apex: tuple = (0, 0.0)) -> bool:
    z, s = point[0] - apex[0], point[1] - apex[1]
    return s >= 0 and -rho * s <= z <= rho * s


@dataclass(frozen=True)
class BarrierSet:
    left: tuple  # m_n for n = 0..n_max
    right: tuple
    rects: tuple  # (x_lo, x_hi, t_lo, t_hi); lines have t_lo == t_hi
    beta_bar: float

    def as_dict(self) -> dict:
        return {"left": list(self.left), "right": list(self.right),
                "rects": [list(r) for r in self.rects], "beta_bar": self.beta_bar}


def barrier_region(bf: BlockField, beta: Optional[float] = None) -> Optional[BarrierSet]:
    """Side paths and barrier rectangles, or None when Gamma(n_max) fails.

    Coordinates are those of the field's own construction.  ``beta_bar`` is
    0.999 of the largest slope whose cone stays strictly inside both sides
    once shifted up by one time unit.
    """
    beta = bf.params.beta if beta is None else beta
    wit = gamma_event(bf.perc_field(), beta, bf.lw.n_max, witness=True)
    if wit is None:
        return None
    p, M = bf.params, bf.M
    rects = [(*intervals(p, 0), 0.0, 0.0)]
    slope = 1.0
    for n, (ml, mr) in enumerate(zip(wit.left, wit.right)):
        for m in (ml, mr):
            lo, hi = intervals(p, m)
            rects.append((lo, hi, float(p.slab * n), float(p.slab * n)))
            rects.append(boxes(p, M, m, n))
        t_top = 1.0 + p.slab * (n + 1)
        gap = min(mr * p.N / 2 - M, -(ml * p.N / 2 + M))
        slope = min(slope, gap / t_top)
    return BarrierSet(tuple(wit.left), tuple(wit.right), tuple(rects),
                      0.999 * max(slope, 0.0))


@dataclass(frozen=True)
class PropertyReport:
    beta_bar: float
    T: float
    trials: int
    checked_i: int
    violations_i: int
    checked_ii: int
    violations_ii: int
    checked_iii: int
    violations_iii: int

    @property
    def total_violations(self) -> int:
        return self.violations_i + self.violations_ii + self.violations_iii

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total_violations"] = self.total_violations
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def check_barrier_properties(h: HarrisEvents, params: BlockParams, beta_bar: float,
                             T: float, trials: int, seed: int = 0,
                             n_times: int = 64, n_starts: int = 32) -> PropertyReport:
    """Test the three barrier implications on random (x, z, s) queries.

    Queries share ``n_times`` times in (0, T] and ``n_starts`` start sites so
    that one sweep answers all of them.  Half of the z values are drawn
    from the cone V(beta_bar) at time s, the rest on the opposite side of
    0 from x.  Property (ii) is checked once per sampled time.
    """
    w = h.window
    if T > w.t_max:
        raise WindowError(f"T={T} beyond t_max={w.t_max}")
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0xB4])
    reach_x = math.ceil(beta_bar * T) + 2 * params.N
    reach_x = min(reach_x, -w.x_min, w.x_max)
    times = np.sort(rng.uniform(0.0, T, n_times))
    times[times == 0.0] = T
    times.sort()
    starts = rng.integers(-reach_x, reach_x + 1, n_starts)
    starts[starts == 0] = 1
    regions = [SpaceTimeRegion.point(0, 0.0)]
    regions += [SpaceTimeRegion.point(int(x), 0.0) for x in starts]
    reach, _ = closure_many(h, regions, times)
    x0 = w.x_min

    viol_ii = 0
    for q, s in enumerate(times):
        occ = np.flatnonzero(reach[q, 0])
        bound = beta_bar * s if s >= 1.0 else 0.0
        if occ.size == 0 or occ[-1] + x0 < bound:
            viol_ii += 1

    qi = rng.integers(0, n_times, trials)
    xi = rng.integers(0, n_starts, trials)
    in_cone = rng.random(trials) < 0.5
    checked_i = viol_i = checked_iii = viol_iii = 0
    for k in range(trials):
        s = times[qi[k]]
        x = int(starts[xi[k]])
        if in_cone[k]:
            r = math.floor(beta_bar * s)
            z = int(rng.integers(-r, r + 1))
        else:
            z = -int(np.sign(x)) * int(rng.integers(1, reach_x + 1))
        hit = reach[qi[k], 1 + xi[k], z - x0]
        mine = reach[qi[k], 0, z - x0]
        if cone_contains(beta_bar, (z, s)):
            checked_i += 1
            viol_i += bool(hit and not mine)
        if x * z < 0:
            checked_iii += 1
            viol_iii += bool(hit and not mine)
    return PropertyReport(float(beta_bar), float(T), int(trials), checked_i, viol_i,
                          n_times, viol_ii, checked_iii, viol_iii)


# --- good points ---------------------------------------------------------

def is_good_point(h: HarrisEvents, point: tuple, params: BlockParams, gamma: float,
                  T: float) -> bool:
    """(beta, gamma)-good up to T at ``point``: expanding and slow for the
    construction shifted so that ``point`` is the origin."""
    x, t = point
    g = shift_events(h, int(x), float(t))
    if g.window.t_max < T:
        raise WindowError(f"shifted window ends at {g.window.t_max}, need T={T}")
    i = horizon_for_time(params, T)
    rep = is_beta_expanding(g, params, i)
    if not rep.overall:
        return False
    return is_gamma_slow(g, gamma, T)


@dataclass(frozen=True, eq=False)
class GoodScan:
    times: np.ndarray
    sites: np.ndarray
    local: np.ndarray  # conditions on [t, t + 1] hold
    good: np.ndarray
    outside: np.ndarray  # local window left the construction

    def first_good(self, a: float, b: float) -> bool:
        sel = (self.times >= a) & (self.times <= b)
        return bool(np.any(self.good[sel]))


def edge_at(edge, times) -> np.ndarray:
    """Piecewise-constant lookup of an EdgeSeries at arbitrary times."""
    et = np.asarray(edge.times, dtype=np.float64)
    idx = np.searchsorted(et, np.asarray(times, dtype=np.float64), side="right") - 1
    if np.any(idx < 0):
        raise ValueError("query time before the first edge record")
    vals = edge.values
    out = np.empty(idx.size, dtype=np.int64)
    for k, j in enumerate(idx.tolist()):
        if vals[j] is None:
            raise ValueError(f"edge is empty at t={times[k]}")
        out[k] = vals[j]
    return out


def good_point_scan(h: HarrisEvents, params: BlockParams, gamma: float, T: float,
                    times, sites) -> GoodScan:
    """(beta, gamma)-good up to T at each (sites[k], times[k]).

    The conditions on [t, t + 1] are screened in one compiled pass over the
    construction; only survivors are shifted and checked in full.
    """
    params.check_range(h.kernel.range)
    ts = np.asarray(times, dtype=np.float64)
    xs = np.asarray(sites, dtype=np.int64)
    if ts.shape != xs.shape:
        raise ValueError("times and sites differ in length")
    ys = expanding_targets(params)
    half = guard_width(h.kernel, 1.0)
    w = h.window
    band = h
    if xs.size:
        # only the events near the scanned points matter
        lo = max(w.x_min, int(xs.min()) + int(ys[0]) - half)
        hi = min(w.x_max, int(xs.max()) + int(ys[-1]) + half)
        band = h.restrict(Window(lo, hi, w.t_max))
    kind, src, dst, time = band.arrays()
    local, outside = _sweep.expand_scan(kind, src, dst, time, band.window.n_sites,
                                        xs - band.window.x_min, ts, half,
                                        int(ys[0]), int(ys[-1]))
    good = np.zeros(ts.size, dtype=bool)
    for k in np.flatnonzero(local).tolist():
        good[k] = is_good_point(h, (int(xs[k]), float(ts[k])), params, gamma, T)
    return GoodScan(ts, xs, local.copy(), good, outside.copy())


@dataclass(frozen=True)
class NoGoodRow:
    gap: float
    count: int  # replicas with no good point on the edge over [a, a + gap]
    n: int
    freq: float
    ci_lo: float
    ci_hi: float

    def as_dict(self) -> dict:
        return asdict(self)


def no_good_point_estimates(kernel: Kernel, params: BlockParams, gamma: float, T: float,
                            a: float, gaps: Sequence[float], replicas: int,
                            delta: float = 0.005, seed: int = 0,
                            guard: Optional[int] = None) -> tuple:
    """P(no (beta, gamma)-good point at (r_t, t) for t in [a, a + gap]), per gap.

    Candidate times form a grid of step ``delta``; a good point off the grid
    is missed, so the frequencies are upper estimates.  Returns the rows and
    the number of contaminated replicas, which are left out.
    """
    gaps = sorted(float(g) for g in gaps)
    if not gaps or gaps[0] <= 0 or a < 0:
        raise ValueError("need a >= 0 and positive gaps")
    t_max = a + gaps[-1] + T
    g = guard_width(kernel, t_max) if guard is None else guard
    times = a + np.arange(0.0, gaps[-1] + delta / 2, delta)
    none = np.zeros(len(gaps), dtype=np.int64)
    used = contaminated = 0
    for k in range(replicas):
        h = sample_harris(kernel, Window(-g, g, t_max), int(seed) ^ k)
        s = interface_series(h, [times[-1]], record_edge=True)
        if s.any_contaminated:
            contaminated += 1
            continue
        try:
            scan = good_point_scan(h, params, gamma, T, times, edge_at(s.edge, times))
        except (ContaminationError, ValueError):
            contaminated += 1  # the edge died or a shifted check hit the boundary
            continue
        used += 1
        for j, gap in enumerate(gaps):
            none[j] += not scan.first_good(a, a + gap)
    if used == 0:
        raise ContaminationError("every replica was contaminated")
    rows = []
    for gap, c in zip(gaps, none.tolist()):
        lo, hi = wilson_interval(c, used)
        rows.append(NoGoodRow(gap, c, used, c / used, lo, hi))
    return rows, contaminated
