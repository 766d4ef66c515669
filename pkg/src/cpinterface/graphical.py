"""Harris graphical construction on a finite space-time window.

A HarrisEvents holds every death mark (rate 1 per site) and every
infection arrow (rate lambda * p(y - x) per ordered pair) inside a
Window.  Trajectories and reachability are deterministic functions of
it.  Times are float64 and compared exactly; events are kept in the
total order (time, kind with death < arrow, site, displacement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _sweep
from .rng import hash_keys, poisson_cdf_table, poisson_counts, uniforms

DEATH = 0
ARROW = 1

_STREAM_DEATH = 0x44
_STREAM_ARROW = 0x41
_STREAM_COUNT = 0
_STREAM_TIME = 1

DEFAULT_ORACLE_CAP = 20


class WindowError(ValueError):
    """A query or shift falls outside the sampled window."""


class OracleCapExceeded(RuntimeError):
    """Brute-force enumeration refused: too many events."""


@dataclass(frozen=True)
class Kernel:
    """Infection rate ``lam`` and symmetric finite-range kernel ``weights``."""

    lam: float
    weights: Mapping[int, float]

    def __post_init__(self):
        w = {int(d): float(p) for d, p in dict(self.weights).items() if p != 0}
        if self.lam < 0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be a finite non-negative rate, got {self.lam}")
        if not w:
            raise ValueError("kernel needs at least one nonzero weight")
        if 0 in w:
            raise ValueError("kernel weight at displacement 0 is not allowed")
        if any(p < 0 for p in w.values()):
            raise ValueError("kernel weights must be non-negative")
        total = sum(w.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"kernel weights must sum to 1, got {total!r}")
        for d, p in w.items():
            if abs(w.get(-d, 0.0) - p) > 1e-15:
                raise ValueError(f"kernel is not symmetric at displacement {d}")
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    @classmethod
    def nearest_neighbour(cls, lam: float) -> "Kernel":
        return cls(lam, {-1: 0.5, 1: 0.5})

    @classmethod
    def uniform(cls, lam: float, M: int) -> "Kernel":
        if M < 1:
            raise ValueError("range must be at least 1")
        p = 1.0 / (2 * M)
        return cls(lam, {d: p for d in range(-M, M + 1) if d != 0})

    @classmethod
    def from_weights(cls, lam: float, positive: Sequence[float]) -> "Kernel":
        """Symmetric kernel from unnormalised weights for d = 1..M."""
        pos = [float(v) for v in positive]
        if not pos or any(v < 0 for v in pos) or sum(pos) <= 0:
            raise ValueError("need non-negative weights with positive sum")
        z = 2.0 * sum(pos)
        w = {}
        for d, v in enumerate(pos, start=1):
            if v > 0:
                w[d] = v / z
                w[-d] = v / z
        return cls(lam, w)

    @property
    def range(self) -> int:
        return max(abs(d) for d in self.weights)

    def rate(self, d: int) -> float:
        return self.lam * self.weights.get(d, 0.0)

    def describe(self) -> str:
        return ",".join(f"{d}:{p!r}" for d, p in self.weights.items())


@dataclass(frozen=True)
class Window:
    """Sites x_min..x_max (inclusive) over times [0, t_max]."""

    x_min: int
    x_max: int
    t_max: float

    def __post_init__(self):
        if self.x_max < self.x_min:
            raise ValueError(f"empty spatial window [{self.x_min}, {self.x_max}]")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")

    @property
    def n_sites(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)

    def contains_site(self, x: int) -> bool:
        return self.x_min <= x <= self.x_max

    def contains(self, x: int, t: float) -> bool:
        return self.contains_site(x) and 0 <= t <= self.t_max


def guard_width(kernel: Kernel, t_max: float) -> int:
    """Default guard band: ceil(lambda * M * t_max) + 4M."""
    M = kernel.range
    return int(math.ceil(kernel.lam * M * t_max)) + 4 * M


@dataclass(frozen=True, eq=False)
class HarrisEvents:
    """Death and arrow events on a window, in tie-break order.

    ``abs_time`` and the site arrays are in the coordinates of the
    original sample; ``origin`` records the accumulated shift so that
    ``time = abs_time - origin[1]`` and ``site = abs_site - origin[0]``.
    """

    kernel: Kernel
    window: Window
    seed: int
    kind: np.ndarray
    abs_src: np.ndarray
    abs_dst: np.ndarray
    abs_time: np.ndarray
    origin: tuple = (0, 0.0)
    time: np.ndarray = field(init=False, repr=False)
    src: np.ndarray = field(init=False, repr=False)
    dst: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ox, ot = self.origin
        time = self.abs_time - ot if ot != 0.0 else self.abs_time.copy()
        src = self.abs_src - ox
        dst = self.abs_dst - ox
        for name, arr in (("kind", self.kind), ("abs_src", self.abs_src),
                          ("abs_dst", self.abs_dst), ("abs_time", self.abs_time)):
            arr.setflags(write=False)
        for arr in (time, src, dst):
            arr.setflags(write=False)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)

    def __len__(self) -> int:
        return int(self.kind.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, HarrisEvents):
            return NotImplemented
        return (self.kernel == other.kernel and self.window == other.window
                and self.seed == other.seed and self.origin == other.origin
                and np.array_equal(self.kind, other.kind)
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.time, other.time))

    __hash__ = None

    @property
    def n_deaths(self) -> int:
        return int(np.count_nonzero(self.kind == DEATH))

    @property
    def n_arrows(self) -> int:
        return int(np.count_nonzero(self.kind == ARROW))

    def deaths_at(self, x: int) -> np.ndarray:
        return self.time[(self.kind == DEATH) & (self.src == x)]

    def arrows_between(self, x: int, y: int) -> np.ndarray:
        return self.time[(self.kind == ARROW) & (self.src == x) & (self.dst == y)]

    def arrays(self):
        """Window-index arrays for the compiled sweeps (computed once)."""
        cached = self.__dict__.get("_arrays")
        if cached is None:
            x0 = self.window.x_min
            cached = (self.kind, (self.src - x0).astype(np.int64),
                      (self.dst - x0).astype(np.int64), self.time)
            object.__setattr__(self, "_arrays", cached)
        return cached

    def slab(self, t0: float, t1: float):
        """Window-index arrays restricted to events with t0 <= time <= t1."""
        lo = int(np.searchsorted(self.time, t0, side="left"))
        hi = int(np.searchsorted(self.time, t1, side="right"))
        kind, src, dst, time = self.arrays()
        return kind[lo:hi], src[lo:hi], dst[lo:hi], time[lo:hi]

    def events(self) -> Iterable[tuple]:
        """Yield (kind, src, dst, time) in processing order."""
        for k, a, b, t in zip(self.kind.tolist(), self.src.tolist(),
                              self.dst.tolist(), self.time.tolist()):
            yield k, a, b, t

    def without_event(self, index: int) -> "HarrisEvents":
        keep = np.ones(len(self), dtype=bool)
        keep[index] = False
        return self._subset(keep)

    def _subset(self, keep: np.ndarray) -> "HarrisEvents":
        return HarrisEvents(self.kernel, self.window, self.seed,
                            self.kind[keep].copy(), self.abs_src[keep].copy(),
                            self.abs_dst[keep].copy(), self.abs_time[keep].copy(),
                            self.origin)

    def restrict(self, window: Window) -> "HarrisEvents":
        """Events falling inside a sub-window (same coordinates)."""
        w = self.window
        if (window.x_min < w.x_min or window.x_max > w.x_max
                or window.t_max > w.t_max):
            raise WindowError(f"{window} is not inside {w}")
        keep = ((self.src >= window.x_min) & (self.src <= window.x_max)
                & (self.dst >= window.x_min) & (self.dst <= window.x_max)
                & (self.time <= window.t_max))
        sub = self._subset(keep)
        object.__setattr__(sub, "window", window)
        return sub


def _order(kind, src, dst, time) -> np.ndarray:
    return np.lexsort((dst - src, src, kind, time))


def from_event_list(kernel: Kernel, window: Window,
                    deaths: Iterable[tuple] = (), arrows: Iterable[tuple] = (),
                    seed: int = 0) -> HarrisEvents:
    """Build a HarrisEvents from explicit (x, t) deaths and (x, y, t) arrows."""
    deaths = list(deaths)
    arrows = list(arrows)
    kind = np.array([DEATH] * len(deaths) + [ARROW] * len(arrows), dtype=np.int8)
    src = np.array([d[0] for d in deaths] + [a[0] for a in arrows], dtype=np.int64)
    dst = np.array([d[0] for d in deaths] + [a[1] for a in arrows], dtype=np.int64)
    time = np.array([d[1] for d in deaths] + [a[2] for a in arrows], dtype=np.float64)
    for x, y, t in zip(src.tolist(), dst.tolist(), time.tolist()):
        if not (window.contains(x, t) and window.contains_site(y)):
            raise WindowError(f"event ({x}, {y}, {t}) outside {window}")
    o = _order(kind, src, dst, time)
    return HarrisEvents(kernel, window, int(seed), kind[o], src[o], dst[o], time[o])


def _stream(seed: int, tag: int, sites: np.ndarray, disp: np.ndarray,
            rate: np.ndarray, n_cells: int, t_max: float):
    """Poisson streams, one per (site, displacement), cut into unit cells.

    Cell j of a stream holds a Poisson(rate) count of uniform times in
    [j, j+1), keyed by (seed, tag, site, displacement, j, k).
    """
    if sites.size == 0 or n_cells == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    cells = np.arange(n_cells, dtype=np.int64)
    S = sites[:, None]
    D = disp[:, None]
    C = cells[None, :]
    u = uniforms(seed, tag, S, D, C, _STREAM_COUNT)
    counts = np.zeros(u.shape, dtype=np.int64)
    for rv in np.unique(rate):
        rows = rate == rv
        counts[rows] = poisson_counts(u[rows], poisson_cdf_table(float(rv)))
    flat = counts.ravel()
    total = int(flat.sum())
    if total == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    ss = np.repeat(np.broadcast_to(S, counts.shape).ravel(), flat)
    dd = np.repeat(np.broadcast_to(D, counts.shape).ravel(), flat)
    cc = np.repeat(np.broadcast_to(C, counts.shape).ravel(), flat)
    starts = np.cumsum(flat) - flat
    k = np.arange(total, dtype=np.int64) - np.repeat(starts, flat)
    t = cc + uniforms(seed, tag, ss, dd, cc, _STREAM_TIME + 1 + k)
    keep = t <= t_max
    return ss[keep], ss[keep] + dd[keep], t[keep]


def sample_harris(kernel: Kernel, window: Window, seed: int) -> HarrisEvents:
    """Sample all Poisson event streams on ``window``.

    Deterministic in (kernel, window, seed).  Each stream is keyed by
    (seed, kind, site, displacement, unit time cell), so the events inside
    a sub-window do not depend on the size of the enclosing window.
    """
    if not isinstance(window, Window):
        raise TypeError("window must be a Window")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    n_cells = int(math.ceil(window.t_max))
    sites = window.sites.astype(np.int64)
    d_src, d_dst, d_t = _stream(seed, _STREAM_DEATH, sites, np.zeros_like(sites),
                                np.ones(sites.size), n_cells, window.t_max)
    pair_src = []
    pair_d = []
    pair_rate = []
    for d, p in kernel.weights.items():
        rate = kernel.lam * p
        if rate <= 0:
            continue
        xs = sites[(sites + d >= window.x_min) & (sites + d <= window.x_max)]
        pair_src.append(xs)
        pair_d.append(np.full(xs.size, d, dtype=np.int64))
        pair_rate.append(np.full(xs.size, rate))
    if pair_src:
        a_src, a_dst, a_t = _stream(seed, _STREAM_ARROW, np.concatenate(pair_src),
                                    np.concatenate(pair_d), np.concatenate(pair_rate),
                                    n_cells, window.t_max)
    else:
        a_src = a_dst = np.empty(0, np.int64)
        a_t = np.empty(0)
    kind = np.concatenate([np.zeros(d_t.size, np.int8), np.ones(a_t.size, np.int8)])
    src = np.concatenate([d_src, a_src])
    dst = np.concatenate([d_dst, a_dst])
    time = np.concatenate([d_t, a_t])
    o = _order(kind, src, dst, time)
    return HarrisEvents(kernel, window, seed, kind[o], src[o], dst[o], time[o])


def shift_events(h: HarrisEvents, x: int, t: float) -> HarrisEvents:
    """The construction seen from space-time origin (x, t).

    Site z of the result is site z + x of ``h``; time s of the result is
    time s + t of ``h``.  Events before time t are dropped.
    """
    w = h.window
    if not 0 <= t < w.t_max:
        raise WindowError(f"time shift {t} leaves nothing of [0, {w.t_max}]")
    ox, ot = h.origin
    new_origin = (ox + int(x), ot + float(t))
    keep = h.abs_time >= new_origin[1]
    abs_tmax = w.t_max + ot
    new_window = Window(w.x_min - int(x), w.x_max - int(x), abs_tmax - new_origin[1])
    return HarrisEvents(h.kernel, new_window, h.seed, h.kind[keep].copy(),
                        h.abs_src[keep].copy(), h.abs_dst[keep].copy(),
                        h.abs_time[keep].copy(), new_origin)


@dataclass(frozen=True)
class SpaceTimeRegion:
    """Finite union of (site set) x [t0, t1] blocks.

    A site of a block with t0 < t1 counts as reached throughout [t0, t1],
    even across a death mark.  A block with t0 == t1 is a set of point
    sources, which a death at that same instant removes.
    """

    blocks: tuple

    @classmethod
    def at_time(cls, sites: Iterable[int], t: float = 0.0) -> "SpaceTimeRegion":
        return cls(((tuple(int(s) for s in sites), float(t), float(t)),))

    @classmethod
    def point(cls, x: int, t: float = 0.0) -> "SpaceTimeRegion":
        return cls.at_time([x], t)

    @classmethod
    def band(cls, sites: Iterable[int], t0: float, t1: float) -> "SpaceTimeRegion":
        if t1 < t0:
            raise ValueError("band with t1 < t0")
        return cls(((tuple(int(s) for s in sites), float(t0), float(t1)),))

    def __or__(self, other: "SpaceTimeRegion") -> "SpaceTimeRegion":
        return SpaceTimeRegion(self.blocks + other.blocks)

    def check_inside(self, window: Window) -> None:
        for sites, t0, t1 in self.blocks:
            if t0 < 0 or t1 > window.t_max:
                raise WindowError(f"source times [{t0}, {t1}] outside [0, {window.t_max}]")
            for s in sites:
                if not window.contains_site(s):
                    raise WindowError(f"source site {s} outside [{window.x_min}, {window.x_max}]")


@dataclass(frozen=True)
class ReachMap:
    """Reached sites at each query time."""

    times: np.ndarray
    reached: np.ndarray  # bool, (n_times, n_sites)
    x_min: int
    inside: frozenset | None = None

    def at(self, i: int) -> frozenset:
        return frozenset((np.flatnonzero(self.reached[i]) + self.x_min).tolist())

    def sets(self) -> list:
        return [self.at(i) for i in range(len(self.times))]

    def contains(self, i: int, y: int) -> bool:
        j = y - self.x_min
        return 0 <= j < self.reached.shape[1] and bool(self.reached[i, j])


def _allowed_mask(window: Window, inside) -> np.ndarray:
    if inside is None:
        return np.ones(window.n_sites, dtype=np.bool_)
    mask = np.zeros(window.n_sites, dtype=np.bool_)
    for s in inside:
        if window.contains_site(s):
            mask[s - window.x_min] = True
    return mask


def _source_arrays(window: Window, regions: Sequence[SpaceTimeRegion]):
    st, si, t0s, t1s = [], [], [], []
    for k, reg in enumerate(regions):
        for sites, t0, t1 in reg.blocks:
            idx = np.asarray(sites, dtype=np.int64) - window.x_min
            st.append(np.full(idx.size, k, dtype=np.int64))
            si.append(idx)
            t0s.append(np.full(idx.size, t0))
            t1s.append(np.full(idx.size, t1))
    if st:
        st, si = np.concatenate(st), np.concatenate(si)
        t0s, t1s = np.concatenate(t0s), np.concatenate(t1s)
    else:
        st = si = np.empty(0, np.int64)
        t0s = t1s = np.empty(0)
    pin = t1s > t0s
    a = np.argsort(t0s, kind="stable")
    e = np.flatnonzero(pin)
    e = e[np.argsort(t1s[e], kind="stable")]
    return (st[a], si[a], t0s[a], pin[a], st[e], si[e], t1s[e])


def closure_many(h: HarrisEvents, regions: Sequence[SpaceTimeRegion],
                 query_times: Sequence[float], inside=None):
    """Forward closure for several source regions in one sweep.

    Returns (reached[n_q, n_regions, n_sites], touched[n_regions, n_sites]);
    only events up to the last query time are swept, so ``touched`` covers
    that span.
    """
    w = h.window
    q = np.asarray(query_times, dtype=np.float64)
    if q.ndim != 1:
        raise ValueError("query_times must be one-dimensional")
    if q.size and (np.any(np.diff(q) < 0)):
        raise ValueError("query_times must be non-decreasing")
    if q.size and (q[0] < 0 or q[-1] > w.t_max):
        raise WindowError(f"query times must lie in [0, {w.t_max}]")
    for reg in regions:
        reg.check_inside(w)
    kind, src, dst, time = h.arrays()
    sources = _source_arrays(w, regions)
    # nothing is reached before the first source opens
    start = int(np.searchsorted(time, sources[2][0], side="left")) if sources[2].size else 0
    stop = int(np.searchsorted(time, q[-1], side="right")) if q.size else time.size
    stop = max(start, stop)
    kind, src, dst, time = kind[start:stop], src[start:stop], dst[start:stop], time[start:stop]
    allowed = _allowed_mask(w, inside)
    return _sweep.closure_sweep(kind, src, dst, time, w.n_sites, allowed,
                                *sources, len(regions), q)


def forward_closure(h: HarrisEvents, sources: SpaceTimeRegion,
                    query_times: Sequence[float], inside=None) -> ReachMap:
    """Sites y with ``sources`` <-> (y, t), for each query time t.

    With ``inside`` (a set of sites), paths are confined to that set.
    """
    out, _ = closure_many(h, [sources], query_times, inside)
    return ReachMap(np.asarray(query_times, dtype=np.float64), out[:, 0, :].copy(),
                    h.window.x_min, None if inside is None else frozenset(inside))


def connects(h: HarrisEvents, start: tuple, end: tuple, inside=None) -> bool:
    """Whether an infection path joins (x, s) to (y, t)."""
    (x, s), (y, t) = start, end
    if t < s:
        raise ValueError(f"paths run forward in time: {s} > {t}")
    if not h.window.contains(x, s):
        raise WindowError(f"start {start} outside {h.window}")
    if not h.window.contains(y, t):
        raise WindowError(f"end {end} outside {h.window}")
    if inside is not None and x not in inside:
        return False
    if t == s:
        return x == y
    rm = forward_closure(h, SpaceTimeRegion.point(x, s), [t], inside)
    return rm.contains(0, y)


def brute_force_segments(h: HarrisEvents, start: tuple, t_end: float,
                         inside=None, cap: int = DEFAULT_ORACLE_CAP) -> list:
    """Enumerate every infection path from ``start`` up to ``t_end``.

    Each path is followed event by event; the result lists the maximal
    (site, t_from, t_until) stays of all paths, where ``t_until`` is the
    time of the killing death (exclusive) or +inf.
    """
    if len(h) > cap:
        raise OracleCapExceeded(f"{len(h)} events exceed the oracle cap {cap}")
    x, s = start
    if inside is not None and x not in inside:
        return []
    ev = list(h.events())
    first = 0
    while first < len(ev) and ev[first][3] < s:
        first += 1
    last = len(ev)
    while last > 0 and ev[last - 1][3] > t_end:
        last -= 1
    out = []

    def walk(site, i, since):
        j = i
        while j < last:
            k, a, b, t = ev[j]
            if a == site:
                if k == DEATH:
                    out.append((site, since, t))
                    return
                if inside is None or b in inside:
                    walk(b, j + 1, t)
            j += 1
        out.append((site, since, math.inf))

    walk(x, first, s)
    return out


def brute_force_connects(h: HarrisEvents, start: tuple, end: tuple,
                         inside=None, cap: int = DEFAULT_ORACLE_CAP) -> bool:
    """Exhaustive-path answer to ``connects`` for small constructions."""
    (x, s), (y, t) = start, end
    if t < s:
        raise ValueError(f"paths run forward in time: {s} > {t}")
    if len(h) > cap:
        raise OracleCapExceeded(f"{len(h)} events exceed the oracle cap {cap}")
    if t == s:
        return x == y and (inside is None or x in inside)
    for site, t_from, t_until in brute_force_segments(h, start, t, inside, cap):
        if site == y and t_from <= t < t_until:
            return True
    return False


# --- text serialisation -------------------------------------------------

_FORMAT = "harris-events v1"


def dumps_events(h: HarrisEvents) -> str:
    """Line-oriented text: header then ``D x t`` / ``A x y t`` lines.

    Coordinates are those of the original sample; the ``origin`` line
    carries any accumulated shift.
    """
    w = h.window
    ox, ot = h.origin
    abs_tmax = w.t_max + ot
    lines = [f"# {_FORMAT}",
             f"seed {h.seed}",
             f"window {w.x_min + ox} {w.x_max + ox} {abs_tmax!r}",
             f"kernel {h.kernel.lam!r} {h.kernel.describe()}",
             f"origin {ox} {ot!r}"]
    for k, a, b, t in zip(h.kind.tolist(), h.abs_src.tolist(),
                          h.abs_dst.tolist(), h.abs_time.tolist()):
        if k == DEATH:
            lines.append(f"D {a} {t!r}")
        else:
            lines.append(f"A {a} {b} {t!r}")
    return "\n".join(lines) + "\n"


def loads_events(text: str) -> HarrisEvents:
    header = {}
    kinds, srcs, dsts, times = [], [], [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "D":
            kinds.append(DEATH)
            srcs.append(int(parts[1]))
            dsts.append(int(parts[1]))
            times.append(float(parts[2]))
        elif tag == "A":
            kinds.append(ARROW)
            srcs.append(int(parts[1]))
            dsts.append(int(parts[2]))
            times.append(float(parts[3]))
        else:
            header[tag] = parts[1:]
    for key in ("seed", "window", "kernel", "origin"):
        if key not in header:
            raise ValueError(f"missing '{key}' header line")
    weights = {}
    for item in header["kernel"][1].split(","):
        d, p = item.split(":")
        weights[int(d)] = float(p)
    kernel = Kernel(float(header["kernel"][0]), weights)
    xw = header["window"]
    abs_window = Window(int(xw[0]), int(xw[1]), float(xw[2]))
    ox, ot = int(header["origin"][0]), float(header["origin"][1])
    kind = np.array(kinds, dtype=np.int8)
    src = np.array(srcs, dtype=np.int64)
    dst = np.array(dsts, dtype=np.int64)
    time = np.array(times, dtype=np.float64)
    o = _order(kind, src, dst, time)
    base = HarrisEvents(kernel, abs_window, int(header["seed"][0]),
                        kind[o], src[o], dst[o], time[o])
    if ox == 0 and ot == 0.0:
        return base
    return shift_events(base, ox, ot)


def dump_events(h: HarrisEvents, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_events(h))


def load_events(path) -> HarrisEvents:
    with open(path) as fh:
        return loads_events(fh.read())
