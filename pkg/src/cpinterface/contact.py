"""Contact-process trajectories built pathwise from a Harris construction.

Every trajectory here is the set of sites reachable from ``init x {0}``,
so any number of initial conditions evolved on the same events are
coupled.  Half-infinite initial conditions are clipped to the window;
the truncation is tracked through the death-ignoring influence fronts of
the two window edges and reported as contamination.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _sweep
from .graphical import (HarrisEvents, SpaceTimeRegion, WindowError, closure_many,
                        forward_closure, shift_events)

CSV_SCHEMA = "# schema: interface-series v1"
CSV_COLUMNS = ("time", "r", "l", "rho", "rho_plus", "rho_minus", "contaminated")
EMPTY_EDGE = None  # right edge of an empty configuration


class ContaminationError(RuntimeError):
    """The window edge influenced an observable that must be exact."""


@dataclass(frozen=True)
class Configuration:
    """A set of infected sites, optionally with half-infinite tails.

    ``left_tail = a`` means every x <= a is infected; ``right_tail = b``
    means every x >= b is infected.  Tails are clipped to the window.
    """

    sites: frozenset = frozenset()
    left_tail: int | None = None
    right_tail: int | None = None

    @classmethod
    def of(cls, sites) -> "Configuration":
        return cls(frozenset(int(s) for s in sites))

    @classmethod
    def empty(cls) -> "Configuration":
        return cls()

    @classmethod
    def half_line(cls, a: int = 0) -> "Configuration":
        """All sites x <= a."""
        return cls(left_tail=a)

    @classmethod
    def full(cls) -> "Configuration":
        """All ones."""
        return cls(left_tail=0, right_tail=1)

    @property
    def left_filled(self) -> bool:
        return self.left_tail is not None

    @property
    def right_filled(self) -> bool:
        return self.right_tail is not None

    def mask(self, x_min: int, x_max: int) -> np.ndarray:
        n = x_max - x_min + 1
        m = np.zeros(n, dtype=bool)
        for s in self.sites:
            if not x_min <= s <= x_max:
                raise WindowError(f"initial site {s} outside [{x_min}, {x_max}]")
            m[s - x_min] = True
        if self.left_tail is not None:
            hi = min(self.left_tail, x_max) - x_min
            if hi >= 0:
                m[:hi + 1] = True
        if self.right_tail is not None:
            lo = max(self.right_tail, x_min) - x_min
            if lo < n:
                m[lo:] = True
        return m

    def union(self, other: "Configuration") -> "Configuration":
        lt = [t for t in (self.left_tail, other.left_tail) if t is not None]
        rt = [t for t in (self.right_tail, other.right_tail) if t is not None]
        return Configuration(self.sites | other.sites,
                             max(lt) if lt else None, min(rt) if rt else None)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one initial condition at the sample times.

    ``occupied[i, j]`` is the state of site ``x_min + j`` at
    ``sample_times[i]``.
    """

    init: Configuration
    sample_times: np.ndarray
    occupied: np.ndarray
    x_min: int
    boundary_contaminated: bool = False

    @property
    def states(self) -> list:
        return [self.state(i) for i in range(len(self.sample_times))]

    def state(self, i: int) -> frozenset:
        return frozenset((np.flatnonzero(self.occupied[i]) + self.x_min).tolist())

    def right_edge(self, i: int):
        idx = np.flatnonzero(self.occupied[i])
        return EMPTY_EDGE if idx.size == 0 else int(idx[-1]) + self.x_min

    def edge_series(self) -> "EdgeSeries":
        return EdgeSeries(self.sample_times.copy(),
                          [self.right_edge(i) for i in range(len(self.sample_times))])


@dataclass(frozen=True)
class EdgeSeries:
    """Right-edge values r_t; ``None`` marks an empty configuration."""

    times: np.ndarray
    values: list

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class InterfaceSeries:
    times: np.ndarray
    r: np.ndarray
    l: np.ndarray
    contaminated: np.ndarray
    running_max: np.ndarray = field(repr=False, default=None)
    edge: EdgeSeries | None = field(repr=False, default=None)
    first_violation: np.ndarray = field(repr=False, default=None)
    fronts: tuple = field(repr=False, default=None)

    @property
    def rho(self) -> np.ndarray:
        return self.r - self.l

    @property
    def rho_plus(self) -> np.ndarray:
        return np.maximum(self.rho, 0)

    @property
    def rho_minus(self) -> np.ndarray:
        return np.maximum(-self.rho, 0)

    @property
    def any_contaminated(self) -> bool:
        return bool(np.any(self.contaminated))

    def rows(self):
        for i, t in enumerate(self.times.tolist()):
            yield (t, int(self.r[i]), int(self.l[i]), int(self.rho[i]),
                   int(self.rho_plus[i]), int(self.rho_minus[i]),
                   int(bool(self.contaminated[i])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_SCHEMA + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow((repr(row[0]),) + row[1:])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class ChiTrajectory:
    sample_times: np.ndarray
    values: np.ndarray  # int8, (n_times, n_sites)
    x_min: int

    def at(self, i: int) -> dict:
        return {self.x_min + j: int(v) for j, v in enumerate(self.values[i])}


def _check_times(h: HarrisEvents, sample_times) -> np.ndarray:
    t = np.asarray(sample_times, dtype=np.float64)
    if t.ndim != 1:
        raise ValueError("sample_times must be one-dimensional")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    if t.size and (t[0] < 0 or t[-1] > h.window.t_max):
        raise WindowError(f"sample times outside [0, {h.window.t_max}]")
    return t


def couple(h: HarrisEvents, inits: Sequence[Configuration],
           sample_times) -> list:
    """Evolve every initial condition on the same events, in one sweep."""
    t = _check_times(h, sample_times)
    w = h.window
    regions = []
    for c in inits:
        m = c.mask(w.x_min, w.x_max)
        regions.append(SpaceTimeRegion.at_time((np.flatnonzero(m) + w.x_min).tolist(), 0.0))
    out, touched = closure_many(h, regions, t)
    trajs = []
    for k, c in enumerate(inits):
        hit_left = not c.left_filled and bool(touched[k, 0])
        hit_right = not c.right_filled and bool(touched[k, -1])
        trajs.append(Trajectory(c, t, out[:, k, :].copy(), w.x_min,
                                hit_left or hit_right))
    return trajs


def evolve(h: HarrisEvents, init: Configuration, sample_times) -> Trajectory:
    """eta_t^{init}(H) at each sample time.

    ``boundary_contaminated`` is set when an infection path from a
    non-tail part of the initial condition touches a window edge on a
    side that carries no filled tail.
    """
    return couple(h, [init], sample_times)[0]


def interface_series(h: HarrisEvents, sample_times, gammas=(),
                     record_edge: bool = False) -> InterfaceSeries:
    """r_t, l_t and rho_t from the coupled half-line / all-ones pair.

    A sample is flagged contaminated when l_t or r_t lies inside a
    boundary influence zone, when the pair disagrees at the left window
    edge, or (sticky) once the edge process has entered either zone.
    """
    t = _check_times(h, sample_times)
    w = h.window
    if not w.contains_site(0):
        raise WindowError("the window must contain site 0")
    kind, src, dst, time = h.arrays()
    res = _sweep.interface_sweep(kind, src, dst, time, w.n_sites, -w.x_min,
                                 h.kernel.range, t, np.asarray(gammas, dtype=np.float64),
                                 record_edge)
    r_i, l_i, q_i, cont, fl, fr, first_viol, et, ev, sticky = res
    edge = None
    if record_edge:
        vals = [None if v < 0 else int(v) + w.x_min for v in ev.tolist()]
        edge = EdgeSeries(et.copy(), vals)
    return InterfaceSeries(t, r_i + w.x_min, l_i + w.x_min, cont.copy(),
                           q_i + w.x_min, edge, first_viol,
                           (fl + w.x_min, fr + w.x_min))


def chi_from_coupling(lower: Trajectory, upper: Trajectory) -> ChiTrajectory:
    """chi = 1 where the lower process is infected, 2 where only the upper is."""
    if (lower.sample_times.shape != upper.sample_times.shape
            or not np.array_equal(lower.sample_times, upper.sample_times)):
        raise ValueError("trajectories use different sample grids")
    if lower.x_min != upper.x_min or lower.occupied.shape != upper.occupied.shape:
        raise ValueError("trajectories use different windows")
    chi = np.zeros(lower.occupied.shape, dtype=np.int8)
    chi[upper.occupied] = 2
    chi[lower.occupied] = 1
    return ChiTrajectory(lower.sample_times, chi, lower.x_min)


def standard_chi(h: HarrisEvents) -> np.ndarray:
    """I_{(-inf,0]} + 2 I_{(0,inf)} on the window."""
    w = h.window
    sites = w.sites
    return np.where(sites <= 0, 1, 2).astype(np.int8)


def chi_direct(h: HarrisEvents, chi_init, sample_times) -> ChiTrajectory:
    """Run the three-state competition directly on the events."""
    t = _check_times(h, sample_times)
    chi0 = np.asarray(chi_init, dtype=np.int8)
    if chi0.shape != (h.window.n_sites,):
        raise ValueError("chi_init must give one value per window site")
    if np.any((chi0 < 0) | (chi0 > 2)):
        raise ValueError("chi values must be in {0, 1, 2}")
    kind, src, dst, time = h.arrays()
    vals = _sweep.chi_sweep(kind, src, dst, time, chi0.copy(), t)
    return ChiTrajectory(t, vals, h.window.x_min)


def is_gamma_slow(h: HarrisEvents, gamma: float, T: float) -> bool:
    """r_t <= gamma * t for every t <= T, checked at every event."""
    if T > h.window.t_max:
        raise WindowError(f"T={T} beyond t_max={h.window.t_max}")
    sub = h if T == h.window.t_max else _truncate(h, T)
    s = interface_series(sub, [T], gammas=[gamma])
    if s.any_contaminated:
        raise ContaminationError("edge process reached a boundary influence zone")
    return not s.first_violation[0] <= T


def _truncate(h: HarrisEvents, T: float) -> HarrisEvents:
    from .graphical import Window
    w = h.window
    return h.restrict(Window(w.x_min, w.x_max, T))


def running_max_edge(e: EdgeSeries) -> EdgeSeries:
    """Prefix maxima of an edge series (q_T = max_{t<=T} r_t)."""
    if len(e) == 0:
        raise ValueError("empty edge series")
    out = []
    best = None
    for v in e.values:
        if v is not None and (best is None or v > best):
            best = v
        out.append(best)
    return EdgeSeries(np.asarray(e.times).copy(), out)


def right_path_inside_event(h: HarrisEvents, L: int, T: float,
                            strict: bool = True) -> bool:
    """[0, inf) x {0} <-> [0, L] x {T} with paths inside {x >= 1} or {x >= 0}.

    ``strict`` selects the open half-line (0, inf); the source set is
    clipped to the restriction set either way.
    """
    w = h.window
    if T > w.t_max:
        raise WindowError(f"T={T} beyond t_max={w.t_max}")
    lo = 1 if strict else 0
    if w.x_min > lo or w.x_max < max(L, lo):
        raise WindowError("window must cover [0, L]")
    inside = range(lo, w.x_max + 1)
    kind, src, dst, time = h.arrays()
    band = h.kernel.range
    _, fr = _sweep.influence_fronts(kind, src, dst, time, w.n_sites, band,
                                    np.array([T]))
    if fr[0] + w.x_min <= L:
        raise ContaminationError("right window edge influences [0, L] by time T")
    rm = forward_closure(h, SpaceTimeRegion.at_time(range(lo, w.x_max + 1), 0.0),
                         [T], inside=inside)
    reached = np.flatnonzero(rm.reached[0]) + w.x_min
    return bool(np.any((reached >= 0) & (reached <= L)))


def markov_split(h: HarrisEvents, init: Configuration, s: float,
                 t: float) -> tuple:
    """Evolve to s, restart from that state on H^{(0,s)}, run t more.

    Returns (state via restart, state via direct run) for comparison.
    """
    direct = evolve(h, init, [s + t]).state(0)
    mid = evolve(h, init, [s]).state(0)
    shifted = shift_events(h, 0, s)
    again = evolve(shifted, Configuration.of(mid), [min(t, shifted.window.t_max)])
    return again.state(0), direct


def survival_time(h: HarrisEvents, x: int = 0) -> float:
    """Extinction time of the process started from {x} (inf if it outlives the window)."""
    kind, src, dst, time = h.arrays()
    w = h.window
    alive = np.zeros(w.n_sites, dtype=np.bool_)
    alive[x - w.x_min] = True
    return float(_sweep.survival(kind, src, dst, time, alive))
