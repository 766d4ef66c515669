"""Oriented site percolation on {(m, n): m + n even, n >= 0}.

Fields are stored as boolean arrays ``open[n, m + m_max]``; cells with
odd m + n are never open.  Open paths step m -> m +- 1 per level and
must be open at every visited cell, the first one included.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rng import uniforms
from .stats import wilson_interval

_STREAM_FIELD = 0x50


@dataclass(frozen=True, eq=False)
class PercField:
    m_max: int
    n_max: int
    open: np.ndarray  # bool (n_max + 1, 2 m_max + 1)
    source: str = ""

    def __post_init__(self):
        shape = (self.n_max + 1, 2 * self.m_max + 1)
        if self.open.shape != shape:
            raise ValueError(f"field array has shape {self.open.shape}, expected {shape}")
        if np.any(self.open & ~parity_mask(self.m_max, self.n_max)):
            raise ValueError("open cell with odd m + n")

    def is_open(self, m: int, n: int) -> bool:
        if abs(m) > self.m_max or not 0 <= n <= self.n_max or (m + n) % 2:
            return False
        return bool(self.open[n, m + self.m_max])

    def cells(self) -> Iterable[tuple]:
        for n in range(self.n_max + 1):
            for m in range(-self.m_max, self.m_max + 1):
                if (m + n) % 2 == 0:
                    yield m, n

    def with_cell(self, m: int, n: int, value: bool) -> "PercField":
        if (m + n) % 2:
            raise ValueError(f"({m}, {n}) is off the lattice")
        arr = self.open.copy()
        arr[n, m + self.m_max] = value
        return PercField(self.m_max, self.n_max, arr, self.source)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("m", "n", "open"))
        for m, n in self.cells():
            w.writerow((m, n, int(self.is_open(m, n))))
        return buf.getvalue()


def parity_mask(m_max: int, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)[:, None]
    m = np.arange(-m_max, m_max + 1)[None, :]
    return (m + n) % 2 == 0


def sample_field(p: float, m_max: int, n_max: int, seed: int) -> PercField:
    """Independent Bernoulli(p) cells, keyed by (seed, m, n)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    n = np.arange(n_max + 1)[:, None]
    m = np.arange(-m_max, m_max + 1)[None, :]
    u = uniforms(int(seed), _STREAM_FIELD, m, n)
    arr = (u < p) & parity_mask(m_max, n_max)
    return PercField(m_max, n_max, arr, f"bernoulli({p!r}, {int(seed)})")


@dataclass(frozen=True, eq=False)
class LevelSets:
    """Cells reachable by open paths, level by level."""

    reach: np.ndarray  # bool (n_max + 1, 2 m_max + 1)
    m_max: int
    start_level: int = 0

    def level(self, n: int) -> frozenset:
        return frozenset((np.flatnonzero(self.reach[n]) - self.m_max).tolist())

    @property
    def rightmost(self) -> list:
        """R_n per level; None once the cluster has died."""
        out = []
        for row in self.reach:
            idx = np.flatnonzero(row)
            out.append(None if idx.size == 0 else int(idx[-1]) - self.m_max)
        return out


def _step(prev: np.ndarray) -> np.ndarray:
    nxt = np.zeros_like(prev)
    nxt[1:] |= prev[:-1]
    nxt[:-1] |= prev[1:]
    return nxt


def open_reach(f: PercField, sources: Iterable[tuple], allowed=None) -> LevelSets:
    """Level-by-level DP of open-path reachability from ``sources``.

    Sources must share one level.  ``allowed`` optionally masks cells the
    paths may use (same shape as the field).
    """
    sources = list(sources)
    if not sources:
        raise ValueError("no source cells")
    levels = {n for _, n in sources}
    if len(levels) != 1:
        raise ValueError("sources must lie on a single level")
    n0 = levels.pop()
    ok = f.open if allowed is None else (f.open & allowed)
    reach = np.zeros_like(f.open)
    for m, n in sources:
        if (m + n) % 2:
            raise ValueError(f"source ({m}, {n}) is off the lattice")
        if abs(m) <= f.m_max and 0 <= n <= f.n_max:
            reach[n, m + f.m_max] = ok[n, m + f.m_max]
    for n in range(n0 + 1, f.n_max + 1):
        reach[n] = _step(reach[n - 1]) & ok[n]
    return LevelSets(reach, f.m_max, n0)


def percolates_to(f: PercField, cell: tuple, n: int) -> bool:
    """Whether ``cell`` is joined by an open path to some cell at height n."""
    m0, n0 = cell
    if n < n0:
        raise ValueError("target level below the start")
    if n > f.n_max:
        raise ValueError(f"level {n} beyond the field height {f.n_max}")
    return bool(open_reach(f, [cell]).reach[n].any())


def _side_masks(f: PercField, beta: float):
    n = np.arange(f.n_max + 1)[:, None]
    m = np.arange(-f.m_max, f.m_max + 1)[None, :]
    return m < -beta * n, m > beta * n


def _witness(reach: np.ndarray, level: int) -> list:
    """Backtrack one open path ending at ``level`` (column indices)."""
    c = int(np.flatnonzero(reach[level])[0])
    path = [c]
    for n in range(level, 0, -1):
        prev = reach[n - 1]
        c = c - 1 if c >= 1 and prev[c - 1] else c + 1
        path.append(c)
    return path[::-1]


@dataclass(frozen=True)
class GammaWitness:
    left: list  # m_n for n = 0..i
    right: list


def gamma_event(f: PercField, beta: float, i: int, witness: bool = False):
    """Two open paths from (-2, 0) and (2, 0) reaching level i, avoiding
    the cone {-beta n <= m <= beta n}.

    With ``witness=True`` returns a GammaWitness (or None) instead of a bool.
    """
    if i > f.n_max:
        raise ValueError(f"level {i} beyond the field height {f.n_max}")
    if f.m_max < 2:
        raise ValueError("field too narrow for the side paths")
    left_ok, right_ok = _side_masks(f, beta)
    L = open_reach(f, [(-2, 0)], left_ok)
    R = open_reach(f, [(2, 0)], right_ok)
    ok = bool(L.reach[i].any() and R.reach[i].any())
    if not witness:
        return ok
    if not ok:
        return None
    left = [c - f.m_max for c in _witness(L.reach, i)]
    right = [c - f.m_max for c in _witness(R.reach, i)]
    return GammaWitness(left, right)


def gamma_horizon(f: PercField, beta: float) -> int:
    """Largest i with Gamma(i), or -1 when Gamma(0) already fails."""
    left_ok, right_ok = _side_masks(f, beta)
    L = open_reach(f, [(-2, 0)], left_ok).reach.any(axis=1)
    R = open_reach(f, [(2, 0)], right_ok).reach.any(axis=1)
    both = L & R
    if not both[0]:
        return -1
    bad = np.flatnonzero(~both)
    return int(bad[0] - 1) if bad.size else f.n_max


def brute_force_reach(f: PercField, source: tuple, target: tuple) -> bool:
    """Enumerate every +-1 path from source to target (small fields only)."""
    (m0, n0), (m1, n1) = source, target
    if n1 < n0:
        return False
    if not f.is_open(m0, n0):
        return False
    if n1 == n0:
        return m0 == m1

    def go(m, n):
        if n == n1:
            return m == m1
        return any(f.is_open(m + d, n + 1) and go(m + d, n + 1) for d in (-1, 1))

    return go(m0, n0)


# --- closure estimate ---------------------------------------------------

@dataclass(frozen=True)
class ClosureRow:
    r: int
    count: int
    freq: float
    eps_hat: float
    ci_lo: float
    ci_hi: float
    n: int = 0

    def as_dict(self) -> dict:
        return {"r": self.r, "count": self.count, "n": self.n, "freq": self.freq,
                "eps_hat": self.eps_hat, "ci_lo": self.ci_lo, "ci_hi": self.ci_hi}


def _tuples_in_row(m_lo: int, m_hi: int, n: int, r: int, k: int) -> list:
    """Disjoint r-tuples of lattice cells on row n, pairwise more than 2k apart."""
    gap = 2 * k + 1
    if (m_lo + n) % 2:
        m_lo += 1
    if gap % 2:
        gap += 1
    cells = list(range(m_lo, m_hi + 1, gap))
    return [cells[j:j + r] for j in range(0, len(cells) - r + 1, r)]


def closure_estimate(fields: Sequence[PercField], k: int, max_r: int = 3,
                     rows: Sequence[int] | None = None,
                     min_samples: int = 30) -> list:
    """Empirical eps_hat(r) = P(r well-separated cells all closed)^(1/r).

    This is the unconditional proxy for the k-dependent closure bound:
    each row of each field is cut into disjoint r-tuples of cells more
    than 2k apart, and every tuple counts as one Bernoulli sample.
    """
    if not fields:
        raise ValueError("empty ensemble")
    out = []
    for r in range(1, max_r + 1):
        hits = total = 0
        for f in fields:
            levels = range(f.n_max + 1) if rows is None else rows
            for n in levels:
                for tup in _tuples_in_row(-f.m_max, f.m_max, n, r, k):
                    total += 1
                    if not any(f.is_open(m, n) for m in tup):
                        hits += 1
        if total < min_samples:
            raise ValueError(f"only {total} samples for r={r}; need {min_samples}")
        freq = hits / total
        lo, hi = wilson_interval(hits, total)
        out.append(ClosureRow(r, hits, freq, freq ** (1.0 / r), lo ** (1.0 / r),
                              hi ** (1.0 / r), total))
    return out


def closure_json(rows: Sequence[ClosureRow]) -> str:
    return json.dumps([row.as_dict() for row in rows], indent=2, sort_keys=True)


# --- escape from Gamma ----------------------------------------------------

@dataclass(frozen=True)
class EscapeRow:
    i: int
    count: int
    n: int
    freq: float
    ci_lo: float
    ci_hi: float


def gamma_escape(p: float, beta: float, levels: Sequence[int], n_fields: int,
                 height: int, seed: int = 0) -> list:
    """P(Gamma(i) holds but the side paths stop before ``height``), per i.

    ``height`` stands in for the infinite event Gamma; it must exceed every
    requested level.
    """
    levels = [int(i) for i in levels]
    if not levels or max(levels) >= height:
        raise ValueError("levels must lie below the field height")
    horizons = np.array([gamma_horizon(sample_field(p, height + 2, height, seed ^ f), beta)
                         for f in range(n_fields)])
    out = []
    for i in levels:
        k = int(((horizons >= i) & (horizons < height)).sum())
        lo, hi = wilson_interval(k, n_fields)
        out.append(EscapeRow(i, k, n_fields, k / n_fields, lo, hi))
    return out
