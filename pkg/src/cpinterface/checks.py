"""Invariant suites shared by ``verify`` and the test-suite.

Each suite builds its own random constructions from a seed and returns a
SuiteResult; a correct build reports zero violations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .contact import Configuration, chi_direct, chi_from_coupling, couple, standard_chi
from .graphical import (Kernel, Window, brute_force_connects, brute_force_segments,
                        connects, forward_closure,
                        from_event_list, sample_harris, SpaceTimeRegion)
from .renorm import BlockParams, LambdaWindow, block_field, required_window, verify_block_cell

SUITES = ("oracle", "coupling", "chi", "blocks")


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    checks: int = 0
    violations: int = 0
    examples: list = field(default_factory=list)  # first few failing cases

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def fail(self, info) -> None:
        self.violations += 1
        if len(self.examples) < 5:
            self.examples.append(info)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=str)


def small_construction(rng: np.random.Generator, max_sites: int = 6,
                       max_events: int = 12, seed: int = 0):
    """A hand-sized construction with ties on a coarse time lattice.

    Half of the event times are drawn from multiples of 1/4 so that
    same-time events and events at query times both occur.
    """
    n_sites = int(rng.integers(1, max_sites + 1))
    M = int(rng.integers(1, 3))
    kernel = Kernel.uniform(1.0, M)
    window = Window(0, n_sites - 1, 2.0)
    n_ev = int(rng.integers(0, max_events + 1))
    deaths, arrows = [], []
    for _ in range(n_ev):
        t = float(rng.integers(0, 9)) / 4 if rng.random() < 0.5 else float(rng.uniform(0, 2))
        x = int(rng.integers(0, n_sites))
        targets = [x + d for d in range(-M, M + 1) if d and 0 <= x + d < n_sites]
        if targets and rng.random() < 0.65:
            arrows.append((x, int(rng.choice(targets)), t))
        else:
            deaths.append((x, t))
    return from_event_list(kernel, window, deaths, arrows, seed)


def oracle_suite(cases: int = 10_000, seed: int = 0, n_times: int = 5,
                 literal_every: int = 20) -> SuiteResult:
    """connects vs exhaustive paths, every space-time pair on a time grid.

    Each start point runs one closure sweep over all later grid times (the
    sweep behind ``connects``) against one exhaustive path enumeration;
    every ``literal_every``-th case also calls the two pairwise functions.
    """
    res = SuiteResult("oracle")
    rng = np.random.default_rng([seed, 0x0C])
    for c in range(cases):
        h = small_construction(rng, seed=c)
        w = h.window
        grid = np.linspace(0.0, w.t_max, n_times)
        res.cases += 1
        for a, s in enumerate(grid):
            later = grid[a:]
            for x in range(w.x_min, w.x_max + 1):
                rm = forward_closure(h, SpaceTimeRegion.point(x, float(s)), later)
                segs = brute_force_segments(h, (x, float(s)), float(w.t_max))
                for q, t in enumerate(later):
                    for y in range(w.x_min, w.x_max + 1):
                        if t == s:
                            fast = x == y
                        else:
                            fast = rm.contains(q, y)
                        slow = x == y if t == s else any(
                            site == y and lo <= t < hi for site, lo, hi in segs)
                        res.checks += 1
                        if fast != slow:
                            res.fail({"case": c, "start": (x, float(s)),
                                      "end": (y, float(t)), "fast": fast})
                        if literal_every and c % literal_every == 0:
                            st, en = (x, float(s)), (y, float(t))
                            res.checks += 1
                            if connects(h, st, en) != brute_force_connects(h, st, en):
                                res.fail({"case": c, "start": st, "end": en,
                                          "kind": "pairwise"})
    return res


def _random_set(rng, lo: int, hi: int, p: float) -> frozenset:
    sites = np.arange(lo, hi + 1)
    return frozenset(sites[rng.random(sites.size) < p].tolist())


def coupling_suite(cases: int = 1000, seed: int = 0, lams=(0.8, 1.2, 2.0),
                   half_width: int = 50, t_max: float = 20.0, n_times: int = 8) -> SuiteResult:
    """Monotonicity and additivity on shared events, ``cases`` per rate."""
    res = SuiteResult("coupling")
    rng = np.random.default_rng([seed, 0xC0])
    window = Window(-half_width, half_width, t_max)
    grid = np.linspace(t_max / n_times, t_max, n_times)
    for lam in lams:
        kernel = Kernel.nearest_neighbour(lam)
        for c in range(cases):
            h = sample_harris(kernel, window, int(rng.integers(0, 2**63)))
            A = _random_set(rng, -20, 20, 0.3)
            B = A | _random_set(rng, -20, 20, 0.3)
            C = _random_set(rng, -20, 20, 0.3)
            ta, tb, tc, tac = couple(h, [Configuration.of(A), Configuration.of(B),
                                         Configuration.of(C), Configuration.of(A | C)], grid)
            res.cases += 1
            for i in range(grid.size):
                a, b, cc, ac = ta.state(i), tb.state(i), tc.state(i), tac.state(i)
                res.checks += 2
                if not a <= b:
                    res.fail({"lam": lam, "case": c, "t": float(grid[i]), "kind": "monotone"})
                if ac != a | cc:
                    res.fail({"lam": lam, "case": c, "t": float(grid[i]), "kind": "additive"})
    return res


def chi_suite(cases: int = 500, seed: int = 0, lams=(0.8, 1.2, 2.0, 4.0),
              half_width: int = 50, t_max: float = 20.0, n_times: int = 8) -> SuiteResult:
    """chi read off the coupled pair equals chi evolved directly."""
    res = SuiteResult("chi")
    rng = np.random.default_rng([seed, 0xC1])
    window = Window(-half_width, half_width, t_max)
    grid = np.linspace(0.0, t_max, n_times)
    for c in range(cases):
        lam = float(lams[c % len(lams)])
        h = sample_harris(Kernel.nearest_neighbour(lam), window, int(rng.integers(0, 2**63)))
        lower, upper = couple(h, [Configuration.half_line(0), Configuration.full()], grid)
        a = chi_from_coupling(lower, upper)
        b = chi_direct(h, standard_chi(h), grid)
        res.cases += 1
        res.checks += a.values.size
        bad = np.argwhere(a.values != b.values)
        for i, j in bad.tolist():
            res.fail({"case": c, "lam": lam, "t": float(grid[i]), "x": int(j + a.x_min)})
    return res


def blocks_suite(cases: int = 1000, seed: int = 0, kernel: Optional[Kernel] = None,
                 params: Optional[BlockParams] = None,
                 lw: Optional[LambdaWindow] = None, per_field: int = 20,
                 guard: Optional[int] = None, collect: Optional[list] = None) -> SuiteResult:
    """verify_block_cell against block_field on random cells.

    Sampled fields are appended to ``collect`` when it is given.
    """
    kernel = Kernel.nearest_neighbour(16.0) if kernel is None else kernel
    params = BlockParams(3, 10) if params is None else params
    lw = LambdaWindow(8, 3) if lw is None else lw
    res = SuiteResult("blocks")
    rng = np.random.default_rng([seed, 0xB1])
    cells = list(lw.cells())
    window = required_window(params, lw, kernel, guard)
    f = 0
    while res.cases < cases:
        h = sample_harris(kernel, window, int(seed) * 1_000_003 + f)
        f += 1
        bf = block_field(h, params, lw)
        if collect is not None:
            collect.append(bf)
        take = min(per_field, len(cells), cases - res.cases)
        for k in rng.choice(len(cells), size=take, replace=False):
            m, n = cells[int(k)]
            parents = None
            if n > 0:
                parents = tuple(bf.phi_at(m + d, n - 1) if abs(m + d) <= lw.m_max else -1
                                for d in (-1, 1))
            rep = verify_block_cell(h, params, (m, n), parents)
            res.cases += 1
            res.checks += 4
            j = m + lw.m_max
            got = (bool(bf.vacancy[n, j]), bool(bf.descent[n, j]),
                   bool(bf.intrusion[n, j]), bf.phi_at(m, n))
            want = (rep.vacancy, rep.descent, rep.intrusion, rep.phi)
            if got != want:
                res.fail({"field_seed": h.seed, "cell": (m, n), "sweep": got, "check": want})
    return res


def run_suite(name: str, cases: Optional[int] = None, seed: int = 0, **kw) -> SuiteResult:
    fn = {"oracle": oracle_suite, "coupling": coupling_suite, "chi": chi_suite,
          "blocks": blocks_suite}.get(name)
    if fn is None:
        raise ValueError(f"unknown suite {name!r}; valid: {', '.join(SUITES)}")
    if cases is not None:
        kw["cases"] = cases
    return fn(seed=seed, **kw)
