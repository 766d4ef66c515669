import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpinterface.checks import small_construction
from cpinterface.graphical import (ARROW, DEATH, Kernel, OracleCapExceeded, SpaceTimeRegion,
                                   Window, WindowError, brute_force_connects, closure_many,
                                   connects, dumps_events, forward_closure, from_event_list,
                                   guard_width, loads_events, sample_harris, shift_events)


# --- kernel and window ----------------------------------------------------

def test_kernel_constructors():
    k = Kernel.nearest_neighbour(3.0)
    assert k.range == 1 and k.rate(1) == 1.5 and k.rate(2) == 0.0
    u = Kernel.uniform(2.0, 3)
    assert u.range == 3 and math.isclose(sum(u.weights.values()), 1.0)
    w = Kernel.from_weights(1.0, [3.0, 1.0])
    assert w.weights == {-2: 0.125, -1: 0.375, 1: 0.375, 2: 0.125}


@pytest.mark.parametrize("lam,weights", [
    (-1.0, {1: 0.5, -1: 0.5}),
    (1.0, {1: 1.0}),
    (1.0, {1: 0.3, -1: 0.3}),
    (1.0, {0: 0.5, 1: 0.25, -1: 0.25}),
    (math.inf, {1: 0.5, -1: 0.5}),
    (1.0, {}),
])
def test_kernel_rejects(lam, weights):
    with pytest.raises(ValueError):
        Kernel(lam, weights)


def test_zero_rate_kernel_allowed():
    h = sample_harris(Kernel.nearest_neighbour(0.0), Window(-5, 5, 3.0), 1)
    assert h.n_arrows == 0 and h.n_deaths > 0


def test_window():
    w = Window(4, 4, 1.0)
    assert w.n_sites == 1 and w.contains(4, 0.0) and not w.contains(4, 1.5)
    with pytest.raises(ValueError):
        Window(3, 2, 1.0)
    with pytest.raises(ValueError):
        Window(0, 2, 0.0)


def test_guard_width():
    assert guard_width(Kernel.uniform(2.0, 3), 10.0) == 60 + 12
    assert guard_width(Kernel.nearest_neighbour(0.5), 3.0) == 2 + 4


# --- sampling -------------------------------------------------------------

def test_sampling_is_deterministic_and_ordered():
    k = Kernel.uniform(2.0, 2)
    w = Window(-10, 10, 5.0)
    a, b = sample_harris(k, w, 99), sample_harris(k, w, 99)
    assert a == b
    assert a != sample_harris(k, w, 100)
    assert np.all(np.diff(a.time) >= 0)
    same = np.flatnonzero(np.diff(a.time) == 0)
    for i in same:
        assert (a.kind[i], a.src[i]) <= (a.kind[i + 1], a.src[i + 1])
    arrows = a.kind == ARROW
    assert np.all(np.abs(a.dst[arrows] - a.src[arrows]) <= 2)
    assert np.all(a.dst[~arrows] == a.src[~arrows])


def test_sample_frozen_summary():
    h = sample_harris(Kernel.nearest_neighbour(2.0), Window(-3, 3, 2.0), 11)
    assert (len(h), h.n_deaths, h.n_arrows) == (47, 15, 32)
    assert math.isclose(float(h.time.sum()), 43.614415587705686, rel_tol=1e-12)


@given(st.integers(0, 2**32), st.integers(-8, 0), st.integers(0, 8), st.floats(0.5, 4.0))
def test_subwindow_consistency(seed, lo, hi, t_max):
    """Events of a sub-window do not depend on the enclosing window."""
    k = Kernel.uniform(1.5, 2)
    big = sample_harris(k, Window(-12, 12, 5.0), seed)
    sub = Window(lo, hi, t_max)
    assert big.restrict(sub) == sample_harris(k, sub, seed)


def test_rates_match_expectation():
    k = Kernel.uniform(3.0, 2)
    h = sample_harris(k, Window(-200, 200, 20.0), 5)
    area = 401 * 20.0
    assert abs(h.n_deaths / area - 1.0) < 0.03
    inner = (h.src >= -198) & (h.src <= 198) & (h.kind == ARROW)
    assert abs(inner.sum() / (397 * 20.0) - 3.0) < 0.06


# --- tie semantics ----------------------------------------------------------

K2 = Kernel.uniform(1.0, 2)
W4 = Window(0, 3, 3.0)


def build(deaths=(), arrows=()):
    return from_event_list(K2, W4, deaths, arrows)


def test_death_before_arrow_at_same_time():
    assert not connects(build([(0, 1.0)], [(0, 1, 1.0)]), (0, 0.0), (1, 2.0))
    assert connects(build([(1, 1.0)], [(0, 1, 1.0)]), (0, 0.0), (1, 2.0))


def test_point_source_killed_by_simultaneous_death():
    assert not connects(build([(0, 1.0)]), (0, 1.0), (0, 2.0))


def test_band_source_survives_deaths_inside_band():
    h = build([(0, 1.0)])
    rm = forward_closure(h, SpaceTimeRegion.band([0], 0.0, 1.5), [1.2, 2.0])
    assert rm.at(0) == {0} and rm.at(1) == {0}
    # the band is closed: a death at its end time still falls inside it
    rm = forward_closure(h, SpaceTimeRegion.band([0], 0.0, 1.0), [2.0])
    assert rm.at(0) == {0}
    rm = forward_closure(h, SpaceTimeRegion.band([0], 0.0, 0.9), [2.0])
    assert rm.at(0) == frozenset()


def test_same_time_arrows_follow_source_order():
    assert connects(build(arrows=[(0, 1, 1.0), (1, 2, 1.0)]), (0, 0.0), (2, 2.0))
    assert not connects(build(arrows=[(2, 1, 1.0), (1, 0, 1.0)]), (2, 0.0), (0, 2.0))


def test_events_at_query_time_count():
    assert connects(build(arrows=[(0, 1, 1.0)]), (0, 0.0), (1, 1.0))
    assert not connects(build([(1, 1.0)]), (1, 0.0), (1, 1.0))


def test_connects_errors():
    h = build()
    with pytest.raises(ValueError):
        connects(h, (0, 2.0), (0, 1.0))
    with pytest.raises(WindowError):
        connects(h, (9, 0.0), (0, 1.0))
    assert connects(h, (2, 1.0), (2, 1.0))
    assert not connects(h, (2, 1.0), (1, 1.0))


def test_oracle_cap():
    h = sample_harris(Kernel.nearest_neighbour(2.0), Window(0, 5, 10.0), 1)
    with pytest.raises(OracleCapExceeded):
        brute_force_connects(h, (0, 0.0), (1, 5.0), cap=10)


# --- closure against the exhaustive oracle ------------------------------------

@given(st.integers(0, 2**32))
def test_connects_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    h = small_construction(rng)
    w = h.window
    times = [0.0, 0.5, 1.0, 1.5, 2.0]
    for s in times:
        for t in times:
            if t < s:
                continue
            for x in range(w.x_min, w.x_max + 1):
                for y in range(w.x_min, w.x_max + 1):
                    assert connects(h, (x, s), (y, t)) == brute_force_connects(h, (x, s), (y, t))


@given(st.integers(0, 2**32))
def test_restricted_paths_equal_brute_force(seed):
    rng = np.random.default_rng(seed)
    h = small_construction(rng)
    w = h.window
    inside = {x for x in range(w.x_min, w.x_max + 1) if rng.random() < 0.7}
    for x in range(w.x_min, w.x_max + 1):
        for y in range(w.x_min, w.x_max + 1):
            assert (connects(h, (x, 0.0), (y, 2.0), inside)
                    == brute_force_connects(h, (x, 0.0), (y, 2.0), inside))


@given(st.integers(0, 2**32))
def test_closure_is_union_of_point_closures(seed):
    h = sample_harris(Kernel.uniform(1.5, 2), Window(-15, 15, 6.0), seed)
    rng = np.random.default_rng(seed)
    sites = sorted(set(rng.integers(-15, 16, 6).tolist()))
    q = [1.0, 3.0, 6.0]
    joint = forward_closure(h, SpaceTimeRegion.at_time(sites), q).sets()
    union = [frozenset()] * 3
    for s in sites:
        single = forward_closure(h, SpaceTimeRegion.point(s), q).sets()
        union = [a | b for a, b in zip(union, single)]
    assert joint == union


def test_touched_covers_only_queried_span():
    h = from_event_list(K2, W4, arrows=[(2, 3, 2.5)])
    _, touched = closure_many(h, [SpaceTimeRegion.point(2)], [2.0])
    assert not touched[0, 3]
    _, touched = closure_many(h, [SpaceTimeRegion.point(2)], [3.0])
    assert touched[0, 3]


# --- shifts and serialisation ------------------------------------------------

@given(st.integers(0, 2**32), st.integers(-5, 5), st.floats(0.0, 3.0))
def test_shift_matches_original_coordinates(seed, x, t):
    h = sample_harris(Kernel.nearest_neighbour(3.0), Window(-20, 20, 6.0), seed)
    g = shift_events(h, x, t)
    assert g.window == Window(-20 - x, 20 - x, 6.0 - t)
    for z in (-3, 0, 4):
        for y in (-2, 0, 5):
            assert connects(g, (z, 0.0), (y, 2.0)) == connects(h, (z + x, t), (y + x, t + 2.0))


def test_shifts_compose():
    h = sample_harris(Kernel.nearest_neighbour(3.0), Window(-20, 20, 6.0), 3)
    assert shift_events(shift_events(h, 2, 1.0), -5, 0.5) == shift_events(h, -3, 1.5)
    with pytest.raises(WindowError):
        shift_events(h, 0, 6.0)


@given(st.integers(0, 2**32), st.integers(-3, 3), st.floats(0.0, 2.0))
def test_text_round_trip(seed, x, t):
    h = sample_harris(Kernel.from_weights(2.5, [2.0, 1.0]), Window(-6, 6, 3.0), seed)
    if t > 0 or x:
        h = shift_events(h, x, t)
    text = dumps_events(h)
    assert loads_events(text) == h
    assert dumps_events(loads_events(text)) == text


def test_text_format_lines():
    h = from_event_list(K2, W4, [(1, 0.25)], [(0, 2, 0.5)], seed=4)
    lines = dumps_events(h).splitlines()
    assert lines[1:3] == ["seed 4", "window 0 3 3.0"]
    assert lines[-2:] == ["D 1 0.25", "A 0 2 0.5"]
    with pytest.raises(ValueError):
        loads_events("D 1 0.5\n")


def test_event_list_validation():
    with pytest.raises(WindowError):
        from_event_list(K2, W4, [(9, 0.5)])
    h = from_event_list(K2, W4, [(1, 0.5)], [(0, 1, 0.25)])
    assert h.kind.tolist() == [ARROW, DEATH]
    assert h.without_event(0).kind.tolist() == [DEATH]
