import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpinterface import _sweep
from cpinterface.graphical import (Kernel, Window, WindowError, from_event_list, sample_harris,
                                   shift_events)
from cpinterface.opercolation import parity_mask
from cpinterface.renorm import (BlockField, BlockParams, LambdaWindow, _local_conditions,
                                _stream_tables, barrier_region, block_field, boxes,
                                check_barrier_properties, cone_contains, edge_at,
                                expand_prefilter, expanding_samples, expanding_targets,
                                expanding_window, good_point_scan, horizon_for_time, intervals,
                                is_beta_expanding, is_good_point, local_expand_window,
                                neighbour_span, owner, required_window, sample_block_field,
                                verify_block_cell)
from cpinterface.contact import EdgeSeries

NN = Kernel.nearest_neighbour
# seeds whose origin is beta-expanding up to level 2 at lambda=64, K=2, N=3
EXPANDING_SEEDS = (33759, 580599, 1017239)


# --- geometry ---------------------------------------------------------------

def test_params_validation():
    assert BlockParams(2, 10).vacant_len == 4
    assert BlockParams(2, 9).vacant_len == 3
    with pytest.raises(ValueError):
        BlockParams(0, 5)
    with pytest.raises(ValueError):
        BlockParams(2, 5, beta=1.0)
    with pytest.raises(ValueError):
        BlockParams(2, 4).check_range(2)
    with pytest.raises(ValueError):
        LambdaWindow(-1, 2)
    assert LambdaWindow(3, 1).row(0) == [-2, 0, 2]
    assert LambdaWindow(3, 1).row(1) == [-3, -1, 1, 3]


@given(st.integers(3, 40), st.integers(-30, 30))
def test_intervals_tile_by_parity(N, m):
    p = BlockParams(2, N)
    lo, hi = intervals(p, m)
    assert hi - lo + 1 == ((m + 1) * N) // 2 - ((m - 1) * N) // 2
    assert intervals(p, m + 2)[0] == hi + 1
    span = neighbour_span(p, m)
    assert span == (intervals(p, m - 1)[0], intervals(p, m + 1)[1])
    assert intervals(p, m - 1)[1] + 1 >= intervals(p, m + 1)[0]


@given(st.integers(3, 40), st.integers(-500, 500), st.integers(0, 1))
def test_owner_is_the_covering_interval(N, x, parity):
    p = BlockParams(2, N)
    m = int(owner(p, x, parity))
    assert m % 2 == parity
    lo, hi = intervals(p, m)
    assert lo <= x <= hi


def test_boxes():
    p = BlockParams(3, 10)
    assert boxes(p, 1, 0, 0) == (-1, 1, 0.0, 30.0)
    assert boxes(p, 2, 1, 2) == (3, 7, 60.0, 90.0)
    assert boxes(BlockParams(2, 5), 1, 1, 0) == (2, 3, 0.0, 10.0)


def test_required_window_and_cover():
    p = BlockParams(2, 5)
    lw = LambdaWindow(2, 1)
    w = required_window(p, lw, NN(4.0), guard=7)
    assert w.t_max == 20.0 and w.x_min == neighbour_span(p, -2)[0] - 7
    h = sample_harris(NN(4.0), Window(-3, 3, 20.0), 0)
    with pytest.raises(WindowError):
        block_field(h, p, lw)


# --- the field against the independent recomputation --------------------------

@pytest.mark.parametrize("lam,K,N,seed", [(8.0, 2, 3, 1), (16.0, 2, 5, 2), (4.0, 3, 4, 3),
                                          (16.0, 2, 5, 7)])
def test_block_field_equals_cellwise_check(lam, K, N, seed):
    p = BlockParams(K, N)
    lw = LambdaWindow(4, 2)
    h = sample_harris(NN(lam), required_window(p, lw, NN(lam), guard=25), seed)
    bf = block_field(h, p, lw)
    for m, n in lw.cells():
        parents = None
        if n:
            parents = tuple(bf.phi_at(m + d, n - 1) if abs(m + d) <= lw.m_max else -1
                            for d in (-1, 1))
        rep = verify_block_cell(h, p, (m, n), parents)
        j = m + lw.m_max
        assert (rep.vacancy, rep.descent, rep.intrusion, rep.phi) == (
            bool(bf.vacancy[n, j]), bool(bf.descent[n, j]), bool(bf.intrusion[n, j]),
            bf.phi_at(m, n))


def test_range_two_kernel_field_equals_cellwise_check():
    k = Kernel.uniform(12.0, 2)
    p = BlockParams(3, 7)
    lw = LambdaWindow(3, 1)
    h = sample_harris(k, required_window(p, lw, k, guard=30), 4)
    bf = block_field(h, p, lw)
    for m, n in lw.cells():
        parents = (bf.phi_at(m - 1, 0) if m > -3 else -1,
                   bf.phi_at(m + 1, 0) if m < 3 else -1) if n else None
        assert verify_block_cell(h, p, (m, n), parents).phi == bf.phi_at(m, n)


def test_field_layout_and_recursion():
    p = BlockParams(2, 5)
    lw = LambdaWindow(4, 3)
    bf = sample_block_field(NN(16.0), p, lw, 3, guard=40)
    off = ~parity_mask(4, 3)
    assert np.all(bf.phi[off] == -1)
    assert set(np.unique(bf.phi[~off]).tolist()) <= {0, 1, 2}
    for m, n in lw.cells():
        if n and bf.phi_at(m, n) == 2:
            parents = [bf.phi_at(m + d, n - 1) for d in (-1, 1) if abs(m + d) <= 4]
            assert 1 not in parents
    assert np.array_equal(bf.psi, (bf.phi > 0).astype(np.int8))
    lines = bf.to_csv().splitlines()
    assert lines[0] == "# schema: block-field v1" and lines[1] == "m,n,phi,psi"
    assert len(lines) == 2 + sum(1 for _ in lw.cells())


def test_rows_do_not_depend_on_later_slabs():
    p = BlockParams(2, 3)
    lw = LambdaWindow(3, 2)
    k = NN(8.0)
    h = sample_harris(k, required_window(p, lw, k, guard=20), 5)
    late = np.flatnonzero(h.time > p.slab * 2)
    rng = np.random.default_rng(0)
    a = block_field(h, p, lw)
    for idx in rng.choice(late, 20, replace=False):
        b = block_field(h.without_event(int(idx)), p, lw)
        assert np.array_equal(a.phi[:2], b.phi[:2])


def test_verify_needs_parents_above_row_zero():
    p = BlockParams(2, 3)
    lw = LambdaWindow(2, 1)
    h = sample_harris(NN(8.0), required_window(p, lw, NN(8.0), guard=10), 1)
    with pytest.raises(ValueError):
        verify_block_cell(h, p, (1, 1))
    with pytest.raises(ValueError):
        verify_block_cell(h, p, (1, 0))
    assert verify_block_cell(h, p, (1, 1), (0, 0)).phi == 2


# --- beta-expanding -----------------------------------------------------------

def _sorted(kind, src, dst, time):
    o = np.lexsort((dst, src, kind, time))
    return kind[o], src[o], dst[o], time[o]


@given(st.integers(0, 2**40), st.sampled_from([1, 2]))
def test_local_events_equal_sampler(seed, M):
    k = Kernel.uniform(9.0, M)
    lo, hi = -7, 9
    got = _sweep.local_events(np.uint64(seed), lo, hi, 1.0, *_stream_tables(k))
    h = sample_harris(k, Window(lo, hi, 1.0), seed)
    want = (h.kind, h.src, h.dst, h.time)
    for a, b in zip(_sorted(*got), _sorted(*want)):
        assert np.array_equal(a, b)


def test_prefilter_screen_is_exact():
    k = NN(64.0)
    p = BlockParams(2, 3)
    seeds = np.array(list(EXPANDING_SEEDS) + list(range(3000)), dtype=np.uint64)
    fast = expand_prefilter(k, p, seeds)
    slow = expand_prefilter(k, p, seeds, screen=False)
    assert np.array_equal(fast, slow)
    assert fast[:3].all()
    loc = local_expand_window(p, k)
    for s in seeds[:40].tolist():
        h = sample_harris(k, loc, s)
        assert all(_local_conditions(h, p)) == bool(fast[seeds.tolist().index(s)])


def test_prefilter_ignores_window_size():
    k = NN(64.0)
    p = BlockParams(2, 3)
    for s in EXPANDING_SEEDS:
        h = sample_harris(k, expanding_window(p, k, 2), s)
        assert all(_local_conditions(h, p))


def test_expanding_samples_and_reports():
    k = NN(64.0)
    p = BlockParams(2, 3)
    got = list(expanding_samples(k, p, 2, 1, seed_start=EXPANDING_SEEDS[0], batch=64))
    assert got[0].seed == EXPANDING_SEEDS[0]
    rep = got[0].report
    assert rep.overall and rep.cond_percolation and rep.horizon_i == 2
    assert '"overall": true' in rep.to_json()
    h = sample_harris(k, expanding_window(p, k, 2), 12)
    lazy = is_beta_expanding(h, p, 2)
    full = is_beta_expanding(h, p, 2, lazy=False)
    assert not lazy.overall and not full.overall
    assert lazy.field is None and full.field is not None


def test_horizon_for_time():
    p = BlockParams(2, 3)
    assert [horizon_for_time(p, T) for T in (0.5, 1.0, 1.5, 7.0, 7.5, 13.0)] == [0, 0, 1, 1, 2, 2]


# --- cone, barriers, good points ---------------------------------------------

def test_cone():
    assert cone_contains(0.5, (1, 2.0))
    assert not cone_contains(0.5, (2, 2.0))
    assert not cone_contains(0.5, (0, -1.0))
    assert cone_contains(0.5, (3, 3.0), apex=(2, 1.0))


def _open_field(p, lw, M=1):
    phi = np.where(parity_mask(lw.m_max, lw.n_max), 1, -1).astype(np.int8)
    z = np.zeros(phi.shape, dtype=bool)
    return BlockField(phi, p, lw, M, 0, Window(-100, 100, 100.0), z, z, z)


def test_barrier_region_on_open_field():
    p = BlockParams(2, 5)
    lw = LambdaWindow(6, 3)
    bar = barrier_region(_open_field(p, lw))
    assert bar is not None
    assert len(bar.left) == len(bar.right) == 4
    assert 0.0 < bar.beta_bar < 1.0
    # slope bound: each side path stays outside the cone one time unit later
    for n, (ml, mr) in enumerate(zip(bar.left, bar.right)):
        t_top = 1.0 + p.slab * (n + 1)
        assert bar.beta_bar * t_top < min(mr * p.N / 2 - 1, -(ml * p.N / 2 + 1))
    closed = _open_field(p, lw)
    closed.phi[:, :] = np.where(closed.phi >= 0, 0, -1)
    assert barrier_region(closed) is None


def test_barrier_properties_report_sensitivity():
    k = NN(64.0)
    p = BlockParams(2, 3)
    h = sample_harris(k, expanding_window(p, k, 2), EXPANDING_SEEDS[0])
    ok = check_barrier_properties(h, p, 0.04, 13.0, 500, seed=1)
    assert ok.total_violations == 0 and ok.trials == 500
    bad = check_barrier_properties(h, p, 100.0, 13.0, 500, seed=1)
    assert bad.violations_ii > 0
    with pytest.raises(WindowError):
        check_barrier_properties(h, p, 0.04, 1e3, 10)


def test_good_point_needs_no_early_death():
    k = NN(64.0)
    p = BlockParams(2, 3)
    h = sample_harris(k, Window(-400, 400, 20.0), 5)
    d = h.deaths_at(3)
    t = float(d[d > 1.0][0]) - 0.5
    assert not is_good_point(h, (3, t), p, 40.0, 7.0)


def test_good_point_scan_matches_pointwise_check():
    k = NN(64.0)
    p = BlockParams(2, 3)
    s = EXPANDING_SEEDS[1]
    h = sample_harris(k, expanding_window(p, k, 2), s)
    xs = np.array([0, 0, 1, -2])
    ts = np.array([0.0, 0.3, 0.0, 1.5])
    scan = good_point_scan(h, p, 1e3, 7.0, ts, xs)
    assert scan.local[0]
    for j in range(4):
        g = shift_events(h, int(xs[j]), float(ts[j]))
        assert scan.local[j] == all(_local_conditions(g, p))
        assert scan.good[j] == is_good_point(h, (int(xs[j]), float(ts[j])), p, 1e3, 7.0)
    assert scan.first_good(0.0, 0.0) == bool(scan.good[0])


def test_edge_lookup():
    e = EdgeSeries(np.array([0.0, 1.0, 2.5]), [0, 3, 1])
    assert edge_at(e, [0.0, 0.99, 1.0, 3.0]).tolist() == [0, 0, 3, 1]
    with pytest.raises(ValueError):
        edge_at(EdgeSeries(np.array([0.0, 1.0]), [0, None]), [1.5])
