"""Compiled time-ordered sweeps over a Harris event list.

All kernels take the flat, tie-ordered event arrays of a HarrisEvents
(``kind``: 0 death / 1 arrow, ``src``, ``dst`` as window indices,
``time``) and process them one by one.  A query at time q reports the
state after every event with time <= q.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DEATH = 0
ARROW = 1


@njit(cache=True)
def closure_sweep(kind, src, dst, time, n_sites, allowed,
                  act_state, act_site, act_t0, act_pin,
                  end_state, end_site, end_t1,
                  n_states, qtimes):
    """Multi-source forward closure.

    Source blocks are given twice: sorted by start time (``act_*``) and,
    for the pinned non-degenerate ones, sorted by end time (``end_*``).
    A pinned site survives deaths while its block is open.
    """
    nq = qtimes.shape[0]
    out = np.zeros((nq, n_states, n_sites), dtype=np.bool_)
    reached = np.zeros((n_states, n_sites), dtype=np.bool_)
    touched = np.zeros((n_states, n_sites), dtype=np.bool_)
    pins = np.zeros((n_states, n_sites), dtype=np.int32)
    n_act = act_t0.shape[0]
    n_end = end_t1.shape[0]
    ai = 0
    di = 0
    qi = 0
    n_ev = time.shape[0]
    for e in range(n_ev):
        r = time[e]
        while qi < nq and qtimes[qi] < r:
            while ai < n_act and act_t0[ai] <= qtimes[qi]:
                s = act_state[ai]
                x = act_site[ai]
                if allowed[x]:
                    reached[s, x] = True
                    touched[s, x] = True
                if act_pin[ai]:
                    pins[s, x] += 1
                ai += 1
            out[qi] = reached
            qi += 1
        while ai < n_act and act_t0[ai] <= r:
            s = act_state[ai]
            x = act_site[ai]
            if allowed[x]:
                reached[s, x] = True
                touched[s, x] = True
            if act_pin[ai]:
                pins[s, x] += 1
            ai += 1
        while di < n_end and end_t1[di] < r:
            pins[end_state[di], end_site[di]] -= 1
            di += 1
        a = src[e]
        if kind[e] == DEATH:
            for s in range(n_states):
                if pins[s, a] == 0:
                    reached[s, a] = False
        else:
            b = dst[e]
            if allowed[b]:
                for s in range(n_states):
                    if reached[s, a]:
                        reached[s, b] = True
                        touched[s, b] = True
    while qi < nq:
        while ai < n_act and act_t0[ai] <= qtimes[qi]:
            s = act_state[ai]
            x = act_site[ai]
            if allowed[x]:
                reached[s, x] = True
                touched[s, x] = True
            ai += 1
        out[qi] = reached
        qi += 1
    return out, touched


@njit(cache=True)
def chi_sweep(kind, src, dst, time, chi0, qtimes):
    """Three-state competition driven by the same events.

    death: chi <- 0; arrow x->y: a 1 overwrites 0 or 2, a 2 overwrites 0.
    """
    nq = qtimes.shape[0]
    n = chi0.shape[0]
    out = np.zeros((nq, n), dtype=np.int8)
    chi = chi0.copy()
    qi = 0
    for e in range(time.shape[0]):
        r = time[e]
        while qi < nq and qtimes[qi] < r:
            out[qi] = chi
            qi += 1
        a = src[e]
        if kind[e] == DEATH:
            chi[a] = 0
        else:
            b = dst[e]
            ca = chi[a]
            if ca == 1:
                chi[b] = 1
            elif ca == 2 and chi[b] == 0:
                chi[b] = 2
    while qi < nq:
        out[qi] = chi
        qi += 1
    return out


@njit(cache=True)
def influence_fronts(kind, src, dst, time, n_sites, band, qtimes):
    """Death-ignoring reach of the two boundary bands.

    Returns, per query, the largest index the left band can influence and
    the smallest index the right band can influence.  Sites strictly
    between the two fronts are unaffected by truncation of the window.
    """
    nq = qtimes.shape[0]
    fl_out = np.empty(nq, dtype=np.int64)
    fr_out = np.empty(nq, dtype=np.int64)
    fl = band - 1
    fr = n_sites - band
    qi = 0
    for e in range(time.shape[0]):
        r = time[e]
        while qi < nq and qtimes[qi] < r:
            fl_out[qi] = fl
            fr_out[qi] = fr
            qi += 1
        if kind[e] == ARROW:
            a = src[e]
            b = dst[e]
            if a <= fl and b > fl:
                fl = b
            if a >= fr and b < fr:
                fr = b
    while qi < nq:
        fl_out[qi] = fl
        fr_out[qi] = fr
        qi += 1
    return fl_out, fr_out


@njit(cache=True)
def interface_sweep(kind, src, dst, time, n_sites, zero, band, qtimes,
                    gammas, record_edge):
    """Coupled sweep of the half-line and all-ones processes.

    Tracks at event resolution: the right edge r of the half-line process,
    its running maximum, the first time r_t > gamma * t for each gamma,
    and the boundary influence fronts.  At query times it also scans for
    the first disagreement l.

    Indices are window indices; ``zero`` is the index of site 0.
    """
    nq = qtimes.shape[0]
    ng = gammas.shape[0]
    lower = np.zeros(n_sites, dtype=np.bool_)
    upper = np.ones(n_sites, dtype=np.bool_)
    for i in range(zero + 1):
        lower[i] = True
    r = zero
    q = zero
    fl = band - 1
    fr = n_sites - band
    sticky = False
    first_viol = np.full(ng, np.inf)
    r_out = np.empty(nq, dtype=np.int64)
    l_out = np.empty(nq, dtype=np.int64)
    q_out = np.empty(nq, dtype=np.int64)
    cont_out = np.zeros(nq, dtype=np.bool_)
    fl_out = np.empty(nq, dtype=np.int64)
    fr_out = np.empty(nq, dtype=np.int64)
    n_ev = time.shape[0]
    if record_edge:
        et = np.empty(n_ev + 1, dtype=np.float64)
        ev = np.empty(n_ev + 1, dtype=np.int64)
    else:
        et = np.empty(1, dtype=np.float64)
        ev = np.empty(1, dtype=np.int64)
    et[0] = 0.0
    ev[0] = r
    n_rec = 1
    qi = 0
    for e in range(n_ev + 1):
        if e < n_ev:
            t = time[e]
        else:
            t = np.inf
        while qi < nq and qtimes[qi] < t:
            l = 0
            while l < n_sites and lower[l] == upper[l]:
                l += 1
            r_out[qi] = r
            l_out[qi] = l
            q_out[qi] = q
            fl_out[qi] = fl
            fr_out[qi] = fr
            c = sticky
            if l == 0 or l <= fl or l >= fr:
                c = True
            cont_out[qi] = c
            qi += 1
        if e == n_ev:
            break
        a = src[e]
        if kind[e] == DEATH:
            lower[a] = False
            upper[a] = False
            if a == r:
                while r >= 0 and not lower[r]:
                    r -= 1
                if r <= fl:
                    sticky = True
                if record_edge:
                    et[n_rec] = t
                    ev[n_rec] = r
                    n_rec += 1
        else:
            b = dst[e]
            if upper[a]:
                upper[b] = True
            if lower[a]:
                lower[b] = True
                if b > r:
                    r = b
                    if r > q:
                        q = r
                    if r >= fr or r == n_sites - 1:
                        sticky = True
                    for g in range(ng):
                        if first_viol[g] == np.inf and (r - zero) > gammas[g] * t:
                            first_viol[g] = t
                    if record_edge:
                        et[n_rec] = t
                        ev[n_rec] = r
                        n_rec += 1
            if a <= fl and b > fl:
                fl = b
                if r <= fl:
                    sticky = True
            if a >= fr and b < fr:
                fr = b
                if r >= fr:
                    sticky = True
    return (r_out, l_out, q_out, cont_out, fl_out, fr_out, first_viol,
            et[:n_rec], ev[:n_rec], sticky)


@njit(cache=True)
def survival(kind, src, dst, time, alive):
    n = 0
    for i in range(alive.shape[0]):
        if alive[i]:
            n += 1
    if n == 0:
        return 0.0
    for e in range(time.shape[0]):
        a = src[e]
        if kind[e] == DEATH:
            if alive[a]:
                alive[a] = False
                n -= 1
                if n == 0:
                    return time[e]
        else:
            b = dst[e]
            if alive[a] and not alive[b]:
                alive[b] = True
                n += 1
    return np.inf


@njit(cache=True)
def block_rows(kind, src, dst, time, n_sites, slab, n_rows,
               owner, cell_bit, in_j, a_lo, a_hi, vac_len):
    """Row-by-row block conditions for the renormalized field.

    ``owner[p, x]`` is the cell m with m = p (mod 2) whose interval holds
    site x; ``cell_bit[p, x]`` is the bit index of that cell among the
    tracked cells of a row with parity p (-1 when untracked).  ``in_j[p,
    x]`` marks sites of the thin boxes.  ``a_lo/a_hi[n, c]`` bound the
    union of the two neighbouring intervals of cell c on row n.

    Descendants of each cell's source are carried as a bitmask per site;
    the outside-source reach of every cell is one boolean per site since
    the intervals of a row tile the line.
    """
    n_cells = a_lo.shape[1]
    vacancy = np.zeros((n_rows, n_cells), dtype=np.bool_)
    descent = np.zeros((n_rows, n_cells), dtype=np.bool_)
    intrusion = np.zeros((n_rows, n_cells), dtype=np.bool_)
    upper = np.ones(n_sites, dtype=np.bool_)
    desc = np.zeros(n_sites, dtype=np.uint64)
    outside = np.zeros(n_sites, dtype=np.bool_)
    one = np.uint64(1)
    e = 0
    n_ev = time.shape[0]
    for n in range(n_rows):
        p = n % 2
        t0 = slab * n
        t1 = slab * (n + 1)
        while e < n_ev and time[e] <= t0:
            a = src[e]
            if kind[e] == DEATH:
                upper[a] = False
            elif upper[a]:
                upper[dst[e]] = True
            e += 1
        for x in range(n_sites):
            outside[x] = False
            c = cell_bit[p, x]
            if upper[x] and c >= 0:
                desc[x] = one << np.uint64(c)
            else:
                desc[x] = 0
        bad = np.zeros(n_cells, dtype=np.bool_)
        while e < n_ev and time[e] <= t1:
            a = src[e]
            if kind[e] == DEATH:
                upper[a] = False
                desc[a] = 0
                outside[a] = False
            else:
                b = dst[e]
                if upper[a]:
                    upper[b] = True
                desc[b] |= desc[a]
                if outside[a] or owner[p, a] != owner[p, b]:
                    outside[b] = True
                    c = cell_bit[p, b]
                    if in_j[p, b] and c >= 0:
                        if (desc[b] >> np.uint64(c)) & one == 0:
                            bad[c] = True
            e += 1
        for c in range(n_cells):
            lo = a_lo[n, c]
            hi = a_hi[n, c]
            if lo > hi:
                continue
            run = 0
            vac = False
            ok = True
            for x in range(lo, hi + 1):
                if upper[x]:
                    run = 0
                    if (desc[x] >> np.uint64(c)) & one == 0:
                        ok = False
                else:
                    run += 1
                    if run >= vac_len:
                        vac = True
            vacancy[n, c] = not vac
            descent[n, c] = ok
            intrusion[n, c] = not bad[c]
    return vacancy, descent, intrusion


@njit(cache=True)
def transmission_check(kind, src, dst, time, n_sites, origin, targets, t_end):
    """For each target y: whether every arrival at y by time t_end of a
    path started off y at time 0 is matched by a path from the origin.

    Returns a boolean per target.
    """
    nt = targets.shape[0]
    ok = np.ones(nt, dtype=np.bool_)
    foreign = np.empty(n_sites, dtype=np.bool_)
    mine = np.empty(n_sites, dtype=np.bool_)
    for k in range(nt):
        y = targets[k]
        for x in range(n_sites):
            foreign[x] = x != y
            mine[x] = False
        mine[origin] = True
        for e in range(time.shape[0]):
            if time[e] > t_end:
                break
            a = src[e]
            if kind[e] == DEATH:
                foreign[a] = False
                mine[a] = False
            else:
                b = dst[e]
                if foreign[a]:
                    foreign[b] = True
                if mine[a]:
                    mine[b] = True
                if b == y and foreign[b] and not mine[b]:
                    ok[k] = False
                    break
    return ok


# --- compiled counter-based streams (bit-identical to rng.uniforms) ------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _prefix(a, b, c, d, e):
    """Hash state after the first five key words of a stream."""
    h = _GOLDEN
    h = _mix(h ^ (np.uint64(a) + _GOLDEN))
    h = _mix(h ^ (np.uint64(b) + _GOLDEN))
    h = _mix(h ^ (np.uint64(c) + _GOLDEN))
    h = _mix(h ^ (np.uint64(d) + _GOLDEN))
    return _mix(h ^ (np.uint64(e) + _GOLDEN))


@njit(cache=True)
def _finish(h, f):
    h = _mix(h ^ (np.uint64(f) + _GOLDEN))
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _uniform6(a, b, c, d, e, f):
    return _finish(_prefix(a, b, c, d, e), f)


@njit(cache=True)
def uniform6(a, b, c, d, e, f):
    return _uniform6(a, b, c, d, e, f)


@njit(cache=True)
def _poisson(u, cdf, n):
    return np.searchsorted(cdf[:n], u, side="right")


@njit(cache=True)
def local_events(seed, lo, hi, t_end, disp, rate_idx, cdfs, cdf_len,
                 tag_death, tag_arrow):
    """All events of the window [lo, hi] x [0, t_end] for one seed, in the
    same order and with the same values as the vectorized sampler.

    Death streams use rate index 0 in ``cdfs``; arrow displacement j uses
    ``rate_idx[j]``.  Returns absolute (kind, src, dst, time).
    """
    n_cells = int(np.ceil(t_end))
    nd = disp.shape[0]
    cap = 0
    n_sites = hi - lo + 1
    counts = np.zeros((n_sites, nd + 1, n_cells), dtype=np.int64)
    for i in range(n_sites):
        x = lo + i
        for j in range(nd + 1):
            if j == 0:
                tag, d, ri = tag_death, 0, 0
            else:
                d = disp[j - 1]
                if x + d < lo or x + d > hi:
                    continue
                tag, ri = tag_arrow, rate_idx[j - 1]
            for c in range(n_cells):
                u = _finish(_prefix(seed, tag, x, d, c), 0)
                k = _poisson(u, cdfs[ri], cdf_len[ri])
                counts[i, j, c] = k
                cap += k
    kind = np.empty(cap, dtype=np.int8)
    src = np.empty(cap, dtype=np.int64)
    dst = np.empty(cap, dtype=np.int64)
    time = np.empty(cap, dtype=np.float64)
    e = 0
    for phase in range(2):
        for i in range(n_sites):
            x = lo + i
            for j in range(nd + 1):
                if (j == 0) != (phase == 0):
                    continue
                d = 0 if j == 0 else disp[j - 1]
                tag = tag_death if j == 0 else tag_arrow
                for c in range(n_cells):
                    if counts[i, j, c] == 0:
                        continue
                    hp = _prefix(seed, tag, x, d, c)
                    for k in range(counts[i, j, c]):
                        t = c + _finish(hp, 2 + k)
                        if t <= t_end:
                            kind[e] = 0 if j == 0 else 1
                            src[e] = x
                            dst[e] = x + d
                            time[e] = t
                            e += 1
    o = np.argsort(time[:e], kind="mergesort")
    return kind[:e][o], src[:e][o], dst[:e][o], time[:e][o]


@njit(cache=True)
def _death_free(seed, x, t_end, cdf0, len0, tag_death):
    n_cells = int(np.ceil(t_end))
    for c in range(n_cells):
        hp = _prefix(seed, tag_death, x, 0, c)
        k = _poisson(_finish(hp, 0), cdf0, len0)
        for i in range(k):
            if c + _finish(hp, 2 + i) <= t_end:
                return False
    return True


@njit(cache=True)
def _local_checks(kind, src, dst, time, n_sites, origin, targets):
    """(full descent, transmission) on window-index arrays over [0, 1]."""
    mine = np.zeros(n_sites, dtype=np.bool_)
    mine[origin] = True
    for e in range(time.shape[0]):
        if time[e] > 1.0:
            break
        a = src[e]
        if kind[e] == DEATH:
            mine[a] = False
        elif mine[a]:
            mine[dst[e]] = True
    for k in range(targets.shape[0]):
        if not mine[targets[k]]:
            return False, False
    ok = transmission_check(kind, src, dst, time, n_sites, origin, targets, 1.0)
    for k in range(ok.shape[0]):
        if not ok[k]:
            return True, False
    return True, True


@njit(cache=True)
def _first_time(seed, tag, x, d, cdf, n, after):
    """Earliest event time >= ``after`` in cell 0 of one stream (2.0 if none)."""
    hp = _prefix(seed, tag, x, d, 0)
    k = _poisson(_finish(hp, 0), cdf, n)
    best = 2.0
    for j in range(k):
        t = _finish(hp, 2 + j)
        if after <= t < best:
            best = t
    return best


@njit(cache=True)
def _nn_screen(seed, y_hi, step, cdf_death, n_death, cdf_arrow, n_arrow,
               cdf_back, n_back, tag_death, tag_arrow):
    """Necessary conditions on one side of the origin for a nearest-neighbour kernel.

    f[j] is the death-ignoring front arrival at site step*j; the true
    descent from the origin cannot arrive earlier.  A site still alive
    from time 0 that fires into a target before the front reached the
    firing site is a certain transmission violation.
    """
    f = np.empty(y_hi + 2)
    f[0] = 0.0
    for j in range(1, y_hi + 1):
        f[j] = _first_time(seed, tag_arrow, step * (j - 1), step, cdf_arrow,
                           n_arrow, f[j - 1])
        if f[j] > 1.0:
            return False
    f[y_hi + 1] = 2.0
    for j in range(1, y_hi + 2):
        x = step * j
        dj = _first_time(seed, tag_death, x, 0, cdf_death, n_death, 0.0)
        if j >= 2:
            t = _first_time(seed, tag_arrow, x, -step, cdf_back, n_back, 0.0)
            if t < dj and t < f[j - 1]:
                return False
        if j + 1 <= y_hi:
            t = _first_time(seed, tag_arrow, x, step, cdf_arrow, n_arrow, 0.0)
            if t < dj and t < f[j]:
                return False
    return True


@njit(cache=True)
def expand_prefilter(seeds, half, y_lo, y_hi, disp, rate_idx, cdfs, cdf_len,
                     tag_death, tag_arrow, screen=True):
    """Local expansion conditions at the origin for many seeds.

    The local window is [y_lo - half, y_hi + half] x [0, 1].  For a
    nearest-neighbour kernel a front screen rejects most seeds before the
    window's events are generated; it only discards seeds that would fail
    descent or transmission anyway.
    """
    out = np.zeros(seeds.shape[0], dtype=np.bool_)
    lo = y_lo - half
    hi = y_hi + half
    targets = np.arange(y_lo - lo, y_hi - lo + 1)
    nn = screen and disp.shape[0] == 2 and disp[0] == -1 and disp[1] == 1
    for s in range(seeds.shape[0]):
        seed = seeds[s]
        if not _death_free(seed, 0, 1.0, cdfs[0], cdf_len[0], tag_death):
            continue
        if nn:
            rp = rate_idx[1]
            rm = rate_idx[0]
            if not _nn_screen(seed, y_hi, 1, cdfs[0], cdf_len[0], cdfs[rp],
                              cdf_len[rp], cdfs[rm], cdf_len[rm], tag_death, tag_arrow):
                continue
            if not _nn_screen(seed, -y_lo, -1, cdfs[0], cdf_len[0], cdfs[rm],
                              cdf_len[rm], cdfs[rp], cdf_len[rp], tag_death, tag_arrow):
                continue
        kind, src, dst, time = local_events(seed, lo, hi, 1.0, disp, rate_idx,
                                            cdfs, cdf_len, tag_death, tag_arrow)
        full, trans = _local_checks(kind, src - lo, dst - lo, time, hi - lo + 1,
                                    -lo, targets)
        out[s] = full and trans
    return out


@njit(cache=True)
def expand_scan(kind, src, dst, time, n_sites, xs, ts, half, y_lo, y_hi):
    """Local expansion conditions at each space-time point (xs[k], ts[k]).

    Works on window-index arrays of a large construction: events in
    [x + y_lo - half, x + y_hi + half] x [t, t + 1] are shifted to the
    point and checked as at the origin.  Points whose local window leaves
    the construction are reported False together with a flag.
    """
    nq = xs.shape[0]
    out = np.zeros(nq, dtype=np.bool_)
    outside = np.zeros(nq, dtype=np.bool_)
    width = y_hi - y_lo + 1 + 2 * half
    targets = np.arange(half, half + y_hi - y_lo + 1)
    origin = half - y_lo
    for q in range(nq):
        x = xs[q]
        t = ts[q]
        lo = x + y_lo - half
        hi = x + y_hi + half
        if lo < 0 or hi >= n_sites:
            outside[q] = True
            continue
        e0 = np.searchsorted(time, t, side="left")
        e1 = np.searchsorted(time, t + 1.0, side="right")
        dead = False
        for e in range(e0, e1):
            if kind[e] == DEATH and src[e] == x and time[e] - t <= 1.0:
                dead = True
                break
        if dead:
            continue
        m = 0
        for e in range(e0, e1):
            if src[e] >= lo and src[e] <= hi and dst[e] >= lo and dst[e] <= hi \
                    and time[e] - t <= 1.0:
                m += 1
        k2 = np.empty(m, dtype=np.int8)
        s2 = np.empty(m, dtype=np.int64)
        d2 = np.empty(m, dtype=np.int64)
        t2 = np.empty(m, dtype=np.float64)
        i = 0
        for e in range(e0, e1):
            if src[e] >= lo and src[e] <= hi and dst[e] >= lo and dst[e] <= hi \
                    and time[e] - t <= 1.0:
                k2[i] = kind[e]
                s2[i] = src[e] - lo
                d2[i] = dst[e] - lo
                t2[i] = time[e] - t
                i += 1
        full, trans = _local_checks(k2, s2, d2, t2, width, origin, targets)
        out[q] = full and trans
    return out, outside
