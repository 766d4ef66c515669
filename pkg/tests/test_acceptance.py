"""Acceptance criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line with the measured numbers.  The slow
Monte-Carlo runs take several minutes each on one core.
"""

import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from cpinterface import pilots
from cpinterface.checks import blocks_suite, chi_suite, coupling_suite, oracle_suite
from cpinterface.montecarlo import (ExperimentConfig, escape_estimates, overshoot_estimates,
                                    run_experiment, speed_estimate)
from cpinterface.opercolation import closure_estimate, gamma_escape
from cpinterface.renorm import (barrier_region, check_barrier_properties,
                                expanding_samples, is_beta_expanding,
                                no_good_point_estimates)
from cpinterface.stats import decay_fit, wilson_interval

GRID = (10.0, 20.0, 40.0, 80.0)
N_REPLICAS = 2000


def report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def edge_run():
    """lambda = 4 total (2 per neighbour), nearest neighbour; the first
    2,000 uncontaminated replicas of a slightly larger run."""
    cfg = ExperimentConfig(lam=4.0, grid=GRID, replicas=N_REPLICAS + 20, seed_base=0,
                           gammas=(pilots.SLOW.gamma,))
    t0 = time.perf_counter()
    store = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    idx = np.flatnonzero(store.kept)[:N_REPLICAS]
    assert idx.size == N_REPLICAS
    return store, idx, elapsed


def test_c01_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    res = oracle_suite(cases=10_000, seed=0, n_times=5)
    dt = time.perf_counter() - t0
    report(capsys, "C1 oracle equivalence", res.violations == 0 and dt < 60,
           f"{res.cases} constructions, {res.checks} checks, {res.violations} mismatches, "
           f"{dt:.1f} s")


def test_c02_coupling(capsys):
    res = coupling_suite(cases=1000, seed=0, lams=(0.8, 1.2, 2.0))
    report(capsys, "C2 monotone and additive coupling", res.violations == 0,
           f"{res.cases} constructions, {res.checks} checks, {res.violations} violations")


def test_c03_chi(capsys):
    res = chi_suite(cases=500, seed=0)
    report(capsys, "C3 chi from coupling equals chi direct", res.violations == 0,
           f"{res.cases} constructions, {res.checks} site-times, {res.violations} mismatches")


def test_c04_tightness(capsys, edge_run):
    store, idx, elapsed = edge_run
    a = np.abs(store.rho[idx])
    L = float(np.quantile(a[:, 0], 0.9))
    parts, ok = [], elapsed < 1800
    for j, T in enumerate(GRID[1:], start=1):
        k = int((a[:, j] > L).sum())
        lo, hi = wilson_interval(k, N_REPLICAS)
        bound = 0.10 + (hi - lo)
        ok &= k / N_REPLICAS <= bound
        parts.append(f"T={T:g}: {k / N_REPLICAS:.4f} vs {bound:.4f}")
    report(capsys, "C4 tightness", ok,
           f"L={L:g} (90th pct at T=10); " + "; ".join(parts) + f"; run {elapsed:.0f} s")


def test_c05_edge_speed(capsys, edge_run):
    store, idx, _ = edge_run
    rows = speed_estimate(store.r[idx], GRID)
    al = [r["alpha"] for r in rows]
    ok = all(r["alpha"] > 0 and r["ci_lo"] > 0 for r in rows)
    ok &= abs(al[3] - al[2]) < abs(al[1] - al[0])
    report(capsys, "C5 edge speed", ok,
           "alpha " + ", ".join(f"T={r['T']:g}: {r['alpha']:.4f} [{r['ci_lo']:.4f}, "
                                f"{r['ci_hi']:.4f}]" for r in rows))


def test_c06a_slow_escape_decay(capsys, edge_run):
    store, idx, _ = edge_run
    rows = escape_estimates(store.first_violation[idx, 0], pilots.SLOW.levels)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        fit = decay_fit(pilots.SLOW.levels, [r["p"] for r in rows])
    report(capsys, "C6a slow-then-escape decay", fit.slope < 0 and fit.r2 >= 0.8,
           f"gamma={pilots.SLOW.gamma}, counts {[r['count'] for r in rows]}, "
           f"skipped T={list(fit.dropped)}, slope {fit.slope:.4f}, R2 {fit.r2:.3f}")


def test_c06b_gamma_escape_decay(capsys):
    levels = list(range(0, 21))
    rows = gamma_escape(0.95, 0.5, levels, n_fields=20_000, height=40, seed=0)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        fit = decay_fit([r.i for r in rows], [r.freq for r in rows])
    report(capsys, "C6b Gamma(i) escape decay", fit.slope < 0,
           f"counts {[r.count for r in rows]}, slope {fit.slope:.4f}, R2 {fit.r2:.3f}")


def test_c06c_no_good_point_decay(capsys):
    g = pilots.GOOD
    rows, cont = no_good_point_estimates(g.kernel(), g.params(), g.gamma, g.T, g.a, g.gaps,
                                         replicas=30, delta=g.delta, seed=0)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        fit = decay_fit([r.gap for r in rows], [r.freq for r in rows], transform="sqrt")
    report(capsys, "C6c no-good-point decay", fit.slope < 0,
           f"P(no good) at b-a={[r.gap for r in rows]}: {[round(r.freq, 4) for r in rows]} "
           f"(n={rows[0].n}, contaminated {cont}), slope {fit.slope:.4f}")


def test_c07_block_consistency(capsys):
    b = pilots.BLOCKS
    fields = []
    res = blocks_suite(cases=1000, seed=0, kernel=b.kernel(), params=b.params(),
                       lw=b.window(), per_field=40, guard=b.guard, collect=fields)
    rows = closure_estimate([bf.perc_field() for bf in fields], k=1, max_r=1)
    eps = rows[0].eps_hat
    report(capsys, "C7 block field self-consistency",
           res.violations == 0 and eps < 0.05,
           f"{res.cases} cells, {res.violations} disagreements; eps_hat(1)={eps:.4f} "
           f"[{rows[0].ci_lo:.4f}, {rows[0].ci_hi:.4f}] over {len(fields)} fields "
           f"(lambda={b.lam:g}, K={b.K}, N={b.N})")


def test_c08_barrier_geometry(capsys):
    b = pilots.BARRIER
    total = queries = accepted = 0
    bars = []
    for smp in expanding_samples(b.kernel(), b.params(), b.horizon_i, 100):
        rep = is_beta_expanding(smp.events, b.params(), b.horizon_i, lazy=False)
        bar = barrier_region(rep.field)
        bars.append(bar.beta_bar)
        pr = check_barrier_properties(smp.events, b.params(), bar.beta_bar, b.T, 10_000,
                                      seed=smp.seed)
        total += pr.total_violations
        queries += pr.trials
        accepted += 1
    report(capsys, "C8 barrier geometry", accepted == 100 and total == 0,
           f"{accepted} accepted samples, {queries} queries, {total} violations; "
           f"beta_bar in [{min(bars):.4f}, {max(bars):.4f}]")


def test_c09_overshoot(capsys, edge_run):
    store, idx, _ = edge_run
    L_grid = list(range(0, 41))
    rows = overshoot_estimates(store.q[idx], store.r[idx], GRID, L_grid)
    p = np.array([r["p"] for r in rows]).reshape(len(GRID), len(L_grid))
    monotone = bool(np.all(np.diff(p, axis=1) <= 0))
    good = [L for j, L in enumerate(L_grid) if np.all(p[:, j] < 0.1)]
    L_found = good[0] if good else None
    detail = (f"non-increasing in L: {monotone}; L={L_found} gives "
              f"{[round(float(v), 4) for v in p[:, good[0]]] if good else 'none'}")
    report(capsys, "C9 overshoot trend", monotone and L_found is not None, detail)


def test_c10_cli_reproducible(capsys, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        subprocess.run([sys.executable, "-m", "cpinterface", "interface", "--T", "8",
                        "--replicas", "200", "--gamma", "0.5,1.0", "--seed", "7",
                        "--out", str(d)], check=True, capture_output=True)
        outs.append([(d / n).read_bytes() for n in ("samples.csv", "summary.json")])
    same = outs[0] == outs[1]
    report(capsys, "C10 reproducible CLI output", same,
           f"samples.csv {len(outs[0][0])} bytes, summary.json {len(outs[0][1])} bytes, "
           f"identical: {same}")
