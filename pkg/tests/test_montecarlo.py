import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpinterface.contact import ContaminationError
from cpinterface.montecarlo import (ExperimentConfig, atomic_write, escape_estimates,
                                    overshoot_estimates, run_experiment, speed_estimate,
                                    tail_estimates)

SMALL = ExperimentConfig(lam=4.0, grid=(2.0, 4.0), replicas=40, seed_base=11,
                         gammas=(0.5,), L_grid=(0, 2, 5))


def test_tail_estimates_extremes():
    a = np.ones((50, 2), dtype=int)
    rows = tail_estimates(a, [1.0, 2.0], [0, 1, 100])
    p = {(r["t"], r["L"]): r["p"] for r in rows}
    assert p[(1.0, 0)] == 1.0 and p[(2.0, 0)] == 1.0
    assert p[(1.0, 1)] == 0.0 and p[(2.0, 100)] == 0.0
    with pytest.raises(ValueError):
        tail_estimates(a[:10], [1.0, 2.0], [0])
    with pytest.raises(ValueError):
        tail_estimates(np.zeros((0, 2)), [1.0, 2.0], [0])


def test_speed_of_linear_edge():
    times = [5.0, 10.0]
    r = np.array([[10, 20]] * 7)
    rows = speed_estimate(r, times)
    assert [row["alpha"] for row in rows] == [2.0, 2.0]
    assert rows[0]["ci_lo"] == rows[0]["ci_hi"] == 2.0
    r = np.array([[10.0, np.nan], [12.0, np.inf], [8.0, 20.0]])
    rows = speed_estimate(r, times)
    assert rows[0]["alpha"] == pytest.approx(2.0) and rows[1]["excluded"] == 2


def test_escape_and_overshoot():
    fv = np.array([np.inf, 1.5, 3.0, 5.0, 9.0])
    rows = escape_estimates(fv, [1.0, 2.0, 4.0])
    assert [r["count"] for r in rows] == [1, 1, 1]
    q = np.array([[5], [3], [10]])
    r = np.array([[5], [1], [2]])
    rows = overshoot_estimates(q, r, [1.0], [0, 1, 2, 7, 8])
    assert [row["count"] for row in rows] == [2, 2, 1, 1, 0]


@given(st.permutations(list(range(40))))
@settings(max_examples=20)
def test_estimates_ignore_replica_order(perm):
    rng = np.random.default_rng(3)
    a = rng.integers(0, 10, size=(40, 3))
    r = rng.integers(0, 30, size=(40, 3))
    times = [1.0, 2.0, 3.0]
    assert tail_estimates(a, times, [0, 3]) == tail_estimates(a[perm], times, [0, 3])
    s1, s2 = speed_estimate(r, times), speed_estimate(r[perm], times)
    for x, y in zip(s1, s2):
        assert x["alpha"] == pytest.approx(y["alpha"])
        assert x["ci_hi"] == pytest.approx(y["ci_hi"])


def test_config_round_trip_and_hash():
    d = SMALL.to_dict()
    back = ExperimentConfig.from_dict(json.loads(json.dumps(d)))
    assert back == SMALL and back.hash() == SMALL.hash()
    from dataclasses import replace
    assert replace(SMALL, threads=4).hash() == SMALL.hash()
    assert replace(SMALL, seed_base=12).hash() != SMALL.hash()
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"lambda": 2})
    for bad in (dict(replicas=0), dict(grid=(2.0, 1.0)), dict(grid=(0.0,)),
                dict(threads=0), dict(range=2, weights=(1.0,))):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_run_is_deterministic_and_threads_free(tmp_path):
    a = run_experiment(SMALL, out=tmp_path / "a")
    b = run_experiment(SMALL, out=tmp_path / "b")
    from dataclasses import replace
    c = run_experiment(replace(SMALL, threads=2), out=tmp_path / "c")
    for name in ("samples.csv", "summary.json", "config.json"):
        ta = (tmp_path / "a" / name).read_text()
        assert ta == (tmp_path / "b" / name).read_text()
        if name != "config.json":
            assert ta == (tmp_path / "c" / name).read_text()
    assert np.array_equal(a.rho, b.rho) and np.array_equal(a.rho, c.rho)
    lines = (tmp_path / "a" / "samples.csv").read_text().splitlines()
    assert lines[0] == f"# schema: samples v1 config={SMALL.hash()}"
    assert lines[1].split(",") == ["replica", "seed", "time", "r", "l", "rho", "rho_plus",
                                   "rho_minus", "q", "contaminated"]
    assert len(lines) == 2 + 40 * 2
    summ = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summ["used"] + summ["contaminated"] == 40
    assert set(summ) >= {"tails", "speed", "slow", "overshoot"}
    assert not list(tmp_path.glob("**/*.tmp"))


def test_store_consistency():
    s = run_experiment(SMALL)
    assert np.all(s.q >= s.r)
    assert np.all(np.diff(s.q, axis=1) >= 0)
    assert np.array_equal(s.rho, s.r - s.l)
    assert s.seeds.tolist() == [SMALL.seed(i) for i in range(40)]


def test_discard_and_abort():
    from dataclasses import replace
    tight = replace(SMALL, guard=4, grid=(5.0, 10.0), replicas=30)
    with pytest.raises(ContaminationError):
        run_experiment(replace(tight, discard_contaminated=False))
    try:
        s = run_experiment(tight)
    except ContaminationError:
        return  # all replicas hit the edge: also an abort
    assert s.n_contaminated > 0 and s.n_used == 30 - s.n_contaminated


def test_atomic_write_leaves_old_file_on_error(tmp_path):
    p = tmp_path / "x.txt"
    atomic_write(p, "old\n")
    with pytest.raises(TypeError):
        atomic_write(p, 5)
    assert p.read_text() == "old\n"
    assert [f.name for f in tmp_path.iterdir()] == ["x.txt"]
