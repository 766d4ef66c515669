"""Replica orchestration and estimation for interface experiments.

A run samples one Harris construction per replica (seed = seed_base XOR
i), records r_t, l_t, the running maximum q_t and the first gamma-slow
violation times, and persists everything to a directory:

    config.json   resolved configuration plus its hash
    samples.csv   one row per (replica, grid time)
    summary.json  tail table, speed table, counts
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .contact import ContaminationError, interface_series
from .graphical import Kernel, Window, guard_width, sample_harris
from .stats import Z95, DecayFit, decay_fit, wilson_interval

SAMPLES_SCHEMA = "# schema: samples v1"
SAMPLES_COLUMNS = ("replica", "seed", "time", "r", "l", "rho", "rho_plus",
                   "rho_minus", "q", "contaminated")
SUMMARY_SCHEMA = "summary v1"
MIN_TAIL_SAMPLES = 30
DEFAULT_L_GRID = tuple(range(0, 41))

__all__ = ["ExperimentConfig", "SampleStore", "run_experiment", "tail_estimates",
           "speed_estimate", "decay_fit", "DecayFit", "wilson_interval",
           "escape_estimates", "overshoot_estimates", "write_store", "atomic_write"]


@dataclass(frozen=True)
class ExperimentConfig:
    lam: float = 4.0
    range: int = 1
    weights: Optional[tuple] = None  # unnormalised p(1..M); uniform when None
    grid: tuple = (10.0, 20.0, 40.0, 80.0)
    replicas: int = 200
    seed_base: int = 0
    guard: Optional[int] = None
    gammas: tuple = ()
    L_grid: tuple = DEFAULT_L_GRID
    discard_contaminated: bool = True
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(t) for t in self.grid))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "L_grid", tuple(int(v) for v in self.L_grid))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if not self.grid or any(t <= 0 for t in self.grid):
            raise ValueError("grid times must be positive")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        self.kernel()

    @property
    def T(self) -> float:
        return self.grid[-1]

    def kernel(self) -> Kernel:
        if self.weights is not None:
            if len(self.weights) != self.range:
                raise ValueError(f"{len(self.weights)} weights for range {self.range}")
            return Kernel.from_weights(self.lam, self.weights)
        return Kernel.uniform(self.lam, self.range)

    def window(self) -> Window:
        g = guard_width(self.kernel(), self.T) if self.guard is None else self.guard
        return Window(-g, g, self.T)

    def seed(self, i: int) -> int:
        return (int(self.seed_base) ^ int(i)) & 0xFFFFFFFFFFFFFFFF

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}; valid: {sorted(known)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def hash(self) -> str:
        """Hash of the fields that affect samples (threads excluded)."""
        d = self.to_dict()
        d.pop("threads")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(eq=False)
class SampleStore:
    config: ExperimentConfig
    seeds: np.ndarray
    contaminated: np.ndarray  # per replica
    times: np.ndarray
    r: np.ndarray  # (replicas, n_times)
    l: np.ndarray
    q: np.ndarray
    first_violation: np.ndarray  # (replicas, n_gammas)
    step_contaminated: np.ndarray = field(repr=False, default=None)

    @property
    def config_hash(self) -> str:
        return self.config.hash()

    @property
    def rho(self) -> np.ndarray:
        return self.r - self.l

    @property
    def kept(self) -> np.ndarray:
        if self.config.discard_contaminated:
            return ~self.contaminated
        return np.ones_like(self.contaminated)

    @property
    def n_contaminated(self) -> int:
        return int(self.contaminated.sum())

    @property
    def n_used(self) -> int:
        return int(self.kept.sum())

    def samples_csv(self) -> str:
        buf = io.StringIO()
        buf.write(SAMPLES_SCHEMA + f" config={self.config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SAMPLES_COLUMNS)
        rho = self.rho
        for i, seed in enumerate(self.seeds.tolist()):
            for j, t in enumerate(self.times.tolist()):
                p = int(rho[i, j])
                w.writerow((i, seed, repr(t), int(self.r[i, j]), int(self.l[i, j]), p,
                            max(p, 0), max(-p, 0), int(self.q[i, j]),
                            int(bool(self.step_contaminated[i, j]))))
        return buf.getvalue()

    def summary(self) -> dict:
        kept = self.kept
        out = {
            "schema": SUMMARY_SCHEMA,
            "config_hash": self.config_hash,
            "replicas": int(self.seeds.size),
            "contaminated": self.n_contaminated,
            "used": self.n_used,
            "times": self.times.tolist(),
        }
        if self.n_used >= MIN_TAIL_SAMPLES:
            out["tails"] = tail_estimates(np.abs(self.rho[kept]), self.times,
                                          self.config.L_grid)
        out["speed"] = speed_estimate(self.r[kept], self.times)
        if self.config.gammas and self.n_used:
            out["slow"] = {repr(g): escape_estimates(self.first_violation[kept, k],
                                                     self.times)
                           for k, g in enumerate(self.config.gammas)}
        if self.n_used:
            out["overshoot"] = overshoot_estimates(self.q[kept], self.r[kept], self.times,
                                                   self.config.L_grid)
        return out


def _replica(args):
    cfg, i = args
    seed = cfg.seed(i)
    h = sample_harris(cfg.kernel(), cfg.window(), seed)
    s = interface_series(h, cfg.grid, gammas=cfg.gammas)
    return seed, s.r, s.l, s.running_max, s.first_violation, s.contaminated


def run_experiment(cfg: ExperimentConfig, out: Optional[os.PathLike] = None,
                   progress=None) -> SampleStore:
    """Run all replicas; results do not depend on ``cfg.threads``.

    Contaminated replicas are kept but flagged; with discard they are left
    out of every estimate, otherwise the run aborts with ContaminationError.
    """
    jobs = [(cfg, i) for i in range(cfg.replicas)]
    if cfg.threads > 1:
        with ProcessPoolExecutor(cfg.threads) as ex:
            results = list(ex.map(_replica, jobs, chunksize=max(1, len(jobs) // (4 * cfg.threads))))
    else:
        results = []
        for k, job in enumerate(jobs):
            results.append(_replica(job))
            if progress is not None:
                progress(k + 1, len(jobs))
    seeds = np.array([r[0] for r in results], dtype=np.uint64)
    step_cont = np.array([r[5] for r in results], dtype=bool)
    cont = step_cont.any(axis=1)
    if cont.any() and not cfg.discard_contaminated:
        first = int(np.flatnonzero(cont)[0])
        raise ContaminationError(f"replica {first} (seed {int(seeds[first])}) is "
                                 "boundary-contaminated; widen --guard")
    if cont.all():
        raise ContaminationError("every replica is boundary-contaminated")
    store = SampleStore(cfg, seeds, cont, np.array(cfg.grid),
                        np.array([r[1] for r in results]), np.array([r[2] for r in results]),
                        np.array([r[3] for r in results]),
                        np.array([r[4] for r in results]).reshape(len(results), -1),
                        step_cont)
    if out is not None:
        write_store(store, out)
    return store


def atomic_write(path: os.PathLike, text: str) -> None:
    """Write to a temporary sibling, flush, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_store(store: SampleStore, out: os.PathLike) -> None:
    out = Path(out)
    cfg = dict(store.config.to_dict(), config_hash=store.config_hash)
    atomic_write(out / "config.json", dumps_json(cfg))
    atomic_write(out / "samples.csv", store.samples_csv())
    atomic_write(out / "summary.json", dumps_json(store.summary()))


# --- estimators ----------------------------------------------------------

def tail_estimates(abs_rho: np.ndarray, times: Sequence[float], L_grid: Sequence[int],
                   min_samples: int = MIN_TAIL_SAMPLES) -> list:
    """P(|rho_t| > L) per (t, L) with Wilson 95% intervals.

    ``abs_rho`` has one row per replica and one column per time.
    """
    a = np.asarray(abs_rho)
    if a.size == 0:
        raise ValueError("empty sample")
    if a.ndim == 1:
        a = a[:, None]
    n = a.shape[0]
    if n < min_samples:
        raise ValueError(f"{n} replicas; tail estimates need at least {min_samples}")
    rows = []
    for j, t in enumerate(times):
        col = a[:, j]
        for L in L_grid:
            k = int((col > L).sum())
            lo, hi = wilson_interval(k, n)
            rows.append({"t": float(t), "L": int(L), "count": k, "n": n,
                         "p": k / n, "ci_lo": lo, "ci_hi": hi})
    return rows


def speed_estimate(r: np.ndarray, times: Sequence[float]) -> list:
    """Mean of r_T / T with a normal-approximation 95% interval, per T.

    Non-finite entries (empty edges) are excluded and counted.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 1:
        r = r[:, None]
    rows = []
    for j, T in enumerate(times):
        v = r[:, j] / float(T)
        ok = np.isfinite(v)
        n = int(ok.sum())
        if n == 0:
            rows.append({"T": float(T), "alpha": None, "ci_lo": None, "ci_hi": None,
                         "n": 0, "excluded": int(v.size)})
            continue
        m = float(v[ok].mean())
        half = Z95 * float(v[ok].std(ddof=1)) / math.sqrt(n) if n > 1 else math.inf
        rows.append({"T": float(T), "alpha": m, "ci_lo": m - half, "ci_hi": m + half,
                     "n": n, "excluded": int(v.size - n)})
    return rows


def escape_estimates(first_violation: np.ndarray, times: Sequence[float]) -> list:
    """P(slow up to T but not up to 2T) from first violation times."""
    fv = np.asarray(first_violation, dtype=np.float64)
    n = fv.size
    rows = []
    for T in times:
        k = int(((fv > T) & (fv <= 2 * T)).sum())
        lo, hi = wilson_interval(k, n)
        rows.append({"T": float(T), "count": k, "n": n, "p": k / n, "ci_lo": lo, "ci_hi": hi})
    return rows


def overshoot_estimates(q: np.ndarray, r: np.ndarray, times: Sequence[float],
                        L_grid: Sequence[int]) -> list:
    """P(q_T > r_T + L): the edge was once more than L ahead of where it ends."""
    d = np.asarray(q) - np.asarray(r)
    n = d.shape[0]
    rows = []
    for j, T in enumerate(times):
        for L in L_grid:
            k = int((d[:, j] > L).sum())
            lo, hi = wilson_interval(k, n)
            rows.append({"T": float(T), "L": int(L), "count": k, "n": n, "p": k / n,
                         "ci_lo": lo, "ci_hi": hi})
    return rows
