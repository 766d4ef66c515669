"""Small estimators shared by the experiment modules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

Z95 = 1.959963984540054


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("empty sample")
    if not 0 <= k <= n:
        raise ValueError(f"count {k} outside [0, {n}]")
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    n_points: int
    dropped: tuple = ()

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "n_points": self.n_points, "dropped": list(self.dropped)}


def decay_fit(x: Sequence[float], p: Sequence[float], transform: str = "identity") -> DecayFit:
    """Least squares of log p against x (or sqrt x).

    Zero probabilities have no logarithm; they are dropped with a warning
    and listed in ``dropped``.
    """
    if transform not in ("identity", "sqrt"):
        raise ValueError(f"unknown transform {transform!r}")
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if x.shape != p.shape:
        raise ValueError("x and p differ in length")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    zero = p == 0
    dropped = tuple(x[zero].tolist())
    if dropped:
        warnings.warn(f"dropping {len(dropped)} zero probabilities at x={list(dropped)}")
    x, p = x[~zero], p[~zero]
    if x.size < 3:
        raise ValueError(f"need at least 3 positive points, have {x.size}")
    u = np.sqrt(x) if transform == "sqrt" else x
    y = np.log(p)
    A = np.column_stack([u, np.ones_like(u)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * u + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res < 1e-24 else 0.0)
    return DecayFit(float(slope), float(intercept), float(r2), int(x.size), dropped)
