"""Counter-based random streams.

Every random number is a pure function of an integer key tuple, so a
stream for (seed, kind, site, displacement, time-cell, index) can be
regenerated in isolation.  This is what lets windows compose: sampling a
larger window reproduces the events of any sub-window exactly.

The mixer is the splitmix64 finalizer applied to each key word in turn.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _as_u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind in "iub":
        return arr.astype(np.int64).view(np.uint64)
    raise TypeError(f"key words must be integers, got {arr.dtype}")


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def hash_keys(*words) -> np.ndarray:
    """Hash a tuple of broadcastable integer arrays to uint64."""
    arrays = np.broadcast_arrays(*[_as_u64(w) for w in words])
    with np.errstate(over="ignore"):
        h = np.full(arrays[0].shape, _GOLDEN, dtype=np.uint64)
        for w in arrays:
            h = mix64(h ^ w + _GOLDEN)
    return h


def uniforms(*words) -> np.ndarray:
    """Uniform doubles in [0, 1) keyed by integer words."""
    h = hash_keys(*words)
    return (h >> _S11).astype(np.float64) * _INV53


def poisson_cdf_table(mu: float) -> np.ndarray:
    """CDF of Poisson(mu) truncated where the tail is below double precision."""
    if mu < 0:
        raise ValueError("negative Poisson mean")
    if mu == 0:
        return np.array([1.0])
    kmax = int(mu + 12.0 * np.sqrt(mu) + 40)
    k = np.arange(kmax + 1)
    logpmf = k * np.log(mu) - mu - np.cumsum(np.log(np.maximum(k, 1)))
    cdf = np.cumsum(np.exp(logpmf))
    cdf[-1] = 1.0
    return cdf


def poisson_counts(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    """Inverse-CDF Poisson draws from uniforms ``u``."""
    return np.searchsorted(cdf, u, side="right").astype(np.int64)
