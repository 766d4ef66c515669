"""Parameters fixed by pilot runs before the acceptance experiments.

Each entry names the script under scripts/ that produced it.  Pilot seeds
are disjoint from the acceptance seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphical import Kernel
from .renorm import BlockParams, LambdaWindow


@dataclass(frozen=True)
class SlowPilot:
    """scripts/pilot_gamma.py: gamma with positive counts at every level and
    the best log-linear fit among those (1000 replicas, seed 0x5EED0000)."""
    lam: float = 4.0
    gamma: float = 1.2
    levels: tuple = (5.0, 10.0, 20.0, 40.0)


@dataclass(frozen=True)
class BlockPilot:
    """scripts/pilot_blocks.py: the first (K, N) on the scan whose closure
    proxy eps_hat(1) has its upper 95% bound below 0.05."""
    lam: float = 64.0
    K: int = 2
    N: int = 5
    m_max: int = 8
    n_max: int = 4
    guard: int = 1930  # int(0.6 * lam * K * N * (n_max + 1)) + 10

    def kernel(self) -> Kernel:
        return Kernel.nearest_neighbour(self.lam)

    def params(self) -> BlockParams:
        return BlockParams(self.K, self.N)

    def window(self) -> LambdaWindow:
        return LambdaWindow(self.m_max, self.n_max)


@dataclass(frozen=True)
class BarrierPilot:
    """scripts/pilot_barrier.py: the smallest blocks with a usable acceptance
    rate for beta-expanding origins (about 3e-6 per seed)."""
    lam: float = 64.0
    K: int = 2
    N: int = 3
    beta: float = 0.5
    horizon_i: int = 2

    def kernel(self) -> Kernel:
        return Kernel.nearest_neighbour(self.lam)

    def params(self) -> BlockParams:
        return BlockParams(self.K, self.N, self.beta)

    @property
    def T(self) -> float:
        return 1.0 + self.params().slab * self.horizon_i


@dataclass(frozen=True)
class GoodPointPilot:
    """Good-point scan along the edge: gamma sits above the edge speed
    (about 30.7 at lambda = 64) so that slowness is typical."""
    lam: float = 64.0
    K: int = 2
    N: int = 3
    gamma: float = 40.0
    T: float = 13.0
    a: float = 2.0
    gaps: tuple = (1.0, 4.0, 9.0, 16.0)
    delta: float = 0.005

    def kernel(self) -> Kernel:
        return Kernel.nearest_neighbour(self.lam)

    def params(self) -> BlockParams:
        return BlockParams(self.K, self.N)


SLOW = SlowPilot()
BLOCKS = BlockPilot()
BARRIER = BarrierPilot()
GOOD = GoodPointPilot()
