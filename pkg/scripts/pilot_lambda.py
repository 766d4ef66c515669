"""Check that a rate is supercritical: P(tau > horizon) from a single
infected site, with a Wilson interval.  The default rate is accepted when
the estimate exceeds 0.3.
"""

import argparse

from cpinterface.contact import survival_time
from cpinterface.graphical import Kernel, Window, guard_width, sample_harris
from cpinterface.stats import wilson_interval

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--lambda", dest="lam", type=float, default=4.0)
ap.add_argument("--range", type=int, default=1)
ap.add_argument("--horizon", type=float, default=100.0)
ap.add_argument("--replicas", type=int, default=1000)
ap.add_argument("--seed", type=int, default=0x5EED1000)
ap.add_argument("--threshold", type=float, default=0.3)
args = ap.parse_args()

k = Kernel.uniform(args.lam, args.range)
g = guard_width(k, args.horizon)
w = Window(-g, g, args.horizon)
alive = sum(survival_time(sample_harris(k, w, args.seed ^ i)) > args.horizon
            for i in range(args.replicas))
lo, hi = wilson_interval(alive, args.replicas)
p = alive / args.replicas
print(f"lambda={args.lam:g} range={args.range} P(tau > {args.horizon:g}) = {p:.4f} "
      f"[{lo:.4f}, {hi:.4f}] -> {'accept' if p > args.threshold else 'reject'}")
