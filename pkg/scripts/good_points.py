"""P(no good point on the edge over [a, a + gap]) against gap, with the
stretched-exponential fit in sqrt(gap)."""

import argparse
import warnings

from cpinterface import pilots
from cpinterface.renorm import no_good_point_estimates
from cpinterface.stats import decay_fit

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--replicas", type=int, default=30)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

g = pilots.GOOD
rows, cont = no_good_point_estimates(g.kernel(), g.params(), g.gamma, g.T, g.a, g.gaps,
                                     args.replicas, g.delta, args.seed)
for r in rows:
    print(f"gap={r.gap:g} no-good {r.count}/{r.n} = {r.freq:.4f} [{r.ci_lo:.4f}, {r.ci_hi:.4f}]")
print(f"contaminated {cont}")
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    fit = decay_fit([r.gap for r in rows], [r.freq for r in rows], transform="sqrt")
print(f"slope {fit.slope:.4f} R2 {fit.r2:.3f}")
