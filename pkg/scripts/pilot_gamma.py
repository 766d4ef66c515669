"""Pick gamma for the slow-escape decay check on replicas disjoint from the
acceptance run (different seed base).

For each candidate gamma, counts of {slow up to T, not slow up to 2T} at
T in {5, 10, 20, 40} are fitted log-linearly in T.
"""

import argparse
import json

import numpy as np

from cpinterface.montecarlo import ExperimentConfig, escape_estimates, run_experiment
from cpinterface.stats import decay_fit

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--lambda", dest="lam", type=float, default=4.0)
ap.add_argument("--replicas", type=int, default=1000)
ap.add_argument("--seed", type=int, default=0x5EED0000)
ap.add_argument("--gammas", default="0.9,1.0,1.2,1.4,1.6")
args = ap.parse_args()

gammas = tuple(float(g) for g in args.gammas.split(","))
Ts = (5.0, 10.0, 20.0, 40.0)
cfg = ExperimentConfig(lam=args.lam, grid=(80.0,), replicas=args.replicas,
                       seed_base=args.seed, gammas=gammas)
store = run_experiment(cfg)
kept = store.kept
report = []
for k, g in enumerate(gammas):
    rows = escape_estimates(store.first_violation[kept, k], Ts)
    counts = [r["count"] for r in rows]
    try:
        fit = decay_fit(Ts, [r["p"] for r in rows])
    except ValueError as exc:
        report.append({"gamma": g, "counts": counts, "error": str(exc)})
        print(f"gamma={g:.2f} counts={counts} no fit: {exc}", flush=True)
        continue
    report.append({"gamma": g, "counts": counts, **fit.as_dict()})
    print(f"gamma={g:.2f} counts={counts} slope={fit.slope:.4f} r2={fit.r2:.3f}", flush=True)
print(json.dumps(report, indent=2))
