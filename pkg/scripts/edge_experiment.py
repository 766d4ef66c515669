"""Edge and interface experiment: runs the replicas, writes samples.csv,
summary.json and the plots into --out.
"""

import argparse

from cpinterface.montecarlo import ExperimentConfig, run_experiment
from cpinterface.plotting import summary_plots

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--lambda", dest="lam", type=float, default=4.0)
ap.add_argument("--grid", default="10,20,40,80")
ap.add_argument("--replicas", type=int, default=2000)
ap.add_argument("--gammas", default="1.2")
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--threads", type=int, default=1)
ap.add_argument("--out", default="runs/edge")
args = ap.parse_args()

cfg = ExperimentConfig(lam=args.lam, grid=tuple(float(t) for t in args.grid.split(",")),
                       replicas=args.replicas, seed_base=args.seed,
                       gammas=tuple(float(g) for g in args.gammas.split(",") if g),
                       threads=args.threads)
store = run_experiment(cfg, args.out,
                       progress=lambda k, n: print(f"\r{k}/{n}", end="", flush=True))
print(f"\nused {store.n_used}, contaminated {store.n_contaminated}")
for path in summary_plots(store.summary(), args.out):
    print(path)
