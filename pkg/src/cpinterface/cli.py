"""Command-line front end.

    python -m cpinterface <subcommand> [flags]

Subcommands: simulate, interface, blocks, percolate, verify, plot.
Options resolve as defaults < --config JSON file < explicit flags.  Every
run prints the resolved options and their hash.

Exit codes: 0 success, 1 usage error, 2 contamination abort, 3 a verify
suite found violations.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .checks import SUITES, run_suite
from .contact import ContaminationError, interface_series
from .graphical import Kernel, Window, dumps_events, guard_width, load_events, sample_harris
from .montecarlo import ExperimentConfig, atomic_write, dumps_json, run_experiment
from .opercolation import closure_estimate, gamma_event, sample_field
from .plotting import summary_plots
from .renorm import BlockParams, LambdaWindow, sample_block_field
from .stats import wilson_interval

EXIT_OK, EXIT_USAGE, EXIT_CONTAMINATED, EXIT_VIOLATIONS = 0, 1, 2, 3
COMMANDS = ("simulate", "interface", "blocks", "percolate", "verify", "plot")

DEFAULTS = {
    "lambda": 4.0, "range": 1, "kernel": None, "T": 40.0, "grid": None,
    "replicas": 200, "seed": 0, "guard": None, "K": 2, "N": 5, "beta": 0.5,
    "gamma": None, "p": 0.95, "i": 10, "out": None, "threads": None,
    "dump_events": False, "load_events": None, "contaminated": "discard",
    "width": None, "height": 10, "fields": None, "gamma_beta": None,
    "suite": "all", "cases": None, "input": None,
}

# options that matter for each subcommand (others are ignored, not printed)
RELEVANT = {
    "simulate": ("lambda", "range", "kernel", "T", "grid", "seed", "guard", "gamma",
                 "out", "dump_events", "load_events"),
    "interface": ("lambda", "range", "kernel", "T", "grid", "replicas", "seed", "guard",
                  "gamma", "out", "threads", "contaminated"),
    "blocks": ("lambda", "range", "kernel", "K", "N", "beta", "width", "height", "seed",
               "guard", "fields", "out"),
    "percolate": ("p", "width", "height", "beta", "gamma_beta", "i", "seed", "fields", "out"),
    "verify": ("suite", "cases", "seed", "out"),
    "plot": ("input", "out"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        valid = sorted(o for a in self._actions for o in a.option_strings)
        raise UsageError(f"{self.prog}: {message}\nvalid flags: {' '.join(valid)}")


def _csv_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file whose keys mirror the flags")
    common.add_argument("--lambda", dest="lambda", type=float, help="infection rate (total, rate lambda*p(d))")
    common.add_argument("--range", type=int, help="kernel range M (uniform weights)")
    common.add_argument("--kernel", type=_csv_floats, help="weights for d=1..M, normalised symmetrically")
    common.add_argument("--T", type=float, help="time horizon")
    common.add_argument("--grid", type=_csv_floats, help="sample times (default T/8,T/4,T/2,T)")
    common.add_argument("--replicas", type=int)
    common.add_argument("--seed", type=_u64, help="seed (base seed for replicas)")
    common.add_argument("--guard", type=int, help="guard band width")
    common.add_argument("--K", type=int)
    common.add_argument("--N", type=int)
    common.add_argument("--beta", type=float)
    common.add_argument("--gamma", type=_csv_floats, help="slow-edge slopes to track")
    common.add_argument("--p", type=float, help="site density for percolate")
    common.add_argument("--i", type=int, help="percolation level for Gamma(i)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int)
    common.add_argument("--dump-events", dest="dump_events", action="store_const", const=True)
    common.add_argument("--load-events", dest="load_events")
    g = common.add_mutually_exclusive_group()
    g.add_argument("--discard-contaminated", dest="contaminated", action="store_const",
                   const="discard")
    g.add_argument("--abort-contaminated", dest="contaminated", action="store_const",
                   const="abort")
    common.add_argument("--width", type=int, help="lattice half-width m_max")
    common.add_argument("--height", type=int, help="lattice height n_max")
    common.add_argument("--fields", type=int, help="number of sampled fields")
    common.add_argument("--gamma-beta", dest="gamma_beta", type=float,
                        help="cone slope for Gamma(i) (default --beta)")
    common.add_argument("--suite", choices=SUITES + ("all",))
    common.add_argument("--cases", type=int)
    common.add_argument("--input", help="run directory to plot (default --out)")

    top = _Parser(prog="cpinterface", description=__doc__,
                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    top.valid_flags = sorted(o for a in common._actions for o in a.option_strings)
    return top


def resolve(ns: argparse.Namespace) -> dict:
    """Merge defaults, the --config file and explicit flags."""
    cfg = dict(DEFAULTS)
    given = vars(ns).copy()
    path = given.pop("config", None)
    given.pop("command", None)
    if path is not None:
        try:
            with open(path) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in from_file.items():
            key = k.lstrip("-").replace("-", "_")
            if key not in cfg:
                raise UsageError(f"unknown config key {k!r}; valid: {', '.join(sorted(cfg))}")
            if key in ("grid", "gamma", "kernel") and isinstance(v, (int, float, str)):
                v = _csv_floats(str(v))
            cfg[key] = tuple(v) if isinstance(v, list) else v
    cfg.update(given)
    return cfg


def config_hash(d: dict) -> str:
    blob = json.dumps({k: v for k, v in d.items() if k not in ("out", "threads")},
                      sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _announce(command: str, cfg: dict, out) -> dict:
    shown = {k: cfg[k] for k in RELEVANT[command]}
    print(f"# {command} config " + json.dumps(shown, sort_keys=True, default=list), file=out)
    print(f"# config hash {config_hash(shown)}", file=out)
    return shown


def _kernel(cfg: dict) -> Kernel:
    if cfg["kernel"] is not None:
        return Kernel.from_weights(cfg["lambda"], cfg["kernel"])
    return Kernel.uniform(cfg["lambda"], cfg["range"])


def _grid(cfg: dict) -> tuple:
    if cfg["grid"] is not None:
        return tuple(cfg["grid"])
    T = float(cfg["T"])
    return (T / 8, T / 4, T / 2, T)


def _need_out(cfg: dict, flag: str) -> Path:
    if cfg["out"] is None:
        raise UsageError(f"{flag} needs --out")
    return Path(cfg["out"])


def cmd_simulate(cfg: dict, out) -> int:
    grid = _grid(cfg)
    if cfg["load_events"] is not None:
        h = load_events(cfg["load_events"])
    else:
        k = _kernel(cfg)
        T = grid[-1]
        g = guard_width(k, T) if cfg["guard"] is None else cfg["guard"]
        h = sample_harris(k, Window(-g, g, T), cfg["seed"])
    s = interface_series(h, grid, gammas=cfg["gamma"] or ())
    text = s.to_csv()
    out.write(text)
    if cfg["out"] is not None:
        atomic_write(Path(cfg["out"]) / "interface.csv", text)
    if cfg["dump_events"]:
        atomic_write(_need_out(cfg, "--dump-events") / "events.txt", dumps_events(h))
    if s.any_contaminated:
        print("# warning: boundary-contaminated samples (widen --guard)", file=out)
    return EXIT_OK


def cmd_interface(cfg: dict, out) -> int:
    ec = ExperimentConfig(
        lam=cfg["lambda"], range=len(cfg["kernel"]) if cfg["kernel"] else cfg["range"],
        weights=cfg["kernel"], grid=_grid(cfg), replicas=cfg["replicas"],
        seed_base=cfg["seed"], guard=cfg["guard"], gammas=cfg["gamma"] or (),
        discard_contaminated=cfg["contaminated"] == "discard",
        threads=cfg["threads"] or os.cpu_count() or 1)
    print(f"# experiment hash {ec.hash()}", file=out)
    store = run_experiment(ec, cfg["out"])
    summ = store.summary()
    print(f"replicas {summ['replicas']} contaminated {summ['contaminated']} "
          f"used {summ['used']}", file=out)
    for row in summ["speed"]:
        if row["alpha"] is not None:
            print(f"T={row['T']:g} alpha={row['alpha']:.4f} "
                  f"[{row['ci_lo']:.4f}, {row['ci_hi']:.4f}] n={row['n']}", file=out)
    rho = np.abs(store.rho[store.kept])
    for j, t in enumerate(store.times.tolist()):
        q = np.quantile(rho[:, j], [0.5, 0.9, 0.99])
        print(f"t={t:g} |rho| quantiles 50/90/99: {q[0]:g} {q[1]:g} {q[2]:g}", file=out)
    return EXIT_OK


def cmd_blocks(cfg: dict, out) -> int:
    k = _kernel(cfg)
    params = BlockParams(cfg["K"], cfg["N"], cfg["beta"])
    lw = LambdaWindow(cfg["width"] if cfg["width"] is not None else 8, cfg["height"])
    n_fields = cfg["fields"] or 1
    fields = []
    base = Path(cfg["out"]) if cfg["out"] is not None else None
    for f in range(n_fields):
        bf = sample_block_field(k, params, lw, cfg["seed"] ^ f, cfg["guard"])
        fields.append(bf)
        if base is not None:
            atomic_write(base / f"blocks_{f}.csv", bf.to_csv())
    first = fields[0]
    for n in range(lw.n_max, -1, -1):
        row = "".join(".#"[v] if v >= 0 else " " for v in first.psi[n] * (first.phi[n] >= 0)
                      + (first.phi[n] < 0) * -1)
        print(f"n={n:2d} {row}", file=out)
    cont = sum(bf.contaminated for bf in fields)
    summary = {"fields": n_fields, "contaminated": cont,
               "open_fraction": float(np.mean([bf.perc_field().open.sum()
                                               / ((bf.phi >= 0).sum()) for bf in fields]))}
    try:
        rows = closure_estimate([bf.perc_field() for bf in fields], k=1, max_r=2)
        summary["closure"] = [r.as_dict() for r in rows]
        print("eps_hat(1) = %.4f  [%.4f, %.4f]" % (rows[0].eps_hat, rows[0].ci_lo,
                                                  rows[0].ci_hi), file=out)
    except ValueError as exc:
        print(f"# closure estimate skipped: {exc}", file=out)
    print(f"fields {n_fields} contaminated {cont}", file=out)
    if base is not None:
        atomic_write(base / "summary.json", dumps_json(summary))
    return EXIT_OK


def cmd_percolate(cfg: dict, out) -> int:
    height = cfg["height"]
    if cfg["i"] > height:
        raise UsageError(f"--i {cfg['i']} exceeds --height {height}")
    width = cfg["width"] if cfg["width"] is not None else height + 2
    beta = cfg["gamma_beta"] if cfg["gamma_beta"] is not None else cfg["beta"]
    n_fields = cfg["fields"] or 1000
    hits = 0
    for f in range(n_fields):
        fld = sample_field(cfg["p"], width, height, cfg["seed"] ^ f)
        hits += gamma_event(fld, beta, cfg["i"])
    lo, hi = wilson_interval(hits, n_fields)
    summary = {"fields": n_fields, "count": hits, "freq": hits / n_fields,
               "ci_lo": lo, "ci_hi": hi, "i": cfg["i"], "beta": beta, "p": cfg["p"]}
    print(f"Gamma({cfg['i']}) frequency {hits / n_fields:.4f} [{lo:.4f}, {hi:.4f}] "
          f"over {n_fields} fields", file=out)
    if cfg["out"] is not None:
        atomic_write(Path(cfg["out"]) / "summary.json", dumps_json(summary))
    return EXIT_OK


def cmd_verify(cfg: dict, out) -> int:
    names = SUITES if cfg["suite"] == "all" else (cfg["suite"],)
    results = {}
    for name in names:
        res = run_suite(name, cfg["cases"], seed=cfg["seed"])
        results[name] = res.as_dict()
        print(f"{name}: cases {res.cases} checks {res.checks} violations {res.violations}",
              file=out)
        for ex in res.examples:
            print(f"  failing case: {ex}", file=out)
    if cfg["out"] is not None:
        atomic_write(Path(cfg["out"]) / "verify.json", dumps_json(results))
    return EXIT_OK if all(r["violations"] == 0 for r in results.values()) else EXIT_VIOLATIONS


def cmd_plot(cfg: dict, out) -> int:
    src = cfg["input"] if cfg["input"] is not None else cfg["out"]
    if src is None:
        raise UsageError("plot needs --input or --out")
    try:
        with open(Path(src) / "summary.json") as fh:
            summary = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {src}/summary.json: {exc}")
    for path in summary_plots(summary, Path(cfg["out"] or src)):
        print(path, file=out)
    return EXIT_OK


HANDLERS = {"simulate": cmd_simulate, "interface": cmd_interface, "blocks": cmd_blocks,
            "percolate": cmd_percolate, "verify": cmd_verify, "plot": cmd_plot}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        ns, extra = parser.parse_known_args(argv)
        if extra:
            raise UsageError(f"unrecognized arguments: {' '.join(extra)}\n"
                             f"valid flags: {' '.join(parser.valid_flags)}")
        if ns.command is None:
            raise UsageError(f"missing subcommand; choose from {', '.join(COMMANDS)}")
        cfg = resolve(ns)
        _announce(ns.command, cfg, out)
        return HANDLERS[ns.command](cfg, out)
    except UsageError as exc:
        print(str(exc), file=err)
        return EXIT_USAGE
    except ContaminationError as exc:
        print(f"contamination: {exc}", file=err)
        return EXIT_CONTAMINATED
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
