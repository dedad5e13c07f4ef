"""Command-line runner: ``drivengate <experiment> [options]``.

Each run writes a CSV (one row per sweep point) and a JSON manifest beside it.
The manifest holds the fully resolved config and can be passed back with
``--config`` to repeat the run.

Checkpoint dumps (``gate --checkpoints PATH``) are CSV text with columns
``schema_version, t_s`` followed by the observables in alphabetical order.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .experiments import (EXPERIMENTS, ExperimentConfig, manifest_path, run_experiment,
                          write_csv, write_manifest)

log = logging.getLogger("drivengate")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drivengate",
                                description="Driven geometric phase gate simulations.")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config or run manifest")
        s.add_argument("--seed", type=int, help="master seed for stochastic runs")
        s.add_argument("--nmax", type=int, help="Fock cutoff per mode")
        s.add_argument("--dt", type=float,
                       help="fixed integrator step in seconds (noise step for intensity-sweep)")
        s.add_argument("--out", help="CSV output path (manifest written beside it)")
        s.add_argument("--traj", type=int, help="trajectories per noise amplitude")
        s.add_argument("--gamma-convention", choices=("cyclic", "angular"),
                       help="reading of the quoted 43 MHz linewidth")
        s.add_argument("--method", choices=("exact", "rk4", "rk4ip"))
        s.add_argument("--workers", type=int, help="concurrent sweep points or batches")
        if name == "gate":
            s.add_argument("--detuning-thz", type=float,
                           help="Raman detuning / 2 pi in THz; enables spontaneous emission")
            s.add_argument("--checkpoints", help="CSV path for a checkpoint dump")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != args.experiment:
            cfg = ExperimentConfig.from_json({**cfg.to_json(), "experiment": args.experiment})
    else:
        cfg = ExperimentConfig.defaults(args.experiment)
    over = {}
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.nmax is not None:
        over["n_max"] = args.nmax
    if args.dt is not None:
        over["noise_dt_s" if args.experiment == "intensity-sweep" else "dt"] = args.dt
    if args.traj is not None:
        over["n_trajectories"] = args.traj
    if args.method is not None:
        over["method"] = args.method
    if args.workers is not None:
        over["workers"] = args.workers
    if getattr(args, "detuning_thz", None) is not None:
        over["detuning"] = 2 * 3.141592653589793 * args.detuning_thz * 1e12
        over["dissipation"] = True
    if args.out is not None:
        over["out"] = args.out
    cfg = replace(cfg, **over)
    if args.gamma_convention:
        cfg = cfg.with_gamma_convention(args.gamma_convention)
    return cfg


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = resolve_config(args)
    out = cfg.out or f"{cfg.experiment}.csv"
    kw = {}
    if cfg.experiment == "gate" and getattr(args, "checkpoints", None):
        kw["checkpoint_path"] = args.checkpoints
    log.info("running %s at n_max=%d", cfg.experiment, cfg.n_max)
    records = run_experiment(cfg, **kw)
    write_csv(out, records)
    write_manifest(manifest_path(out), cfg, records, argv)
    for r in records:
        sem = "" if r.sem is None else f" +- {r.sem:.3g}"
        print(f"{r.variable}={r.value:.6g}  epsilon={r.epsilon:.6g}{sem}  [{r.status}]")
    print(f"wrote {out} and {manifest_path(out)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
