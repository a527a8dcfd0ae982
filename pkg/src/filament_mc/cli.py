"""Command-line driver.

Subcommands:
  energy        run the ensemble; JSONL records + summary CSV
  gibbs         partition-function table over the configured beta ladder
  spectrum      Gibbs-weighted energy spectrum (q, E) as CSV
  interact      point-like two-filament interaction energies as CSV
  verify        run the property battery; --list shows the inventory
  sample-paths  emit raw sampled paths as JSONL

Common flags: --config PATH, --seed U64, --workers INT, --out PATH,
--format {jsonl|csv} (where a choice exists).  Worker default comes from
FILAMENT_MC_THREADS, then the CPU count.  Exit codes: 0 success, 1 failed
verify checks, 2 configuration errors, 3 numerical failures.

Config file format and the JSONL record schema are documented in the
config module.
"""

import argparse
import json
import sys

import numpy as np

from . import gibbs as gb
from . import io_jsonl as io
from ._backend import BACKEND
from .config import ConfigError, load_config
from .local_time import pointlike_interaction
from .paths import SeedSpec
from .verify import VerifyContext, check_names, run_checks

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _open_out(path):
    return open(path, "w") if path and path != "-" else sys.stdout


def _build_parser():
    p = argparse.ArgumentParser(
        prog="filament-mc",
        description="Monte Carlo ensemble for Brownian vortex filaments "
                    f"(kernel backend: {BACKEND})")
    p.add_argument("--config", help="TOML-style config file")
    p.add_argument("--seed", type=int, help="override run.master_seed")
    p.add_argument("--workers", type=int, help="override run.workers")
    p.add_argument("--out", help="output path (default stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("energy", help="per-sample energy records")
    sp.add_argument("--samples", type=int, help="override run.samples")
    sp.add_argument("--format", choices=["jsonl", "csv"], default="jsonl",
                    help="records as jsonl (default) or summary-only csv")
    sp.add_argument("--summary", help="also write the summary CSV to this path")

    sp = sub.add_parser("gibbs", help="partition function over the beta ladder")
    sp.add_argument("--records", help="reuse a JSONL record file instead of sampling")
    sp.add_argument("--betas", help="comma-separated beta ladder override")

    sp = sub.add_parser("spectrum", help="energy spectrum E(q)")
    sp.add_argument("--records", help="reuse a JSONL record file instead of sampling")
    sp.add_argument("--beta", type=float, help="override spectrum.beta")

    sp = sub.add_parser("interact", help="point-like two-filament interaction")
    sp.add_argument("--pairs", type=int, help="override interact.pairs")

    sp = sub.add_parser("verify", help="run the property battery")
    sp.add_argument("--list", action="store_true", help="print check inventory and exit")
    sp.add_argument("--only", help="comma-separated subset of checks")

    sp = sub.add_parser("sample-paths", help="emit sampled paths as JSONL")
    sp.add_argument("--samples", type=int, help="override run.samples")

    return p


def _config_from_args(args):
    overrides = {"run": {}}
    if args.seed is not None:
        overrides["run"]["master_seed"] = args.seed
    if args.workers is not None:
        overrides["run"]["workers"] = args.workers
    if getattr(args, "samples", None) is not None:
        overrides["run"]["samples"] = args.samples
    if getattr(args, "beta", None) is not None:
        overrides["spectrum"] = {"beta": args.beta}
    if getattr(args, "betas", None):
        overrides["gibbs"] = {"betas": [float(b) for b in args.betas.split(",")]}
    if getattr(args, "pairs", None) is not None:
        overrides["interact"] = {"pairs": args.pairs}
    return load_config(args.config, overrides)


def _records(cfg, args):
    path = getattr(args, "records", None)
    if path:
        return io.read_records(path)
    return gb.run_ensemble(cfg.ensemble_spec())


def cmd_energy(cfg, args):
    records = gb.run_ensemble(cfg.ensemble_spec())
    out = _open_out(args.out)
    try:
        if args.format == "jsonl":
            io.write_records(out, records)
        else:
            io.write_summary_csv(out, records)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.summary:
        with open(args.summary, "w") as f:
            io.write_summary_csv(f, records)
    elif args.format == "jsonl" and args.out and args.out != "-":
        io.write_summary_csv(sys.stdout, records)
    return EXIT_OK


def cmd_gibbs(cfg, args):
    records = _records(cfg, args)
    betas = cfg.raw["gibbs"]["betas"]
    field = cfg.raw["gibbs"]["energy"]
    ests = [gb.partition_function(records, float(b), field) for b in betas]
    out = _open_out(args.out)
    try:
        io.write_gibbs_csv(out, ests)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_spectrum(cfg, args):
    records = _records(cfg, args)
    kgrid = cfg.kgrid()
    beta = float(cfg.raw["spectrum"]["beta"])
    q, E, meta = gb.energy_spectrum(records, beta, kgrid)
    out = _open_out(args.out)
    try:
        io.write_spectrum_csv(out, q, E)
    finally:
        if out is not sys.stdout:
            out.close()
    if meta.unreliable:
        print(f"warning: ESS {meta.effective_sample_size:.1f} below threshold; "
              "spectrum flagged unreliable", file=sys.stderr)
    return EXIT_OK


def cmd_interact(cfg, args):
    import csv

    from .paths import sample_bm

    spec = cfg.ensemble_spec()
    icfg = cfg.raw["interact"]
    sep = float(icfg["separation"])
    eps = float(icfg["eps"]) or None
    mode = icfg["mode"]
    modes = ["tanaka_rosen", "direct_mollified"] if mode == "both" else [mode]
    out = _open_out(args.out)
    try:
        w = csv.writer(out)
        w.writerow(["pair_index", "mode", "term_coulomb", "term_delta",
                    "term_boundary", "total", "delta_tanaka_rosen",
                    "delta_mollified", "excluded_pairs"])
        for i in range(int(icfg["pairs"])):
            seed = SeedSpec(spec.master_seed, i)
            px = sample_bm(spec.grid, spec.x0, seed.rng(0))
            py = sample_bm(spec.grid, spec.x0 + np.array([sep, 0.0, 0.0]), seed.rng(1))
            for m in modes:
                rep = pointlike_interaction(px, py, mode=m, eps=eps)
                w.writerow([i, m, repr(rep.term_coulomb), repr(rep.term_delta),
                            repr(rep.term_boundary), repr(rep.total),
                            repr(rep.delta_tanaka_rosen), repr(rep.delta_mollified),
                            rep.excluded_pairs])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_verify(cfg, args):
    if args.list:
        for name in check_names():
            print(name)
        return EXIT_OK
    names = args.only.split(",") if args.only else None
    unknown = set(names or []) - set(check_names())
    if unknown:
        raise ConfigError(f"unknown checks: {sorted(unknown)}")
    ctx = VerifyContext(cfg, progress=lambda msg: print(f"# {msg}", file=sys.stderr))
    results = run_checks(ctx, names)
    out = _open_out(args.out)
    try:
        for r in results:
            out.write(r.line() + "\n")
        n_fail = sum(r.failed for r in results)
        n_skip = sum(r.status == "SKIP" for r in results)
        out.write(f"# {len(results) - n_fail - n_skip} passed, "
                  f"{n_fail} failed, {n_skip} skipped\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_CHECK_FAILED if any(r.failed for r in results) else EXIT_OK


def cmd_sample_paths(cfg, args):
    spec = cfg.ensemble_spec()
    out = _open_out(args.out)
    try:
        for i in range(spec.n_samples):
            path = gb.sample_path(spec, i)
            out.write(json.dumps({
                "sample_index": i,
                "process": path.process,
                "T": spec.grid.horizon,
                "points": path.points.tolist(),
            }) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


_COMMANDS = {
    "energy": cmd_energy,
    "gibbs": cmd_gibbs,
    "spectrum": cmd_spectrum,
    "interact": cmd_interact,
    "verify": cmd_verify,
    "sample-paths": cmd_sample_paths,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ValueError, ArithmeticError, gb.EnsembleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
