"""Command-line front end.

    birthgrowth run --config FILE [--seed N] [--threads N] [--out DIR] [--dry-run]
    birthgrowth verify

Command-line flags take precedence over the matching config keys
(``--seed`` over ``[campaign] seed``, ``--out`` over ``[output] directory``).
"""

import argparse
import dataclasses
import json
import math
import os
import sys
from datetime import datetime, timezone

from . import __version__, analytic, mc, sampler, verify
from .config import ConfigError, config_hash, parse_config, serialize
from .rng import check_seed

TABLE_HEADER = "scale,replication,F"


def _fmt(x):
    return format(float(x), ".17g")


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def analytic_summary(spec):
    lower = analytic.var_lower_bound(spec)
    return {
        "mean_F": analytic.mean_F(spec),
        "var_lower_bound": lower,
        "var_lower_vacuous": not lower > 0,
        "var_upper_bound": analytic.var_upper_bound(spec),
        "region_mass": sampler.region_mass(spec),
    }


def write_table(path, result):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TABLE_HEADER + "\n")
        for p in result.points:
            scale = _fmt(p.scale)
            for r, f in enumerate(p.samples):
                fh.write(f"{scale},{r},{int(f)}\n")


def build_summary(experiment, result):
    points = []
    for p in result.points:
        entry = {
            "scale": p.scale,
            "replications": int(len(p.samples)),
            "sample_mean": p.mean,
            "sample_variance": p.variance,
            "mean_z": p.mean_z,
            "d_K": p.d_K,
            "d_K_bootstrap_se": p.d_K_se,
            "d_W": p.d_W,
            "degenerate": p.degenerate,
            "analytic": {
                "mean_F": p.analytic_mean,
                "var_lower_bound": p.var_lower,
                "var_upper_bound": p.var_upper,
                "region_mass": sampler.region_mass(p.spec),
            },
        }
        if not p.degenerate:
            rep = mc.variance_bracket_check(p)
            entry["variance_bracket"] = {
                "ci99": [rep.ci_low, rep.ci_high],
                "lower_vacuous": rep.lower_vacuous,
                "intersects": rep.intersects,
                "variance_ratio": rep.variance_ratio,
                "low_n_caveat": rep.low_n_caveat,
            }
            entry["lattice_floor_holds"] = mc.lattice_floor_holds(p)
        points.append(entry)
    fits = {}
    for name, fit in (("d_K", result.d_K_fit), ("d_W", result.d_W_fit)):
        if fit is not None:
            fits[name] = fit._asdict()
    if result.d_K_fit is not None:
        fits["d_K"]["bootstrap_se"] = result.d_K_exponent_se
        fits["target_exponent"] = result.target_exponent
    summary = {
        "provenance": {
            "version": __version__,
            "master_seed": experiment.campaign.seed,
            "config_sha256": config_hash(experiment),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        },
        "config": serialize(experiment),
        "points": points,
        "rate_fits": fits,
    }
    return _scrub(summary)


def _scrub(obj):
    if isinstance(obj, dict):
        return {k: _scrub(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_scrub(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    return _clean(obj)


def cmd_run(experiment, threads=None, dry_run=False, stdout=None):
    stdout = stdout or sys.stdout
    if dry_run:
        for scale, spec in experiment.campaign.scale_points():
            info = analytic_summary(spec)
            print(f"scale {_fmt(scale)}", file=stdout)
            for key, value in info.items():
                print(f"  {key}: {value if isinstance(value, bool) else _fmt(value)}", file=stdout)
        return 0

    out_dir = experiment.directory
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out_dir}: {exc}", file=sys.stderr)
        return 2
    result = mc.run_campaign(experiment.campaign, threads=threads or os.cpu_count() or 1)
    write_table(os.path.join(out_dir, experiment.table), result)
    with open(os.path.join(out_dir, experiment.summary), "w", encoding="utf-8") as fh:
        json.dump(build_summary(experiment, result), fh, indent=2)
        fh.write("\n")
    for p in result.points:
        print(
            f"scale {_fmt(p.scale)}: mean {p.mean:.6g} (analytic {p.analytic_mean:.6g}), "
            f"var {p.variance:.6g} in [{p.var_lower:.6g}, {p.var_upper:.6g}], d_K {p.d_K:.4g}",
            file=stdout,
        )
    if result.d_K_fit is not None:
        print(f"d_K rate exponent {result.d_K_fit.exponent:.4f} (target {result.target_exponent:.4f})", file=stdout)
    return 0


def cmd_verify(stdout=None):
    stdout = stdout or sys.stdout
    results = verify.run_checks()
    for check in results:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}", file=stdout)
    return 0 if all(c.passed for c in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="birthgrowth", description="Monte Carlo campaigns for the number of exposed seeds in a birth-growth model."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a Monte Carlo campaign")
    run.add_argument("--config", required=True, help="experiment file")
    run.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    run.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--dry-run", action="store_true", help="print analytic values only")
    sub.add_parser("verify", help="run the built-in self-checks")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        return cmd_verify()
    try:
        experiment = parse_config(args.config)
        if args.seed is not None:
            campaign = dataclasses.replace(experiment.campaign, seed=check_seed(args.seed))
            experiment = dataclasses.replace(experiment, campaign=campaign)
        if args.out is not None:
            experiment = dataclasses.replace(experiment, directory=args.out)
    except (ConfigError, ValueError) as exc:
        print(f"error: invalid configuration:\n{exc}", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return cmd_run(experiment, threads=args.threads, dry_run=args.dry_run)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
