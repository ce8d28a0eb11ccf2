"""Command line: ``attitrack run | certify | sweep``.

Exit codes: 0 success, 1 certification failure, 2 singularity abort,
3 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import contraction
from .sim import (
    SimulationAbort,
    builtin_scenario,
    compute_metrics,
    load_config,
    output_dir,
    read_log_csv,
    run_scenario,
    save_config,
    write_log_csv,
    write_metrics,
)

EXIT_OK, EXIT_CERT, EXIT_ABORT, EXIT_INPUT = 0, 1, 2, 3


def _base_config(args):
    if args.config:
        config = load_config(args.config)
    else:
        config = builtin_scenario(args.scenario or 1)
    if getattr(args, "seed", None) is not None:
        config = config.replace(seed=args.seed)
    if getattr(args, "duration", None) is not None:
        config = config.replace(duration=args.duration)
    return config


def _certify(log, config, run_dir, fd_samples):
    reports = contraction.certify_trajectory(log, config, fd_samples=fd_samples)
    contraction.write_certificates_csv(reports, os.path.join(run_dir, "certificates.csv"))
    summary = contraction.summarize(reports)
    write_metrics(summary, os.path.join(run_dir, "certificates_summary.json"))
    return summary


def _print_metrics(m):
    ct = m["convergence_time"]
    print(f"effort {m['effort']:.6g}  switches {m['switch_count']}  "
          f"final pointing {m['final_pointing_angle']:.3g} rad")
    print("band entry [s]: " + ", ".join(f"{k} {v}" for k, v in ct.items()))


def cmd_run(args):
    config = _base_config(args)
    if args.certify:
        config = config.replace(certify=True)
    run_dir = os.path.join(output_dir(args.out), config.name)
    os.makedirs(run_dir, exist_ok=True)
    save_config(config, os.path.join(run_dir, "config.json"))
    try:
        log = run_scenario(config)
    except SimulationAbort as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    write_log_csv(log, os.path.join(run_dir, "trajectory.csv"))
    metrics = compute_metrics(log)
    write_metrics(metrics, os.path.join(run_dir, "metrics.json"))
    print(f"wrote {run_dir}")
    _print_metrics(metrics)
    if config.certify:
        summary = _certify(log, config, run_dir, args.fd_samples)
        print(f"certificates: {summary['samples'] - summary['failures']}/{summary['samples']} passed")
        if not summary["passed"]:
            return EXIT_CERT
    return EXIT_OK


def cmd_certify(args):
    if args.run_dir:
        run_dir = args.run_dir
        config = load_config(os.path.join(run_dir, "config.json"))
        log = read_log_csv(os.path.join(run_dir, "trajectory.csv"), config)
    else:
        config = _base_config(args)
        run_dir = os.path.join(output_dir(args.out), config.name)
        os.makedirs(run_dir, exist_ok=True)
        try:
            log = run_scenario(config)
        except SimulationAbort as exc:
            print(f"abort: {exc}", file=sys.stderr)
            return EXIT_ABORT
    summary = _certify(log, config, run_dir, args.fd_samples)
    print(json.dumps(summary, indent=2))
    return EXIT_OK if summary["passed"] else EXIT_CERT


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _sweep_one(job):
    config, key, value = job
    try:
        m = compute_metrics(run_scenario(config))
    except SimulationAbort as exc:
        return {key: json.dumps(value), "status": f"abort: {exc}"}
    row = {key: json.dumps(value), "status": "ok"}
    for k, v in m.items():
        if k == "convergence_time":
            row.update({f"t_{band}": t for band, t in v.items()})
        elif k not in ("switches", "bands"):
            row[k] = v
    return row


def cmd_sweep(args):
    base = _base_config(args)
    values = [_parse_value(v) for v in args.values]
    jobs = []
    for v in values:
        try:
            jobs.append((base.replace(**{args.key: v}), args.key, v))
        except (TypeError, ValueError) as exc:
            print(f"bad value {v!r} for {args.key}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    out = output_dir(args.out)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"sweep_{args.key}.csv")
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {path}")
    return EXIT_ABORT if any(r["status"] != "ok" for r in rows) else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="attitrack", description="Attitude tracking simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--scenario", type=int, choices=(1, 2, 3), help="built-in scenario")
        g.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="override the noise seed")
        sp.add_argument("--duration", type=float, help="override the run duration [s]")
        sp.add_argument("--out", help="output directory (default: $ATTITRACK_OUT_DIR or ./runs)")

    r = sub.add_parser("run", help="simulate one scenario")
    scenario_args(r)
    r.add_argument("--certify", action="store_true", help="also compute contraction certificates")
    r.add_argument("--fd-samples", type=int, default=50, help="samples given finite-difference checks")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="contraction certificates for a run")
    scenario_args(c)
    c.add_argument("--run-dir", help="directory written by 'run' (config.json, trajectory.csv)")
    c.add_argument("--fd-samples", type=int, default=50)
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("sweep", help="vary one config key")
    scenario_args(s)
    s.add_argument("--key", required=True, help="config key to vary")
    s.add_argument("--values", required=True, nargs="+", help="values (parsed as JSON when possible)")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
