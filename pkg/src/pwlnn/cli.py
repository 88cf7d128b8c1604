"""Command-line front end.

Exit codes: 0 success, 1 config error, 2 simulation divergence, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, emit_config, load_config
from .controller import check_gain_conditions, theoretical_bounds
from .scenarios import builtin_matrix, run_matrix
from .sim import SimConfig, SimulationDiverged, metrics, run

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("pwlnn")

PLOT_TEMPLATE = '''\
"""Plot the matrix CSVs written by `pwlnn matrix`. Usage: python plot_matrix.py OUT_DIR"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
for ref in ("sinusoid", "rectangular"):
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
    for variant in ("baseline-no-pwl", "pwl-uncompensated", "pwl-pi-only", "pwl-nn-compensated"):
        path = out / f"{variant}-{ref}.csv"
        if not path.exists():
            continue
        df = pd.read_csv(path)
        axes[0].plot(df.t, df.omega, label=variant)
        axes[1].plot(df.t, df.e, label=variant)
        axes[2].plot(df.t, df["T"], label=variant)
    axes[0].plot(df.t, df.thetadot_d, "k--", label="reference")
    axes[0].set_ylabel("velocity [rad/s]")
    axes[1].set_ylabel("tracking error [rad/s]")
    axes[2].set_ylabel("actuator output T")
    axes[2].set_xlabel("t [s]")
    axes[0].legend(fontsize="small")
    fig.suptitle(ref)
    fig.tight_layout()
    fig.savefig(out / f"{ref}.png", dpi=120)
plt.show()
'''


def _apply_overrides(config: SimConfig, args) -> SimConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.duration is not None:
        changes["duration"] = args.duration
    if not changes:
        return config
    try:
        return replace(config, **changes)
    except ValueError as exc:
        raise ConfigError(f"invalid override: {exc}") from None


def _load(args) -> SimConfig:
    path = getattr(args, "config", None)
    config = load_config(path) if path else SimConfig()
    return _apply_overrides(config, args)


def _print_bounds(config: SimConfig, out=None) -> None:
    out = out or sys.stdout
    T_bound, Z_bound = theoretical_bounds(config.gains, config.bounds, config.tuning, config.hidden)
    print(f"T_tilde_bound = {T_bound:.17g}", file=out)
    print(f"Z_tilde_bound = {Z_bound:.17g}", file=out)
    for problem in check_gain_conditions(config.gains, config.bounds, config.hidden):
        print(f"warning: {problem}", file=out)


def cmd_run(args) -> int:
    config = _load(args)
    config.validate()
    out = Path(args.out) if args.out else Path(Path(args.config).stem + ".csv")
    progress = None if args.quiet else (lambda k, n: log.info("step %d/%d", k, n))
    ts = run(config, progress=progress)
    ts.write_csv(out)
    if args.weights:
        Path(args.weights).write_text(ts.final_weights.to_csv())
    m = metrics(ts, config.settle_fraction)
    for key, value in m.as_dict().items():
        print(f"{key} = {value:.17g}")
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_matrix(args) -> int:
    base = _load(args)
    base.validate()
    matrix = builtin_matrix(base)
    log.info("running %d scenarios into %s", len(matrix), args.out)
    result = run_matrix(matrix, args.out, jobs=args.jobs)
    width = max(len(r["label"]) for r in result.rows)
    print(f"{'label':<{width}}  {'status':<8}  {'rms_e':>12}  {'max_e':>12}  {'rms_T_tilde':>12}")
    for row in result.rows:
        if row["status"] == "diverged":
            print(f"{row['label']:<{width}}  {row['status']:<8}")
            continue
        print(
            f"{row['label']:<{width}}  {row['status']:<8}  {row['rms_e']:12.6g}  "
            f"{row['max_e']:12.6g}  {row['rms_T_tilde']:12.6g}"
        )
    if args.bounds:
        _print_bounds(base)
    return result.exit_code


def cmd_bounds(args) -> int:
    _print_bounds(_load(args))
    return EXIT_OK


def cmd_config(args) -> int:
    sys.stdout.write(emit_config(_load(args)))
    return EXIT_OK


def cmd_plot_script(args) -> int:
    if args.out:
        Path(args.out).write_text(PLOT_TEMPLATE)
    else:
        sys.stdout.write(PLOT_TEMPLATE)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--dt", type=float, help="override sim.dt [s]")
    common.add_argument("--duration", type=float, help="override sim.duration [s]")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="pwlnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate one config and write its time series")
    p.add_argument("config")
    p.add_argument("--out", help="CSV path (default: <config stem>.csv)")
    p.add_argument("--weights", help="also write the final weight snapshot to this CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("matrix", parents=[common], help="run the built-in scenario matrix")
    p.add_argument("--config", help="base config the matrix variants are derived from")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--bounds", action="store_true", help="also print the theoretical bounds")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("bounds", parents=[common], help="print the ultimate bounds for a config")
    p.add_argument("config")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("config", parents=[common], help="print a fully populated config")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("plot-script", help="emit a matplotlib script for the matrix CSVs")
    p.add_argument("--out", help="write the script here instead of stdout")
    p.set_defaults(func=cmd_plot_script, quiet=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
