"""Command-line front end.

Exit codes: 0 success, 1 configuration problem, 2 divergence abort.
"""

import argparse
import sys

from .config import fig1_configs, load_config
from .errors import ConfigError, DivergenceError, SignalCorruptionError
from .report import export_comparison, export_csv, export_plot
from .simulate import compare, run_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dfcl",
        description=(
            "Closed-loop adaptive control with a directional-forgetting "
            "concurrent-learning estimator: run scenarios, compare memory "
            "policies, export CSV traces and figures."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario config")
    run_p.add_argument("--config", required=True, help="scenario TOML file")
    run_p.add_argument("--out", required=True, help="CSV output path")
    run_p.add_argument("--plot", help="optional SVG/PNG figure path")
    run_p.add_argument("--diagnostics", action="store_true",
                       help="append per-step verification columns")

    cmp_p = sub.add_parser("compare", help="run several configs on one scenario")
    cmp_p.add_argument("--configs", required=True, nargs="+",
                       help="scenario TOML files differing only in [estimator]")
    cmp_p.add_argument("--out", required=True, help="output directory")

    fig_p = sub.add_parser("paper-fig1",
                           help="benchmark comparison of the three memory policies")
    fig_p.add_argument("--out", required=True, help="output directory")
    fig_p.add_argument("--horizon", type=int, default=1000)
    return parser


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.diagnostics and not cfg.simulation.diagnostics:
        from dataclasses import replace

        cfg = replace(cfg, simulation=replace(cfg.simulation, diagnostics=True))
    result = run_scenario(cfg)
    export_csv(result, args.out)
    if args.plot:
        export_plot(result, args.plot)
    print(f"wrote {args.out} ({result.horizon} steps)")
    if result.k_e is not None:
        print(f"memory reached full rank at step {result.k_e}")
    print(f"final |e| = {result.final_abs_e:.3e}, "
          f"final parameter error = {result.final_theta_err:.3e}, "
          f"clamp activations = {result.clamp_count}")
    return 0


def _print_summary(summary):
    windows = " ".join(f"rmse[{lo},{hi})" for lo, hi in summary.windows)
    print(f"{'label':<16} {windows}  max|e|      k_e   clamps  diverged")
    for row in summary.ranked():
        rmses = " ".join(f"{v:<12.4e}" for v in row.rmse)
        k_e = "-" if row.k_e is None else str(row.k_e)
        div = "-" if row.diverged_at is None else str(row.diverged_at)
        print(f"{row.label:<16} {rmses} {row.max_abs_e:<10.4e} {k_e:<5} "
              f"{row.clamp_count:<7} {div}")


def _cmd_compare(args):
    configs = [load_config(path) for path in args.configs]
    summary, results = compare(configs)
    paths = export_comparison(summary, results, args.out)
    _print_summary(summary)
    print("wrote " + ", ".join(paths))
    return 0


def _cmd_fig1(args):
    configs = fig1_configs(horizon=args.horizon)
    summary, results = compare(configs)
    paths = export_comparison(summary, results, args.out)
    _print_summary(summary)
    print("wrote " + ", ".join(paths))
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "run": _cmd_run,
        "compare": _cmd_compare,
        "paper-fig1": _cmd_fig1,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SignalCorruptionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
