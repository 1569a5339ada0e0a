"""Command-line front end.

Subcommands: analytic (closed-form curves to CSV), simulate (Monte Carlo
estimates alongside the closed forms), figure (run a stock preset end to
end), compare (deviation report over a result CSV), presets (list the stock
experiments). Exit codes: 0 success, 1 validation or usage error, 2 numeric
failure, 3 comparison failure.

Physical parameters always come from the JSON config document; command-line
overrides touch only simulation controls (trials, seed, dt, horizon, window).
The NMDETECT_THREADS environment variable caps the simulator's thread count.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, harness
from .model import ConfigError, SystemConfig, load_config
from .numerics import ConvergenceError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_COMPARISON = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems are validation errors (exit 1), not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


_QUANTITY_CHOICES = (
    "auto",
    "p_detect",
    "p_detect_deg",
    "p_single",
    "mean_detectors",
    "p_sense_within",
    "p_sense_at",
)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="nmdetect",
        description=__doc__.split("\n\n")[0],
        epilog="Environment: NMDETECT_THREADS caps simulator threads.",
    )
    parser.add_argument("--version", action="version", version=f"nmdetect {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add_overrides(p: argparse.ArgumentParser) -> None:
        p.add_argument("--trials", type=int, help="override trial count")
        p.add_argument("--seed", type=int, help="override master seed")
        p.add_argument("--dt", type=float, help="override time step (s)")
        p.add_argument(
            "--horizon",
            type=float,
            help="override horizon (s); grid points beyond it are dropped",
        )
        p.add_argument("--window", type=float, help="override window radius (um)")

    p_analytic = sub.add_parser("analytic", help="evaluate closed-form curves to CSV")
    p_analytic.add_argument("--config", required=True, help="JSON config document")
    p_analytic.add_argument("--out", required=True, help="output CSV path")
    p_analytic.add_argument(
        "--quantity", choices=_QUANTITY_CHOICES, default="auto",
        help="curve to evaluate; auto picks from the config",
    )
    add_overrides(p_analytic)

    p_sim = sub.add_parser("simulate", help="Monte Carlo estimates to CSV")
    p_sim.add_argument("--config", required=True, help="JSON config document")
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.add_argument(
        "--quantity", choices=_QUANTITY_CHOICES, default="auto",
        help="curve to estimate; auto picks from the config",
    )
    add_overrides(p_sim)

    p_fig = sub.add_parser("figure", help="run a stock preset end to end")
    p_fig.add_argument("id", help="preset id, e.g. fig2 (see `nmdetect presets`)")
    p_fig.add_argument("--out", help="output CSV path (default <id>.csv)")
    p_fig.add_argument(
        "--render", action="store_true",
        help="also render the figure image next to the CSV (needs the plots package)",
    )
    add_overrides(p_fig)

    p_cmp = sub.add_parser("compare", help="deviation report over a result CSV")
    p_cmp.add_argument("csv", help="result CSV produced by this tool")
    p_cmp.add_argument(
        "--tolerance", type=float, default=0.02,
        help="max allowed |reference - mc| (default 0.02)",
    )

    sub.add_parser("presets", help="list the stock experiments")
    return parser


def _apply_overrides(sim, args):
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.dt is not None:
        changes["time_step"] = args.dt
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.window is not None:
        changes["window_radius"] = args.window
    sim = replace(sim, **changes)
    if args.horizon is not None:
        grid = tuple(t for t in sim.t_grid if t <= sim.horizon)
        sim = replace(sim, t_grid=grid or (sim.horizon,))
    return sim


def _auto_quantity(config: SystemConfig) -> str:
    if config.single_nm_distance is not None:
        return "p_single"
    if config.marker is not None:
        from .analytic import sensing_radius

        reach = sensing_radius(config.marker)
        fits = all(c.radius + reach <= config.exclusion_radius for c in config.classes)
        return "p_sense_within" if fits else "p_sense_at"
    if config.target.degradation_rate > 0:
        return "p_detect_deg"
    return "p_detect"


def _cmd_curve(args, mc: bool) -> int:
    system, sim = load_config(args.config)
    sim = _apply_overrides(sim, args)
    quantity = args.quantity if args.quantity != "auto" else _auto_quantity(system)
    spec = harness.ExperimentSpec(
        id=quantity,
        config=system,
        sim=sim,
        curves=(
            harness.CurveSpec(label=quantity, quantity=quantity, config=system, mc=mc),
        ),
    )
    harness.run_experiment(spec, out_path=args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _find_preset(preset_id: str) -> harness.ExperimentSpec:
    for spec in harness.figure_presets():
        if spec.id == preset_id:
            return spec
    known = ", ".join(s.id for s in harness.figure_presets())
    raise ConfigError([f"unknown preset {preset_id!r}; known presets: {known}"])


def _cmd_figure(args) -> int:
    spec = _find_preset(args.id)
    sim = _apply_overrides(spec.sim, args)
    curves = tuple(
        c if c.sim is None else replace(c, sim=_apply_overrides(c.sim, args))
        for c in spec.curves
    )
    spec = replace(spec, sim=sim, curves=curves)
    out = args.out or f"{spec.id}.csv"
    harness.run_experiment(spec, out_path=out)
    print(f"wrote {out}")
    if args.render:
        try:
            from nmplots import render_auto
        except ImportError:
            print(
                "figure rendering needs the plots package (pip install ./plots)",
                file=sys.stderr,
            )
            return EXIT_VALIDATION
        image = render_auto(out, Path(out).parent)
        print(f"wrote {image}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    table = harness.read_table(args.csv)
    report = harness.compare(table, args.tolerance)
    print(report)
    return EXIT_OK if report.passed else EXIT_COMPARISON


def _cmd_presets() -> int:
    for spec in harness.figure_presets():
        labels = ", ".join(c.label for c in spec.curves)
        axis = spec.sweep[0] if spec.sweep else "t"
        print(f"{spec.id}: axis={axis} trials={spec.sim.trials} curves: {labels}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_VALIDATION
    try:
        if args.command == "analytic":
            return _cmd_curve(args, mc=False)
        if args.command == "simulate":
            return _cmd_curve(args, mc=True)
        if args.command == "figure":
            return _cmd_figure(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "presets":
            return _cmd_presets()
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(
            f"error: quadrature did not converge (estimate {exc.estimate!r}, "
            f"bound {exc.error_bound!r})",
            file=sys.stderr,
        )
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
