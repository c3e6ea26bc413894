"""Command-line driver.

Subcommands:
  analyze    single-point analytical coverage report
  simulate   single-point Monte Carlo estimate for one protocol
  sweep      run a sweep specification file (CSV + figure)
  iso        iso-coverage density contour (CSV + figure)

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .analysis import coverage_hrs
from .config import (
    Config,
    ConfigError,
    apply_parameter,
    default_config,
    load_config,
)
from .experiments import (
    BracketError,
    ExperimentSpec,
    IsoRow,
    analytical_coverage,
    load_experiment_spec,
    run_experiment,
    write_iso_csv,
    iso_coverage_search,
)
from .numerics import QuadratureError, QuadratureSpec
from .simulation import Protocol, monte_carlo_coverage

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="parameter file (default: packaged baseline)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="override a sweepable parameter, e.g. rate.y_th_bps=5e8")
    parser.add_argument("--tol", type=float, default=None,
                        help="quadrature tolerance (sets both absolute and relative)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridrelay",
        description="Coverage analysis and simulation of hybrid RF/THz relay selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="single-point analytical coverage")
    _add_common(p_an)

    p_sim = sub.add_parser("simulate", help="single-point Monte Carlo estimate")
    _add_common(p_sim)
    p_sim.add_argument("--protocol", default="HRS",
                       help="one of: " + ", ".join(p.value for p in Protocol))
    p_sim.add_argument("--trials", type=int, default=100_000)
    p_sim.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="run a sweep specification file")
    p_sweep.add_argument("spec", type=Path, help="sweep specification file")
    p_sweep.add_argument("--out", type=Path, default=None, help="output CSV path")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--tol", type=float, default=None)
    p_sweep.add_argument("--no-figure", action="store_true",
                         help="skip the PNG next to the CSV")

    p_iso = sub.add_parser("iso", help="iso-coverage density contour")
    _add_common(p_iso)
    p_iso.add_argument("--target", type=float, required=True,
                       help="coverage level of the contour, in (0, 1)")
    p_iso.add_argument("--thz-densities", required=True,
                       help="comma-separated THz density grid (1/m^2)")
    p_iso.add_argument("--rf-lo", type=float, default=1e-6,
                       help="lower RF-density bracket end")
    p_iso.add_argument("--rf-hi", type=float, default=1e-2,
                       help="upper RF-density bracket end")
    p_iso.add_argument("--out", type=Path, default=Path("iso_coverage.csv"))
    p_iso.add_argument("--no-figure", action="store_true")
    return parser


def _load_base(args: argparse.Namespace) -> Config:
    cfg = load_config(args.config) if args.config else default_config()
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        try:
            cfg = apply_parameter(cfg, key.strip(), float(value))
        except ValueError as exc:
            raise ConfigError(f"--set {item!r}: {exc}") from exc
    return cfg


def _quad(args: argparse.Namespace) -> QuadratureSpec | None:
    if getattr(args, "tol", None) is None:
        return None
    return QuadratureSpec(abs_tol=args.tol, rel_tol=args.tol)


def _cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _load_base(args)
    ctx = cfg.context(_quad(args))
    est = coverage_hrs(ctx)
    print(f"target rate:        {cfg.y_th_bps:.6g} bit/s")
    print(f"thresholds:         tau_rf={ctx.tau_rf:.6g}  tau_thz={ctx.tau_thz:.6g}")
    print(f"coverage (HRS):     {est.value:.6f}")
    print(f"  rf relay term:    {est.rf_term:.6f}")
    print(f"  thz relay term:   {est.thz_term:.6f}")
    for protocol in (Protocol.RF_ONLY, Protocol.THZ_ONLY,
                     Protocol.DIRECT_RF, Protocol.DIRECT_THZ):
        value = analytical_coverage(ctx, protocol)
        print(f"coverage ({protocol.value}): {value:.6f}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_base(args)
    protocol = Protocol.parse(args.protocol)
    ctx = cfg.context(_quad(args))
    est = monte_carlo_coverage(ctx, protocol, args.trials, args.seed)
    print(
        f"coverage ({protocol.value}): {est.value:.6f} "
        f"+/- {est.half_width:.6f} (95% CI, {est.trials} trials, seed {args.seed})"
    )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_experiment_spec(
        args.spec,
        out=args.out,
        seed=args.seed,
        trials=args.trials,
        quad=_quad(args),
        figure=not args.no_figure,
    )
    rows = run_experiment(spec)
    print(f"wrote {len(rows)} rows to {spec.output_path}")
    if spec.figure:
        print(f"wrote figure to {spec.output_path.with_suffix('.png')}")
    return EXIT_OK


def _cmd_iso(args: argparse.Namespace) -> int:
    cfg = _load_base(args)
    densities = sorted(float(tok) for tok in args.thz_densities.split(",") if tok.strip())
    if not densities:
        raise ConfigError("--thz-densities must list at least one density")
    quad = _quad(args)
    rows = []
    for value in densities:
        started = time.perf_counter()
        density_rf = iso_coverage_search(
            cfg, args.target, value, (args.rf_lo, args.rf_hi), quad
        )
        point = apply_parameter(cfg, "geometry.density_thz_per_m2", value)
        point = apply_parameter(point, "geometry.density_rf_per_m2", density_rf)
        achieved = coverage_hrs(point.context(quad)).value
        rows.append(IsoRow(value, density_rf, achieved, args.target,
                           time.perf_counter() - started))
        print(f"thz={value:.6g}  rf={density_rf:.6g}  coverage={achieved:.4f}")
    spec = ExperimentSpec(
        kind="iso_coverage",
        parameter="geometry.density_thz_per_m2",
        values=tuple(densities),
        protocols=(Protocol.HRS,),
        base=cfg,
        trials=1,
        master_seed=0,
        output_path=args.out,
        quad=quad or QuadratureSpec(),
        iso_target=args.target,
        iso_bracket=(args.rf_lo, args.rf_hi),
        figure=not args.no_figure,
    )
    write_iso_csv(args.out, rows, spec)
    print(f"wrote {len(rows)} rows to {args.out}")
    if spec.figure:
        from .plotting import save_iso_figure

        save_iso_figure(rows, spec, Path(args.out).with_suffix(".png"))
        print(f"wrote figure to {Path(args.out).with_suffix('.png')}")
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "iso": _cmd_iso,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, BracketError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


def console_main() -> None:
    raise SystemExit(main())
