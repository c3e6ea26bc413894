"""Experiment driver: declarative sweeps, iso-coverage search, CSV emission.

A sweep specification file is the flat key/value format from
:mod:`hybridrelay.config` carrying a full base configuration plus:

  sweep.kind       rate_sweep | distance_sweep | power_sweep | iso_coverage
                   | single_point
  sweep.parameter  dotted path of the swept value (see SWEEPABLE_PARAMETERS)
  sweep.values     comma-separated grid, ascending
  sweep.protocols  comma-separated protocol names (relayed sweeps only)
  sweep.trials     Monte Carlo trials per grid point
  sweep.seed       master seed
  sweep.output     CSV destination (CLI --out overrides)

and, for iso_coverage only:

  iso.target         coverage level of the contour
  iso.lambda_rf_lo / iso.lambda_rf_hi   RF-density bisection bracket

Outputs are UTF-8, LF-terminated CSV with ``# ``-prefixed metadata lines
echoing every parameter, the seed and the package version, so each file can
reproduce itself.  Apart from the ``# generated:`` timestamp line and the
measured wall-time column, reruns of the same spec are byte-identical.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    AnalysisContext,
    coverage_direct,
    coverage_hrs,
    coverage_single_band,
)
from .channel import Band
from .config import (
    Config,
    ConfigError,
    SWEEPABLE_PARAMETERS,
    apply_parameter,
    config_from_entries,
    parse_kv_text,
)
from .numerics import QuadratureError, QuadratureSpec
from .simulation import Protocol, monte_carlo_coverage

__all__ = [
    "BracketError",
    "ExperimentSpec",
    "ResultRow",
    "IsoRow",
    "load_experiment_spec",
    "run_experiment",
    "iso_coverage_search",
    "write_result_csv",
    "read_result_csv",
    "write_iso_csv",
]

SWEEP_KINDS = ("rate_sweep", "distance_sweep", "power_sweep", "iso_coverage", "single_point")

_KIND_PARAMETERS = {
    "rate_sweep": ("rate.y_th_bps",),
    "distance_sweep": ("geometry.r_sd_m",),
    "power_sweep": ("rf.tx_power_w", "thz.tx_power_w", "tx_power_w"),
    "iso_coverage": ("geometry.density_thz_per_m2",),
    "single_point": ("rate.y_th_bps",),
}


class BracketError(RuntimeError):
    """The bisection bracket does not straddle the target."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A declarative sweep: grid, protocols, base parameters, seeding, output."""

    kind: str
    parameter: str
    values: tuple[float, ...]
    protocols: tuple[Protocol, ...]
    base: Config
    trials: int
    master_seed: int
    output_path: Path
    quad: QuadratureSpec = QuadratureSpec()
    iso_target: float | None = None
    iso_bracket: tuple[float, float] | None = None
    figure: bool = True

    def __post_init__(self) -> None:
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.kind!r}")
        if self.parameter not in _KIND_PARAMETERS[self.kind]:
            raise ConfigError(
                f"kind {self.kind!r} sweeps {', '.join(_KIND_PARAMETERS[self.kind])}, "
                f"not {self.parameter!r}"
            )
        if not self.values:
            raise ConfigError("sweep.values must be nonempty")
        if list(self.values) != sorted(self.values):
            raise ConfigError("sweep.values must be ascending")
        if self.kind == "single_point" and len(self.values) != 1:
            raise ConfigError("single_point takes exactly one value")
        if self.kind != "iso_coverage" and not self.protocols:
            raise ConfigError("sweep.protocols must be nonempty")
        if self.trials < 1:
            raise ConfigError("sweep.trials must be >= 1")
        if self.kind == "iso_coverage":
            if self.iso_target is None or not 0.0 < self.iso_target < 1.0:
                raise ConfigError("iso.target must lie in (0, 1)")
            if self.iso_bracket is None or not 0.0 <= self.iso_bracket[0] < self.iso_bracket[1]:
                raise ConfigError("iso.lambda_rf_lo/hi must be an increasing bracket")


@dataclass(frozen=True)
class ResultRow:
    """One (grid point, protocol) outcome of a sweep."""

    swept_value: float
    protocol: Protocol
    analytical: float | None
    mc_value: float
    mc_half_width: float
    trials: int
    wall_s: float


@dataclass(frozen=True)
class IsoRow:
    """One point of an iso-coverage contour."""

    density_thz_per_m2: float
    density_rf_per_m2: float
    coverage: float
    target: float
    wall_s: float


def _parse_float_list(raw: str, source: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{source}: {key} is not a comma-separated number list") from exc


_SWEEP_KEYS = {
    "sweep.kind", "sweep.parameter", "sweep.values", "sweep.protocols",
    "sweep.trials", "sweep.seed", "sweep.output",
    "iso.target", "iso.lambda_rf_lo", "iso.lambda_rf_hi",
}


def load_experiment_spec(
    path: str | Path,
    *,
    out: str | Path | None = None,
    seed: int | None = None,
    trials: int | None = None,
    quad: QuadratureSpec | None = None,
    figure: bool = True,
) -> ExperimentSpec:
    """Read a sweep specification file, with optional CLI overrides."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from exc
    entries = parse_kv_text(text, str(path))
    base = config_from_entries(entries, str(path), allow_extra=_SWEEP_KEYS)

    def need(key: str) -> str:
        if key not in entries:
            raise ConfigError(f"{path}: missing {key}")
        return entries[key]

    kind = need("sweep.kind").strip()
    parameter = entries.get("sweep.parameter", "").strip()
    if not parameter and kind in _KIND_PARAMETERS and len(_KIND_PARAMETERS[kind]) == 1:
        parameter = _KIND_PARAMETERS[kind][0]
    values = _parse_float_list(need("sweep.values"), str(path), "sweep.values")
    if kind == "iso_coverage":
        protocols: tuple[Protocol, ...] = (Protocol.HRS,)
    else:
        names = [tok for tok in need("sweep.protocols").split(",") if tok.strip()]
        try:
            protocols = tuple(Protocol.parse(tok) for tok in names)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    iso_target = None
    iso_bracket = None
    if kind == "iso_coverage":
        iso_target = float(need("iso.target"))
        iso_bracket = (float(need("iso.lambda_rf_lo")), float(need("iso.lambda_rf_hi")))

    return ExperimentSpec(
        kind=kind,
        parameter=parameter,
        values=values,
        protocols=protocols,
        base=base,
        trials=trials if trials is not None else int(float(need("sweep.trials"))),
        master_seed=seed if seed is not None else int(float(need("sweep.seed"))),
        output_path=Path(out) if out is not None else Path(need("sweep.output")),
        quad=quad or QuadratureSpec(),
        iso_target=iso_target,
        iso_bracket=iso_bracket,
        figure=figure,
    )


# ---------------------------------------------------------------------------
# Analytical specializations per protocol
# ---------------------------------------------------------------------------

def analytical_coverage(ctx: AnalysisContext, protocol: Protocol) -> float | None:
    """Closed-form/quadrature coverage where one exists; None otherwise."""
    if protocol is Protocol.HRS:
        return coverage_hrs(ctx).value
    if protocol is Protocol.RF_ONLY:
        return coverage_single_band(ctx, Band.RF).value
    if protocol is Protocol.THZ_ONLY:
        return coverage_single_band(ctx, Band.THZ).value
    if protocol is Protocol.DIRECT_RF:
        return coverage_direct(ctx, Band.RF).value
    if protocol is Protocol.DIRECT_THZ:
        return coverage_direct(ctx, Band.THZ).value
    return None  # the max-min benchmark has no tractable form


def _point_seed(master_seed: int, point_index: int, protocol_index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(point_index, protocol_index))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Iso-coverage search
# ---------------------------------------------------------------------------

def iso_coverage_search(
    base: Config,
    target: float,
    density_thz_per_m2: float,
    rf_bracket: tuple[float, float],
    quad: QuadratureSpec | None = None,
    tol: float = 1e-3,
) -> float:
    """RF density whose analytical hybrid coverage hits the target.

    Bisection on the RF density at fixed THz density; the coverage is
    monotone nondecreasing in the density, and the context cache is shared
    across iterations because it does not depend on densities.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    lo, hi = float(rf_bracket[0]), float(rf_bracket[1])
    if not 0.0 <= lo < hi:
        raise ValueError("bracket must satisfy 0 <= lo < hi")
    cfg = apply_parameter(base, "geometry.density_thz_per_m2", density_thz_per_m2)
    ctx = cfg.context(quad)

    def coverage_at(density_rf: float) -> float:
        return coverage_hrs(ctx.with_densities(density_rf_per_m2=density_rf)).value

    c_lo = coverage_at(lo)
    c_hi = coverage_at(hi)
    if (c_lo - target) * (c_hi - target) > 0.0:
        raise BracketError(
            f"coverage at bracket ends ({c_lo:.4f}, {c_hi:.4f}) does not straddle "
            f"target {target}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        value = coverage_at(mid)
        if abs(value - target) < tol:
            return mid
        if (value - target) * (c_lo - target) > 0.0:
            lo, c_lo = mid, value
        else:
            hi = mid
    raise BracketError("bisection did not reach the target tolerance")


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

_RESULT_HEADER = "swept_value,protocol,analytical,mc_value,mc_half_width,trials,wall_s"
_ISO_HEADER = "density_thz_per_m2,density_rf_per_m2,coverage,target,wall_s"


def _config_echo(cfg: Config) -> list[str]:
    pairs = [
        ("rf.tx_power_w", cfg.rf.tx_power_w),
        ("rf.antenna_gain", cfg.rf.antenna_gain),
        ("rf.carrier_freq_hz", cfg.rf.carrier_freq_hz),
        ("rf.pathloss_exponent", cfg.rf.pathloss_exponent),
        ("rf.bandwidth_hz", cfg.rf.bandwidth_hz),
        ("rf.noise_power_w", cfg.rf.noise_power_w),
        ("thz.tx_power_w", cfg.thz.tx_power_w),
        ("thz.antenna_gain", cfg.thz.antenna_gain),
        ("thz.carrier_freq_hz", cfg.thz.carrier_freq_hz),
        ("thz.absorption_per_m", cfg.thz.absorption_per_m),
        ("thz.alpha", cfg.thz.alpha),
        ("thz.mu", cfg.thz.mu),
        ("thz.bandwidth_hz", cfg.thz.bandwidth_hz),
        ("thz.noise_power_w", cfg.thz.noise_power_w),
        ("geometry.r_sd_m", cfg.geometry.r_sd_m),
        ("geometry.r_c_m", cfg.geometry.r_c_m),
        ("geometry.density_rf_per_m2", cfg.geometry.density_rf_per_m2),
        ("geometry.density_thz_per_m2", cfg.geometry.density_thz_per_m2),
        ("rate.y_th_bps", cfg.y_th_bps),
    ]
    return [f"# config.{key}: {value!r}" for key, value in pairs]


def _metadata_lines(spec: ExperimentSpec) -> list[str]:
    lines = [
        f"# hybridrelay sweep output, version {__version__}",
        f"# generated: {datetime.now(timezone.utc).isoformat()}",
        f"# kind: {spec.kind}",
        f"# parameter: {spec.parameter}",
        f"# protocols: {','.join(p.value for p in spec.protocols)}",
        f"# trials: {spec.trials}",
        f"# seed: {spec.master_seed}",
    ]
    if spec.iso_target is not None:
        lines.append(f"# iso.target: {spec.iso_target!r}")
        lines.append(f"# iso.bracket: {spec.iso_bracket[0]!r},{spec.iso_bracket[1]!r}")
    lines.extend(_config_echo(spec.base))
    return lines


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _fmt_opt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_result_csv(path: Path, rows: list[ResultRow], spec: ExperimentSpec) -> None:
    lines = _metadata_lines(spec)
    lines.append(_RESULT_HEADER)
    for row in rows:
        lines.append(
            f"{row.swept_value!r},{row.protocol.value},{_fmt_opt(row.analytical)},"
            f"{row.mc_value!r},{row.mc_half_width!r},{row.trials},{row.wall_s!r}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def read_result_csv(path: str | Path) -> list[ResultRow]:
    rows: list[ResultRow] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#") or line == _RESULT_HEADER:
            continue
        swept, proto, analytical, mc, half, trials, wall = line.split(",")
        rows.append(
            ResultRow(
                swept_value=float(swept),
                protocol=Protocol.parse(proto),
                analytical=None if analytical == "" else float(analytical),
                mc_value=float(mc),
                mc_half_width=float(half),
                trials=int(trials),
                wall_s=float(wall),
            )
        )
    return rows


def write_iso_csv(path: Path, rows: list[IsoRow], spec: ExperimentSpec) -> None:
    lines = _metadata_lines(spec)
    lines.append(_ISO_HEADER)
    for row in rows:
        lines.append(
            f"{row.density_thz_per_m2!r},{row.density_rf_per_m2!r},"
            f"{row.coverage!r},{row.target!r},{row.wall_s!r}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def run_experiment(spec: ExperimentSpec) -> list[ResultRow] | list[IsoRow]:
    """Evaluate every grid point, write the CSV (and figure), return the rows.

    Grid points run in order; per-point Monte Carlo seeds derive from
    (master seed, point index, protocol index), so the output is independent
    of execution order.  Numerical failures are recorded as blank analytical
    entries without aborting the sweep.
    """
    if spec.kind == "iso_coverage":
        return _run_iso(spec)

    rows: list[ResultRow] = []
    for i, value in enumerate(spec.values):
        cfg = apply_parameter(spec.base, spec.parameter, value)
        ctx = cfg.context(spec.quad)
        for j, protocol in enumerate(spec.protocols):
            started = time.perf_counter()
            try:
                analytical = analytical_coverage(ctx, protocol)
            except (QuadratureError, ValueError) as exc:
                print(
                    f"warning: analytical {protocol.value} at {value!r} failed: {exc}",
                    file=sys.stderr,
                )
                analytical = None
            est = monte_carlo_coverage(
                ctx, protocol, spec.trials, _point_seed(spec.master_seed, i, j)
            )
            rows.append(
                ResultRow(
                    swept_value=float(value),
                    protocol=protocol,
                    analytical=analytical,
                    mc_value=est.value,
                    mc_half_width=est.half_width,
                    trials=est.trials,
                    wall_s=time.perf_counter() - started,
                )
            )
    write_result_csv(spec.output_path, rows, spec)
    if spec.figure:
        from .plotting import save_sweep_figure

        save_sweep_figure(rows, spec, spec.output_path.with_suffix(".png"))
    return rows


def _run_iso(spec: ExperimentSpec) -> list[IsoRow]:
    rows: list[IsoRow] = []
    for value in spec.values:
        started = time.perf_counter()
        density_rf = iso_coverage_search(
            spec.base, spec.iso_target, value, spec.iso_bracket, spec.quad
        )
        cfg = apply_parameter(spec.base, "geometry.density_thz_per_m2", value)
        cfg = apply_parameter(cfg, "geometry.density_rf_per_m2", density_rf)
        achieved = coverage_hrs(cfg.context(spec.quad)).value
        rows.append(
            IsoRow(
                density_thz_per_m2=float(value),
                density_rf_per_m2=density_rf,
                coverage=achieved,
                target=spec.iso_target,
                wall_s=time.perf_counter() - started,
            )
        )
    write_iso_csv(spec.output_path, rows, spec)
    if spec.figure:
        from .plotting import save_iso_figure

        save_iso_figure(rows, spec, spec.output_path.with_suffix(".png"))
    return rows
