"""Parameter-file ingestion.

One flat, human-readable format is used for both base configurations and
sweep specifications: ``key.path = value`` lines, ``#`` comments, blank lines
ignored.  The schema is versioned through a mandatory ``schema = 1`` line.

Recognized configuration keys (one of each unit variant):

  rf.tx_power_w | rf.tx_power_dbm
  rf.antenna_gain | rf.antenna_gain_dbi
  rf.carrier_freq_hz
  rf.pathloss_exponent
  rf.bandwidth_hz
  rf.noise_power_w | rf.noise_power_dbm      (optional; thermal by default)
  thz.tx_power_w | thz.tx_power_dbm
  thz.antenna_gain | thz.antenna_gain_dbi
  thz.carrier_freq_hz
  thz.absorption_per_m
  thz.alpha
  thz.mu
  thz.bandwidth_hz
  thz.noise_power_w | thz.noise_power_dbm    (optional)
  geometry.r_sd_m
  geometry.r_c_m
  geometry.density_rf_per_m2
  geometry.density_thz_per_m2
  rate.y_th_bps

dB-scaled inputs carry an explicit _dbi/_dbm suffix and are converted to
linear/watts at load time; everything else is SI.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, replace
from pathlib import Path

from .analysis import AnalysisContext
from .channel import Band, BandParams
from .numerics import QuadratureSpec
from .pointprocess import NetworkGeometry

__all__ = [
    "ConfigError",
    "Config",
    "parse_kv_text",
    "load_config",
    "default_config_text",
    "default_config",
    "apply_parameter",
    "SWEEPABLE_PARAMETERS",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent parameter input."""


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines into an ordered dict of raw strings."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _as_float(entries: dict[str, str], key: str, source: str) -> float:
    try:
        return float(entries[key])
    except ValueError as exc:
        raise ConfigError(f"{source}: key {key!r} is not a number: {entries[key]!r}") from exc


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _pick_unit(
    entries: dict[str, str], base: str, plain: str, db_suffix: str,
    convert, source: str, required: bool = True,
):
    """Resolve a value given either its plain key or its dB-suffixed variant."""
    plain_key = f"{base}.{plain}"
    db_key = f"{base}.{db_suffix}"
    if plain_key in entries and db_key in entries:
        raise ConfigError(f"{source}: give {plain_key} or {db_key}, not both")
    if plain_key in entries:
        return _as_float(entries, plain_key, source)
    if db_key in entries:
        return convert(_as_float(entries, db_key, source))
    if required:
        raise ConfigError(f"{source}: missing {plain_key} (or {db_key})")
    return None


@dataclass(frozen=True)
class Config:
    """A full parameter set: both bands, the geometry and the target rate."""

    rf: BandParams
    thz: BandParams
    geometry: NetworkGeometry
    y_th_bps: float

    def context(self, quad: QuadratureSpec | None = None) -> AnalysisContext:
        return AnalysisContext.from_rate(
            self.rf, self.thz, self.geometry, self.y_th_bps, quad=quad
        )


_CONFIG_KEYS = {
    "schema",
    "rf.tx_power_w", "rf.tx_power_dbm",
    "rf.antenna_gain", "rf.antenna_gain_dbi",
    "rf.carrier_freq_hz", "rf.pathloss_exponent", "rf.bandwidth_hz",
    "rf.noise_power_w", "rf.noise_power_dbm",
    "thz.tx_power_w", "thz.tx_power_dbm",
    "thz.antenna_gain", "thz.antenna_gain_dbi",
    "thz.carrier_freq_hz", "thz.absorption_per_m", "thz.alpha", "thz.mu",
    "thz.bandwidth_hz", "thz.noise_power_w", "thz.noise_power_dbm",
    "geometry.r_sd_m", "geometry.r_c_m",
    "geometry.density_rf_per_m2", "geometry.density_thz_per_m2",
    "rate.y_th_bps",
}


def config_from_entries(
    entries: dict[str, str], source: str = "<config>", allow_extra: frozenset | set = frozenset()
) -> Config:
    unknown = set(entries) - _CONFIG_KEYS - set(allow_extra)
    if unknown:
        raise ConfigError(f"{source}: unknown keys: {', '.join(sorted(unknown))}")
    if "schema" not in entries:
        raise ConfigError(f"{source}: missing 'schema = {SCHEMA_VERSION}' line")
    if int(_as_float(entries, "schema", source)) != SCHEMA_VERSION:
        raise ConfigError(f"{source}: unsupported schema {entries['schema']!r}")

    try:
        rf = BandParams(
            band=Band.RF,
            tx_power_w=_pick_unit(entries, "rf", "tx_power_w", "tx_power_dbm",
                                  _dbm_to_watts, source),
            antenna_gain=_pick_unit(entries, "rf", "antenna_gain", "antenna_gain_dbi",
                                    _db_to_linear, source),
            carrier_freq_hz=_as_float(entries, "rf.carrier_freq_hz", source),
            bandwidth_hz=_as_float(entries, "rf.bandwidth_hz", source),
            pathloss_exponent=_as_float(entries, "rf.pathloss_exponent", source),
            noise_power_w=_pick_unit(entries, "rf", "noise_power_w", "noise_power_dbm",
                                     _dbm_to_watts, source, required=False),
        )
        thz = BandParams(
            band=Band.THZ,
            tx_power_w=_pick_unit(entries, "thz", "tx_power_w", "tx_power_dbm",
                                  _dbm_to_watts, source),
            antenna_gain=_pick_unit(entries, "thz", "antenna_gain", "antenna_gain_dbi",
                                    _db_to_linear, source),
            carrier_freq_hz=_as_float(entries, "thz.carrier_freq_hz", source),
            bandwidth_hz=_as_float(entries, "thz.bandwidth_hz", source),
            absorption_per_m=_as_float(entries, "thz.absorption_per_m", source),
            alpha=_as_float(entries, "thz.alpha", source),
            mu=_as_float(entries, "thz.mu", source),
            noise_power_w=_pick_unit(entries, "thz", "noise_power_w", "noise_power_dbm",
                                     _dbm_to_watts, source, required=False),
        )
        geometry = NetworkGeometry(
            r_sd_m=_as_float(entries, "geometry.r_sd_m", source),
            r_c_m=_as_float(entries, "geometry.r_c_m", source),
            density_rf_per_m2=_as_float(entries, "geometry.density_rf_per_m2", source),
            density_thz_per_m2=_as_float(entries, "geometry.density_thz_per_m2", source),
        )
        y_th = _as_float(entries, "rate.y_th_bps", source)
        if y_th < 0.0:
            raise ValueError("rate.y_th_bps must be >= 0")
    except KeyError as exc:
        raise ConfigError(f"{source}: missing key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return Config(rf=rf, thz=thz, geometry=geometry, y_th_bps=y_th)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_entries(parse_kv_text(text, str(path)), str(path))


def default_config_text() -> str:
    return (
        importlib.resources.files("hybridrelay.data")
        .joinpath("baseline.cfg")
        .read_text(encoding="utf-8")
    )


def default_config() -> Config:
    """The packaged baseline parameter set."""
    return config_from_entries(parse_kv_text(default_config_text(), "<baseline>"), "<baseline>")


# Dotted paths a sweep may vary, mapped to field surgery on a Config.
SWEEPABLE_PARAMETERS = (
    "rate.y_th_bps",
    "geometry.r_sd_m",
    "geometry.density_rf_per_m2",
    "geometry.density_thz_per_m2",
    "rf.tx_power_w",
    "thz.tx_power_w",
    "tx_power_w",  # both bands at once
)


def apply_parameter(cfg: Config, parameter: str, value: float) -> Config:
    """Return a copy of cfg with one sweepable parameter replaced."""
    if parameter == "rate.y_th_bps":
        return replace(cfg, y_th_bps=float(value))
    if parameter == "geometry.r_sd_m":
        return replace(cfg, geometry=replace(cfg.geometry, r_sd_m=float(value)))
    if parameter == "geometry.density_rf_per_m2":
        return replace(cfg, geometry=replace(cfg.geometry, density_rf_per_m2=float(value)))
    if parameter == "geometry.density_thz_per_m2":
        return replace(cfg, geometry=replace(cfg.geometry, density_thz_per_m2=float(value)))
    if parameter == "rf.tx_power_w":
        return replace(cfg, rf=replace(cfg.rf, tx_power_w=float(value), noise_power_w=cfg.rf.noise_power_w))
    if parameter == "thz.tx_power_w":
        return replace(cfg, thz=replace(cfg.thz, tx_power_w=float(value), noise_power_w=cfg.thz.noise_power_w))
    if parameter == "tx_power_w":
        cfg = apply_parameter(cfg, "rf.tx_power_w", value)
        return apply_parameter(cfg, "thz.tx_power_w", value)
    raise ConfigError(
        f"parameter {parameter!r} is not sweepable; choose one of: "
        + ", ".join(SWEEPABLE_PARAMETERS)
    )
