"""Physical-layer models for the two bands.

Covers path loss, mean SNR, thermal noise, the rate/SNR-threshold mapping and
the small-scale fading laws: unit-mean exponential fading on the RF band and
alpha-mu fading on the THz band.

Conventions baked in here:
  * the speed of light is fixed at 3e8 m/s;
  * antenna gains are total link gains (both ends combined), linear;
  * "average rate" comparisons replace the fading variable by 1 inside the
    mean SNR.  For alpha = 2 the alpha-mu mean is exactly 1; for other alpha
    values the true mean E[X] = Gamma(mu + 2/alpha) / (Gamma(mu) mu^(2/alpha))
    differs slightly, and the convention is kept anyway so the analytical and
    simulated selection rules agree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT",
    "Band",
    "BandParams",
    "LinkBudget",
    "free_space_factor",
    "noise_power",
    "rate_to_threshold",
    "rf_mean_snr",
    "thz_mean_snr",
    "mean_snr",
    "link_budget",
    "sample_rf_fading",
    "sample_thz_fading",
]

SPEED_OF_LIGHT = 3.0e8  # m/s, rounded convention used throughout


class Band(enum.Enum):
    RF = "RF"
    THZ = "THz"


def free_space_factor(carrier_freq_hz: float) -> float:
    """(c / 4 pi nu)^2, the 1-meter free-space power factor at frequency nu."""
    if not carrier_freq_hz > 0.0:
        raise ValueError("carrier frequency must be > 0")
    return (SPEED_OF_LIGHT / (4.0 * math.pi * carrier_freq_hz)) ** 2


def noise_power(bandwidth_hz: float) -> float:
    """Thermal noise power in watts for a -174 dBm/Hz floor over bandwidth B."""
    if not bandwidth_hz > 0.0:
        raise ValueError("bandwidth must be > 0")
    dbm = -174.0 + 10.0 * math.log10(bandwidth_hz)
    return 10.0 ** ((dbm - 30.0) / 10.0)


def rate_to_threshold(y_th_bps: float, bandwidth_hz: float, slots: int = 2) -> float:
    """SNR threshold equivalent to a target rate.

    ``slots=2`` is the dual-hop case (the relay halves the usable rate),
    ``slots=1`` the one-shot direct case: tau = 2^(slots * y / B) - 1.
    Thresholds beyond the float range saturate to infinity (nothing covers).
    """
    if y_th_bps < 0.0:
        raise ValueError("rate must be >= 0")
    if not bandwidth_hz > 0.0:
        raise ValueError("bandwidth must be > 0")
    if slots not in (1, 2):
        raise ValueError("slots must be 1 or 2")
    try:
        return math.pow(2.0, slots * y_th_bps / bandwidth_hz) - 1.0
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class BandParams:
    """All physical-layer constants of one band.

    ``pathloss_exponent`` applies to the RF band only; ``absorption_per_m``,
    ``alpha`` and ``mu`` to the THz band only.  ``noise_power_w`` defaults to
    the thermal value derived from the bandwidth.
    """

    band: Band
    tx_power_w: float
    antenna_gain: float            # linear, both ends combined
    carrier_freq_hz: float
    bandwidth_hz: float
    pathloss_exponent: float | None = None
    absorption_per_m: float | None = None
    alpha: float | None = None
    mu: float | None = None
    noise_power_w: float | None = None

    def __post_init__(self) -> None:
        if not self.tx_power_w > 0.0:
            raise ValueError("tx_power_w must be > 0")
        if not self.antenna_gain > 0.0:
            raise ValueError("antenna_gain must be > 0")
        if not self.carrier_freq_hz > 0.0:
            raise ValueError("carrier_freq_hz must be > 0")
        if not self.bandwidth_hz > 0.0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.noise_power_w is None:
            object.__setattr__(self, "noise_power_w", noise_power(self.bandwidth_hz))
        if not self.noise_power_w > 0.0:
            raise ValueError("noise_power_w must be > 0")
        if self.band is Band.RF:
            if self.pathloss_exponent is None or not self.pathloss_exponent > 2.0:
                raise ValueError("RF pathloss_exponent must be > 2 for an integrable far field")
        else:
            if self.absorption_per_m is None or self.absorption_per_m < 0.0:
                raise ValueError("THz absorption_per_m must be >= 0")
            if self.alpha is None or not self.alpha > 0.0:
                raise ValueError("THz alpha must be > 0")
            if self.mu is None or not self.mu > 0.0:
                raise ValueError("THz mu must be > 0")

    @property
    def free_space_factor(self) -> float:
        return free_space_factor(self.carrier_freq_hz)

    @property
    def snr_scale(self) -> float:
        """epsilon * G * gamma / sigma^2: mean SNR before the distance term."""
        return (
            self.tx_power_w * self.antenna_gain * self.free_space_factor
            / self.noise_power_w
        )


@dataclass(frozen=True)
class LinkBudget:
    """Mean SNR, threshold and distance of one link, all nonnegative."""

    mean_snr: float
    threshold: float
    distance_m: float


def rf_mean_snr(params: BandParams, distance_m):
    """Mean RF SNR at the given distance: scale * r^-beta (fading at 1)."""
    if params.band is not Band.RF:
        raise ValueError("rf_mean_snr needs RF band parameters")
    r = np.asarray(distance_m, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("distance must be > 0")
    if r.ndim == 0 and float(r) == 0.0:
        raise ValueError("distance must be > 0")
    with np.errstate(divide="ignore"):
        out = params.snr_scale * r ** (-params.pathloss_exponent)
    return float(out) if np.ndim(distance_m) == 0 else out


def thz_mean_snr(params: BandParams, distance_m):
    """Mean THz SNR: scale * exp(-beta r) / r^2 (fading at 1)."""
    if params.band is not Band.THZ:
        raise ValueError("thz_mean_snr needs THz band parameters")
    r = np.asarray(distance_m, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("distance must be > 0")
    if r.ndim == 0 and float(r) == 0.0:
        raise ValueError("distance must be > 0")
    with np.errstate(divide="ignore"):
        out = params.snr_scale * np.exp(-params.absorption_per_m * r) / (r * r)
    return float(out) if np.ndim(distance_m) == 0 else out


def mean_snr(params: BandParams, distance_m):
    if params.band is Band.RF:
        return rf_mean_snr(params, distance_m)
    return thz_mean_snr(params, distance_m)


def link_budget(params: BandParams, distance_m: float, y_th_bps: float, slots: int = 2) -> LinkBudget:
    return LinkBudget(
        mean_snr=mean_snr(params, distance_m),
        threshold=rate_to_threshold(y_th_bps, params.bandwidth_hz, slots),
        distance_m=float(distance_m),
    )


def average_rate(params: BandParams, distance_m) -> float:
    """Dual-hop average rate (B/2) log2(1 + mean SNR) used for selection."""
    s = mean_snr(params, distance_m)
    return 0.5 * params.bandwidth_hz * np.log2(1.0 + s)


def sample_rf_fading(rng: np.random.Generator, size=None):
    """Unit-mean exponential fading draw(s)."""
    return rng.exponential(1.0, size)


def sample_thz_fading(alpha: float, mu: float, rng: np.random.Generator, size=None):
    """alpha-mu fading draw(s) with CCDF Gamma(mu, mu m^(alpha/2)) / Gamma(mu).

    Realized as X = G^(2/alpha) with G ~ Gamma(shape mu, rate mu), since
    Y = X^(alpha/2) then has the Gamma(mu, rate mu) tail above.
    """
    if not alpha > 0.0:
        raise ValueError("alpha must be > 0")
    if not mu > 0.0:
        raise ValueError("mu must be > 0")
    g = rng.gamma(mu, 1.0 / mu, size)
    if alpha == 2.0:
        return g
    return g ** (2.0 / alpha)
