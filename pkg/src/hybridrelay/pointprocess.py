"""Relay-field geometry: homogeneous PPP sampling on a disc around the
destination and the polar-to-source distance map.

The destination sits at the origin; the source lies on the positive x-axis at
distance ``r_sd_m``.  Relay positions are polar coordinates (rho, theta) seen
from the destination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Band

__all__ = [
    "NetworkGeometry",
    "RelayRealization",
    "sample_ppp",
    "distance_to_source",
    "trial_seed",
]


@dataclass(frozen=True)
class NetworkGeometry:
    """Disc radius, source-destination distance and per-band relay densities."""

    r_sd_m: float
    r_c_m: float
    density_rf_per_m2: float
    density_thz_per_m2: float

    def __post_init__(self) -> None:
        if not self.r_c_m > 0.0:
            raise ValueError("r_c_m must be > 0")
        if self.r_sd_m < 0.0:
            raise ValueError("r_sd_m must be >= 0")
        if self.density_rf_per_m2 < 0.0 or self.density_thz_per_m2 < 0.0:
            raise ValueError("densities must be >= 0")

    def density(self, band: Band) -> float:
        return self.density_rf_per_m2 if band is Band.RF else self.density_thz_per_m2

    @property
    def disc_area_m2(self) -> float:
        return math.pi * self.r_c_m ** 2


@dataclass(frozen=True)
class RelayRealization:
    """One sampled relay with its polar position and per-hop fading draws.

    ``dist_to_s`` is derived from (rho, theta) and the source distance by the
    law of cosines; a relay exactly at the source or destination has an
    infinite mean SNR on that hop and counts as always covered there.
    """

    band: Band
    rho: float
    theta: float
    dist_to_s: float
    fade_s: float
    fade_d: float


def sample_ppp(
    density_per_m2: float, r_c_m: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample a homogeneous PPP on the disc of radius r_c_m.

    Returns (rho, theta) arrays of equal Poisson-distributed length.  Radii
    use the inverse-CDF sqrt(U) law so the draw count is deterministic given
    the count, which keeps seeded runs reproducible.
    """
    if density_per_m2 < 0.0:
        raise ValueError("density must be >= 0")
    if not r_c_m > 0.0:
        raise ValueError("disc radius must be > 0")
    n = int(rng.poisson(density_per_m2 * math.pi * r_c_m ** 2))
    rho = r_c_m * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    return rho, theta


def distance_to_source(rho, theta, r_sd_m: float):
    """Distance from a polar point (seen from the destination) to the source.

    Law of cosines; tiny negative radicands from rounding clamp to zero.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("rho must be >= 0")
    theta = np.asarray(theta, dtype=float)
    sq = rho * rho + r_sd_m * r_sd_m - 2.0 * rho * r_sd_m * np.cos(theta)
    out = np.sqrt(np.maximum(sq, 0.0))
    return float(out) if out.ndim == 0 else out


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Substream seed for unit-of-work ``index`` under a master seed.

    The (master, index) pair fully determines the stream, independent of how
    work is scheduled across processes, so estimates never depend on the
    degree of parallelism.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(index,))
