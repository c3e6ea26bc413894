"""Monte Carlo engine: network realizations, selection protocols, coverage.

Each trial realizes both relay fields on the deployment disc, attaches
independent per-hop fading draws to every relay, and executes one selection
protocol end to end.  Trials are reproducible and scheduling-independent:
trial k always consumes the substream derived from (master_seed, k), so the
estimate is bit-identical no matter how trials are distributed over workers.

Draw order inside one trial (fixed; do not reorder):
  RF count, RF radii, RF angles, RF source fades, RF destination fades,
  the same five for THz, then the direct-link RF fade and THz fade.

All protocols, the one-hop direct ones included, are scored against the
shared per-band thresholds carried by the context (the dual-hop relation
between rate and SNR).  See the package documentation for the rationale.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channel import Band, BandParams, sample_rf_fading, sample_thz_fading
from .pointprocess import (
    NetworkGeometry,
    RelayRealization,
    distance_to_source,
    sample_ppp,
    trial_seed,
)

__all__ = [
    "Protocol",
    "CoverageEstimate",
    "realize_network",
    "qualified_set",
    "hrs_select",
    "trial_coverage",
    "monte_carlo_coverage",
    "paired_outcomes",
    "estimate_from_outcomes",
]


class Protocol(enum.Enum):
    """Selection protocols the trial executor understands."""

    HRS = "HRS"
    OPTIMAL_MAX_MIN = "OptimalMaxMin"
    RF_ONLY = "RfOnly"
    THZ_ONLY = "ThzOnly"
    DIRECT_RF = "DirectRF"
    DIRECT_THZ = "DirectTHz"

    @classmethod
    def parse(cls, name: str) -> "Protocol":
        for member in cls:
            if member.value.lower() == name.strip().lower():
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown protocol {name!r}; expected one of: {valid}")


RELAYED_PROTOCOLS = (
    Protocol.HRS,
    Protocol.OPTIMAL_MAX_MIN,
    Protocol.RF_ONLY,
    Protocol.THZ_ONLY,
)


@dataclass(frozen=True)
class CoverageEstimate:
    """A coverage probability with its provenance.

    Monte Carlo estimates carry a 95% normal-approximation half-width and the
    trial count; analytical ones carry the numerical error budget instead and
    report the two band addends when the protocol has them.
    """

    value: float
    half_width: float
    trials: int
    provenance: str  # "analytical" | "monte_carlo"
    rf_term: float | None = None
    thz_term: float | None = None

    def __post_init__(self) -> None:
        if not -1e-12 <= self.value <= 1.0 + 1e-12:
            raise ValueError("value must lie in [0, 1]")
        if self.half_width < 0.0:
            raise ValueError("half_width must be >= 0")
        if self.provenance not in ("analytical", "monte_carlo"):
            raise ValueError("provenance must be 'analytical' or 'monte_carlo'")
        if self.provenance == "monte_carlo" and self.trials < 1:
            raise ValueError("monte_carlo estimates need trials >= 1")


# ---------------------------------------------------------------------------
# Realization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _BandField:
    rho: np.ndarray
    theta: np.ndarray
    dist_s: np.ndarray
    fade_s: np.ndarray
    fade_d: np.ndarray

    def __len__(self) -> int:
        return len(self.rho)


@dataclass(frozen=True)
class _Realization:
    rf: _BandField
    thz: _BandField
    direct_fade_rf: float
    direct_fade_thz: float

    def field(self, band: Band) -> _BandField:
        return self.rf if band is Band.RF else self.thz


def _sample_field(
    params: BandParams, density: float, geom: NetworkGeometry, rng: np.random.Generator
) -> _BandField:
    rho, theta = sample_ppp(density, geom.r_c_m, rng)
    n = len(rho)
    if params.band is Band.RF:
        fade_s = sample_rf_fading(rng, n)
        fade_d = sample_rf_fading(rng, n)
    else:
        fade_s = sample_thz_fading(params.alpha, params.mu, rng, n)
        fade_d = sample_thz_fading(params.alpha, params.mu, rng, n)
    # law of cosines inline; rho >= 0 by construction, clamp rounding slop
    r_sd = geom.r_sd_m
    sq = rho * rho + r_sd * r_sd - 2.0 * r_sd * rho * np.cos(theta)
    return _BandField(
        rho=rho,
        theta=theta,
        dist_s=np.sqrt(np.maximum(sq, 0.0)),
        fade_s=np.atleast_1d(fade_s),
        fade_d=np.atleast_1d(fade_d),
    )


def _realize(ctx, rng: np.random.Generator) -> _Realization:
    geom = ctx.geom
    rf = _sample_field(ctx.rf, geom.density_rf_per_m2, geom, rng)
    thz = _sample_field(ctx.thz, geom.density_thz_per_m2, geom, rng)
    d_rf = float(sample_rf_fading(rng))
    d_thz = float(sample_thz_fading(ctx.thz.alpha, ctx.thz.mu, rng))
    return _Realization(rf=rf, thz=thz, direct_fade_rf=d_rf, direct_fade_thz=d_thz)


def realize_network(ctx, rng: np.random.Generator) -> list[RelayRealization]:
    """Sample one network: both relay fields with per-hop fades attached."""
    rz = _realize(ctx, rng)
    out: list[RelayRealization] = []
    for band in (Band.RF, Band.THZ):
        f = rz.field(band)
        for i in range(len(f)):
            out.append(
                RelayRealization(
                    band=band,
                    rho=float(f.rho[i]),
                    theta=float(f.theta[i]),
                    dist_to_s=float(f.dist_s[i]),
                    fade_s=float(f.fade_s[i]),
                    fade_d=float(f.fade_d[i]),
                )
            )
    return out


# ---------------------------------------------------------------------------
# Per-relay SNR helpers (array forms tolerate zero distance -> inf SNR)
# ---------------------------------------------------------------------------

_DIVIDE_IGNORED = {"divide": "ignore"}


def _mean_snr_arr(params: BandParams, dist: np.ndarray) -> np.ndarray:
    # zero distance yields inf, the "always covered" convention
    with np.errstate(**_DIVIDE_IGNORED):
        if params.band is Band.RF:
            return params.snr_scale * dist ** (-params.pathloss_exponent)
        return params.snr_scale * np.exp(-params.absorption_per_m * dist) / (dist * dist)


def _avg_rate(params: BandParams, dist: float) -> float:
    """Dual-hop average rate at a destination distance; inf at distance 0."""
    if dist == 0.0:
        return math.inf
    snr = float(_mean_snr_arr(params, np.asarray(dist, dtype=float)))
    return 0.5 * params.bandwidth_hz * math.log2(1.0 + snr)


# ---------------------------------------------------------------------------
# Selection steps on explicit relay lists (inspection-friendly surface)
# ---------------------------------------------------------------------------

def qualified_set(ctx, relays: list[RelayRealization], band: Band) -> list[RelayRealization]:
    """Relays of the band whose instantaneous source-hop SNR clears tau."""
    params = ctx.params(band)
    tau = ctx.tau(band)
    out = []
    for relay in relays:
        if relay.band is not band:
            continue
        snr = (
            math.inf
            if relay.dist_to_s == 0.0
            else relay.fade_s * float(_mean_snr_arr(params, np.asarray(relay.dist_to_s)))
        )
        if snr >= tau:
            out.append(relay)
    return out


def hrs_select(ctx, relays: list[RelayRealization]):
    """Hybrid selection: nearest qualified relay per band, then the finalist
    with the larger dual-hop average rate (ties go to THz).

    Returns (relay, band) or None when both qualified sets are empty.
    """
    finalists: dict[Band, RelayRealization] = {}
    for band in (Band.RF, Band.THZ):
        qualified = qualified_set(ctx, relays, band)
        if qualified:
            finalists[band] = min(qualified, key=lambda rel: rel.rho)
    if not finalists:
        return None
    if len(finalists) == 1:
        band, relay = next(iter(finalists.items()))
        return relay, band
    rate_rf = _avg_rate(ctx.rf, finalists[Band.RF].rho)
    rate_thz = _avg_rate(ctx.thz, finalists[Band.THZ].rho)
    band = Band.THZ if rate_thz >= rate_rf else Band.RF
    return finalists[band], band


# ---------------------------------------------------------------------------
# Trial execution (array fast path)
# ---------------------------------------------------------------------------

def _qualified_mask(ctx, field: _BandField, band: Band) -> np.ndarray:
    params = ctx.params(band)
    snr_s = field.fade_s * _mean_snr_arr(params, field.dist_s)
    return snr_s >= ctx.tau(band)


def _nearest_qualified(ctx, field: _BandField, band: Band):
    idx = np.flatnonzero(_qualified_mask(ctx, field, band))
    if idx.size == 0:
        return None
    return int(idx[np.argmin(field.rho[idx])])


def _d_hop_success(ctx, field: _BandField, band: Band, i: int) -> bool:
    params = ctx.params(band)
    rho = float(field.rho[i])
    if rho == 0.0:
        return True
    snr_d = field.fade_d[i] * float(_mean_snr_arr(params, np.asarray(rho)))
    return bool(snr_d >= ctx.tau(band))


def _evaluate(ctx, rz: _Realization, protocol: Protocol) -> bool:
    if protocol is Protocol.DIRECT_RF or protocol is Protocol.DIRECT_THZ:
        band = Band.RF if protocol is Protocol.DIRECT_RF else Band.THZ
        r = ctx.geom.r_sd_m
        if r == 0.0:
            return True
        fade = rz.direct_fade_rf if band is Band.RF else rz.direct_fade_thz
        snr = fade * float(_mean_snr_arr(ctx.params(band), np.asarray(r)))
        return bool(snr >= ctx.tau(band))

    if protocol is Protocol.OPTIMAL_MAX_MIN:
        # Benchmark with full instantaneous knowledge: no qualification step,
        # every relay scored by the minimum of its two hop SNRs in its band.
        for band in (Band.RF, Band.THZ):
            f = rz.field(band)
            if len(f) == 0:
                continue
            params = ctx.params(band)
            snr_s = f.fade_s * _mean_snr_arr(params, f.dist_s)
            snr_d = f.fade_d * _mean_snr_arr(params, f.rho)
            if bool(np.any(np.minimum(snr_s, snr_d) >= ctx.tau(band))):
                return True
        return False

    if protocol is Protocol.RF_ONLY or protocol is Protocol.THZ_ONLY:
        band = Band.RF if protocol is Protocol.RF_ONLY else Band.THZ
        f = rz.field(band)
        i = _nearest_qualified(ctx, f, band)
        return False if i is None else _d_hop_success(ctx, f, band, i)

    if protocol is Protocol.HRS:
        best: tuple[float, Band, int] | None = None
        for band in (Band.THZ, Band.RF):  # THz first so rate ties keep it
            f = rz.field(band)
            i = _nearest_qualified(ctx, f, band)
            if i is None:
                continue
            rate = _avg_rate(ctx.params(band), float(f.rho[i]))
            if best is None or rate > best[0]:
                best = (rate, band, i)
        if best is None:
            return False
        _, band, i = best
        return _d_hop_success(ctx, rz.field(band), band, i)

    raise ValueError(f"unhandled protocol {protocol!r}")


def trial_coverage(ctx, protocol: Protocol, rng: np.random.Generator) -> bool:
    """Realize one network and report whether the protocol met the target."""
    return _evaluate(ctx, _realize(ctx, rng), protocol)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def estimate_from_outcomes(successes: int, trials: int) -> CoverageEstimate:
    p = successes / trials
    half = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / trials)
    return CoverageEstimate(
        value=p, half_width=half, trials=trials, provenance="monte_carlo"
    )


def monte_carlo_coverage(
    ctx, protocol: Protocol, trials: int, master_seed: int
) -> CoverageEstimate:
    """Plain Monte Carlo coverage estimate over independent realizations.

    Deterministic for a fixed (ctx, protocol, trials, master_seed): trial k
    uses the substream derived from (master_seed, k) regardless of worker
    count or scheduling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    successes = 0
    for k in range(trials):
        rng = np.random.default_rng(trial_seed(master_seed, k))
        successes += _evaluate(ctx, _realize(ctx, rng), protocol)
    return estimate_from_outcomes(successes, trials)


def paired_outcomes(
    ctx, protocols: list[Protocol], trials: int, master_seed: int
) -> dict[Protocol, np.ndarray]:
    """Per-trial outcomes of several protocols on shared realizations.

    Common random numbers make pairwise comparisons (optimality dominance,
    protocol gaps) exact per realization instead of only in expectation.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = {p: np.zeros(trials, dtype=bool) for p in protocols}
    for k in range(trials):
        rng = np.random.default_rng(trial_seed(master_seed, k))
        rz = _realize(ctx, rng)
        for p in protocols:
            out[p][k] = _evaluate(ctx, rz, p)
    return out
