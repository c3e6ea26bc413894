import pytest

from hybridrelay.analysis import AnalysisContext
from hybridrelay.channel import Band, BandParams
from hybridrelay.config import default_config
from hybridrelay.pointprocess import NetworkGeometry


@pytest.fixture(scope="session")
def baseline_cfg():
    return default_config()


@pytest.fixture(scope="session")
def baseline_ctx(baseline_cfg):
    # shared so the analytical caches build once for the whole session
    return baseline_cfg.context()


@pytest.fixture(scope="session")
def toy_ctx(baseline_cfg):
    """Smaller disc and thinner fields: fast Monte Carlo in unit tests."""
    geom = NetworkGeometry(
        r_sd_m=30.0, r_c_m=100.0,
        density_rf_per_m2=3.0e-4, density_thz_per_m2=1.5e-3,
    )
    return AnalysisContext.from_rate(
        baseline_cfg.rf, baseline_cfg.thz, geom, 4.2e8
    )


def make_rf_params(**overrides) -> BandParams:
    kw = dict(
        band=Band.RF,
        tx_power_w=1.0,
        antenna_gain=100.0,
        carrier_freq_hz=2.1e9,
        bandwidth_hz=4.0e7,
        pathloss_exponent=2.5,
    )
    kw.update(overrides)
    return BandParams(**kw)


def make_thz_params(**overrides) -> BandParams:
    kw = dict(
        band=Band.THZ,
        tx_power_w=1.0,
        antenna_gain=1.0e4,
        carrier_freq_hz=1.8e12,
        bandwidth_hz=5.0e8,
        absorption_per_m=0.2,
        alpha=2.0,
        mu=4.0,
    )
    kw.update(overrides)
    return BandParams(**kw)
