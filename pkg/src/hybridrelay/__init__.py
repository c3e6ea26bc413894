"""Coverage analysis and Monte Carlo simulation of dual-hop decode-and-forward
relay selection in hybrid RF/THz networks.

The package evaluates the coverage probability of a hybrid relay-selection
protocol in closed form (by numerical quadrature over the nearest-relay
distance laws of Poisson relay fields) and, independently, by link-level
Monte Carlo simulation of the same model, together with four comparison
protocols and a reproducible sweep/figure driver.
"""

__version__ = "0.1.0"

from .channel import (  # noqa: F401
    Band,
    BandParams,
    LinkBudget,
    free_space_factor,
    noise_power,
    rate_to_threshold,
)
from .numerics import QuadratureError, QuadratureSpec  # noqa: F401
from .pointprocess import NetworkGeometry, RelayRealization  # noqa: F401
from .simulation import (  # noqa: F401
    CoverageEstimate,
    Protocol,
    monte_carlo_coverage,
    trial_coverage,
)
from .analysis import (  # noqa: F401
    AnalysisContext,
    coverage_hrs,
)
from .config import Config, ConfigError, default_config, load_config  # noqa: F401
