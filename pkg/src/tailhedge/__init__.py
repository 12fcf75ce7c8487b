"""Tail-hedged portfolio analytics.

Computes the return distribution of a portfolio holding an asset and a
third-moment-variation swap under Heston stochastic volatility, with an
optional jump-diffusion extension.  The density is obtained by solving
the Fourier-transformed forward Kolmogorov equation with an alternating
direction implicit scheme and inverting the resulting characteristic
function; a Monte Carlo simulator and a closed-form Heston
characteristic function serve as independent cross-checks.
"""

from .errors import (
    ConfigurationError,
    DataError,
    DegenerateSampleError,
    InsolvencyError,
    InstabilityError,
    MassLossError,
    NumericalError,
    ParameterError,
    SingularSystemError,
    TailhedgeError,
)
from .models import FellerReport, HestonParams, JumpParams, SwapSpec, cf_heston
from .pipeline import SolveConfig, SolveResult, analytic_density, \
    convergence_study, solve_density
from .spectral import DensityCurve, MomentSummary, PhiGrid

__version__ = "1.0.0"

__all__ = [
    "HestonParams", "JumpParams", "SwapSpec", "FellerReport", "cf_heston",
    "SolveConfig", "SolveResult", "solve_density", "analytic_density",
    "convergence_study", "PhiGrid", "DensityCurve", "MomentSummary",
    "TailhedgeError", "ConfigurationError", "ParameterError", "DataError",
    "NumericalError", "InstabilityError", "SingularSystemError",
    "MassLossError", "DegenerateSampleError", "InsolvencyError",
    "__version__",
]
