"""Probabilistic lower bounds on trend emergence in scale-free social networks."""
__version__ = "0.1.0"

from .bounds import (BoundInputs, BoundResult, RhoSearch, SweepRow, normal_cdf, p_tilde_minus,
                     rho_trend_lower, sigma_minus, sweep, theorem1_bound, theorem2_bound)
from .errors import (ChernoffValidityError, ContractViolationError, DivergenceError, EnumerationLimitError,
                     InputError, InvalidParameterError, NoValidRhoError, TrendboundError)
from .estimation import (Event, EventLog, FitResult, estimate_beta, factors_from_fit,
                         fit_adoption_params, empirical_sigma_minus)
from .graphmodel import (DegreeDistribution, Network, degree_ratio_prob_bound, degree_ratio_prob_empirical,
                         fit_gamma_mle, generate_scale_free, normalization_constant)
from .simulator import SimConfig, compare, exact_small, monte_carlo, run
from .trendmodel import AdoptionParams, TrendState, adoption_factor, influence_factor, local_adopt_prob

__all__ = [name for name in dir() if not name.startswith("_")]
