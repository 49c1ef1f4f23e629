"""Importance Gauss-Hermite quadrature.

Deterministic Gauss-Hermite nodes placed on Gaussian proposals and reweighted
by importance ratios, with multiple-proposal and adaptive variants.
"""

from .adapt import AdaptationError, AdaptTrace, AMIGHVariant, am_igh, m_pigh, moment_match
from .baselines import amis, halton, is_estimate, m_pmc, qmc_is_estimate
from .diagnostics import EssReport, classic_ess, ess_igh
from .errors import (ConfigError, DegenerateWeightsError, FactorizationError,
                     GridTooLargeError, InvalidOrderError, IquadError, UnsupportedRuleError)
from .igh import Estimates, WeightedSet, error_bound, igh_estimate, igh_weights, resample_thin
from .migh import MIGHScheme, migh_estimate, migh_weights
from .proposals import EvalCounter, GaussianProposal, MixtureProposal
from .quad_rules import (GridRule, PointSet, Rule1D, RuleKind, classical_rule,
                         gauss_hermite_points, hermite_rule, map_to_gaussian, tensor_grid)
from .targets import (TargetDensity, make_exoplanet, make_gaussian_mixture_5,
                      make_gaussian_target, make_gp_posterior, make_nakagami)

__version__ = "0.1.0"
