"""Conformally flat surfaces with prescribed Gauss curvature.

Closed-form solution families of ``Delta u + K e^{2u} = 0``, a mean-field
free-energy solver that constructs solutions with a prescribed integral
curvature, a log-gas sampler for the underlying canonical ensemble, and
diagnostics for the bounds and symmetry statements these surfaces obey.
"""

from .closedforms import CurvatureSpec, FamilyInstance, HarmonicSpec, eval_family, eval_harmonic
from .diagnostics import (BarrierReport, SymmetryReport, asymptotic_slope, barrier_check,
                          comparison_g, kappa_lower_bound, kappa_sup_star, radial_asymmetry,
                          reflection_min, lambda_zero_interval)
from .exceptions import (DivergentIntegralError, GaussCurvError, InadmissibleBetaError,
                         InvalidParameterError, SignMismatchError)
from .fields import (PlanarField, RadialProfile, angular_average, deviation_bound,
                     integral_curvature, laplacian, pde_residual)
from .loggas import (ChainState, LogGasSampler, MarginalHistogram, empirical_marginal,
                     log_weight, mc_sweep, pair_log_moment)
from .meanfield import (AprioriMeasure, MeanFieldSolver, MinimizerResult, SolverConfig,
                        build_apriori, fixed_point_step, free_energy, log_potential,
                        reconstruct_u, solve_minimizer)

__version__ = "0.1.0"
