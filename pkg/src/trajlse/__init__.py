"""Single-trajectory least squares learning of nonlinear dynamics.

Simulation of stable stochastic systems, least squares estimators over
Lipschitz / kernel-ball / generalized-linear / finite hypothesis classes,
evaluable error and variance-proxy bounds, and seeded Monte-Carlo suites that
verify the underlying inequalities and convergence rates.
"""

from ._rng import child_seed, substream
from .bounds import (BalanceResult, BoundInputs, EntropyDivergenceError,
                     RateResult, VarianceProxyBound, balance, entropy_integral,
                     finite_class_bound, gen_bound_lipschitz_loss, heavy_rate,
                     master_bound, master_bound_terms, nonparametric_rate,
                     parametric_rate, sigma_contraction, sigma_eiss, sigma_mixing)
from .empirics import (DecouplingReport, OffsetProcessSample, RateFit,
                       SigmaEstimate, counterfactual_error, decoupling_check,
                       estimate_sigma_T, fit_rate, mgf_check, offset_process,
                       offset_supremum)
from .estimators import (FiniteClassLSE, GLMProjectedLSE, KernelRidgeBallLSE,
                         LipschitzScalarLSE, fit_least_squares, training_error)
from .functions import (DifferenceMap, FunctionMap, GLMMap, LinearMap,
                        RBFExpansion, ScaledTanh, ShiftedMap, Tabulated1D,
                        VectorMap, ZeroMap, get_link)
from .mixing import markov_mixing_time, markov_stationary, mixing_time_estimate, tv_distance
from .spaces import (Cover, CoverCertificationError, CoverSizeError, FiniteClass,
                     FiniteEntropy, GLMClass, Lipschitz1D, LogLinearEntropy,
                     PowerLawEntropy, Quantized, RKHSBall, RKHSEntropy,
                     build_cover_glm, build_cover_lipschitz1d, log_covering_bound,
                     quantize, save_cover, sup_distance)
from .systems import (PointInit, SystemSpec, Trajectory, UniformBallInit,
                      contraction_estimate, counterfactual_points,
                      make_random_glm_system, make_random_rkhs_system,
                      sample_counterfactual, simulate, simulate_batch)

__version__ = "0.1.0"
