"""Honest confidence intervals for sharp regression discontinuity designs
under monotone Lipschitz smoothness: a fixed-length minimax two-sided CI and
an adaptive one-sided CI, plus the modulus solvers, variance estimators,
Lipschitz-bound estimator, and a Monte Carlo harness behind them.
"""

__version__ = "0.1.0"

from .adaptive import (AdaptiveCI, adaptive_ci, calibrate_tau, check_allocation,
                       choose_grid, delta_ratio, ell_adaptive, ell_minimax)
from .cbound import CBoundReport, c_lower_bound
from .design import Dataset, FunctionSpace, TreatmentRule, preprocess, read_csv
from .errors import RdmonoError
from .geometry import MonotoneSet, NormSpec
from .minimax import MinimaxCI, cv_alpha, gain_curve, minimax_ci
from .modulus import ModulusSolution, SideProblem, omega_side, optimal_split
from .simlab import DGPSpec, SimResult, eval_dgp, run_mc
from .variance import estimate_variance, nn_variance, silverman_bandwidth

__all__ = [
    "AdaptiveCI", "adaptive_ci", "calibrate_tau", "check_allocation",
    "choose_grid", "delta_ratio", "ell_adaptive", "ell_minimax",
    "CBoundReport", "c_lower_bound",
    "Dataset", "FunctionSpace", "TreatmentRule", "preprocess", "read_csv",
    "RdmonoError", "MonotoneSet", "NormSpec",
    "MinimaxCI", "cv_alpha", "gain_curve", "minimax_ci",
    "ModulusSolution", "SideProblem", "omega_side", "optimal_split",
    "DGPSpec", "SimResult", "eval_dgp", "run_mc",
    "estimate_variance", "nn_variance", "silverman_bandwidth",
    "__version__",
]
