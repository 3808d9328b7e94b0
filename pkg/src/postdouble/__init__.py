"""Post-double-selection inference on a treatment effect among many controls."""

from .dgp import DESIGNS, DesignSpec, GeneratedSample, generate
from .hte import AteReport, NuisanceFits, ate_estimate, att_estimate, fit_nuisances
from .lasso import LassoFit, PenaltyConfig, feasible_loadings, lasso_cd, logistic_lasso, penalty_level
from .montecarlo import ESTIMATORS, McSummary, run_cell, run_grid
from .regression import Dataset, DegreesOfFreedomError, EstimateReport, LeverageError, Truth, ols_fit
from .selection import (double_selection, ds_plus_i3, lasso_direct, single_selection_post_lasso,
                        union_ads)
from .split import split_sample_estimate

__all__ = [
    "DESIGNS", "DesignSpec", "GeneratedSample", "generate",
    "AteReport", "NuisanceFits", "ate_estimate", "att_estimate", "fit_nuisances",
    "LassoFit", "PenaltyConfig", "feasible_loadings", "lasso_cd", "logistic_lasso", "penalty_level",
    "ESTIMATORS", "McSummary", "run_cell", "run_grid",
    "Dataset", "DegreesOfFreedomError", "EstimateReport", "LeverageError", "Truth", "ols_fit",
    "double_selection", "ds_plus_i3", "lasso_direct", "single_selection_post_lasso", "union_ads",
    "split_sample_estimate",
]
__version__ = "0.1.0"
