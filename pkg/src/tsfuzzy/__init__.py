"""Takagi-Sugeno fuzzy model identification with moving-rate rule weights."""
from .criteria import (Baseline, SplitSpec, SplitStrategy, UCEvaluator, baseline_predict,
                       error_index, mse, unbiased_criterion)
from .data import Dataset, LagSpec, apply_lags, bundled, load_csv, normalize, restore_series
from .inference import AllWeightsZero, Mode, Normalization, TSModel, TSRule, infer, infer_batch
from .kernels import BACKEND
from .membership import MembershipFunction, Shape, UnsupportedShapeError
from .regression import fit_model, solve_lse
from .search import (FitReport, PartitionCandidate, SearchConfig, eliminate_variables,
                     enumerate_candidates, identify, optimize_premise)

__version__ = "0.1.0"

__all__ = [
    "AllWeightsZero", "BACKEND", "Baseline", "Dataset", "FitReport", "LagSpec",
    "MembershipFunction", "Mode", "Normalization", "PartitionCandidate", "SearchConfig",
    "Shape", "SplitSpec", "SplitStrategy", "TSModel", "TSRule", "UCEvaluator",
    "UnsupportedShapeError", "apply_lags", "baseline_predict", "bundled", "eliminate_variables",
    "enumerate_candidates", "error_index", "fit_model", "identify", "infer", "infer_batch",
    "load_csv", "mse", "normalize", "optimize_premise", "restore_series", "solve_lse",
    "unbiased_criterion",
]
