"""Mechanism models for incomplete multiway contingency tables."""

from .estimators import BoundaryReport, FitError, FitResult, fit, \
    resolve_boundary
from .inference import ComparisonReport, GoodnessOfFit, \
    LogLinearDecomposition, OddsRatioEstimate, chi2_survival, \
    compare_models, conditional_missing_prob, decompose_loglinear, \
    g_squared, joint_probabilities, marginal_odds_ratio, \
    odds_ratio_variance
from .likelihood import EMResult, Params, em_fit, loglik, \
    perfect_fit_loglik
from .linsolve import LEAST_SQUARES, MIN_NORM, SQUARE, \
    SingularSystemError, solve_odds_system
from .models import MAR, MCAR, NMAR, Mechanism, ModelSpec, \
    category_counts, degrees_of_freedom, enumerate_models, \
    free_parameter_count, model_index, parse_model_text
from .simulate import params_from_json, simulate_table
from .table import IncompleteTable, TableError, Variable, load_table

__version__ = "1.0.0"

__all__ = [
    "BoundaryReport", "ComparisonReport", "EMResult", "FitError",
    "FitResult", "GoodnessOfFit", "IncompleteTable", "LEAST_SQUARES",
    "LogLinearDecomposition", "MAR", "MCAR", "MIN_NORM", "Mechanism",
    "ModelSpec", "NMAR", "OddsRatioEstimate", "Params", "SQUARE",
    "SingularSystemError", "TableError", "Variable", "category_counts",
    "chi2_survival", "compare_models", "conditional_missing_prob",
    "decompose_loglinear", "degrees_of_freedom", "em_fit",
    "enumerate_models", "fit", "free_parameter_count", "g_squared",
    "joint_probabilities", "load_table", "loglik", "marginal_odds_ratio",
    "model_index", "odds_ratio_variance", "params_from_json",
    "parse_model_text", "perfect_fit_loglik", "resolve_boundary",
    "simulate_table", "solve_odds_system",
]
