"""High-dimensional (conditional) independence tests with Gaussianized scores."""
from .bench import BenchResult, run_bench
from .bootstrap import BootstrapDraws, bootstrap_statistics, critical_value, p_value
from .ci_fnn import CIFNNTest, ci_fnn_test, select_n3
from .ci_lasso import CILassoTest, ci_lasso_test
from .exceptions import (ConfigurationError, DataError, DegenerateColumnError, DomainError,
                         GausstestError, TrainingDivergedError)
from .fnn import FNNRegressor, FnnConfig, FnnModel
from .gaussianize import CoordinatewiseGaussianizer, gaussianize_full, gaussianize_truncated
from .independence import IndependenceTest, TestReport, independence_test
from .lasso import LassoCD, LassoCVCD, lasso_cv, lasso_fit
from .multitest import bh_adjust
from .simulate import ScenarioSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BenchResult", "BootstrapDraws", "CIFNNTest", "CILassoTest", "ConfigurationError",
    "CoordinatewiseGaussianizer", "DataError", "DegenerateColumnError", "DomainError",
    "FNNRegressor", "FnnConfig", "FnnModel", "GausstestError", "IndependenceTest", "LassoCD",
    "LassoCVCD", "ScenarioSpec", "TestReport", "TrainingDivergedError", "bh_adjust",
    "bootstrap_statistics", "ci_fnn_test", "ci_lasso_test", "critical_value",
    "gaussianize_full", "gaussianize_truncated", "generate", "independence_test", "lasso_cv",
    "lasso_fit", "p_value", "run_bench", "select_n3",
]
