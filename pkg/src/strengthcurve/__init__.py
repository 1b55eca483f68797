"""Concrete compressive-strength regression with learning-curve analysis.

Three regressors (cubic polynomial, small sigmoid network, bagged CART
forest) share one dataset pipeline, one set of accuracy metrics and one
learning-curve harness.
"""

from .curves import LearningCurve, LearningCurveError, LearningCurvePoint, learning_curve, min_data_to_plateau, size_schedule
from .dataset import FEATURES, TARGET, Dataset, FoldPlan, MixtureRecord, Scaler, SplitPlan, kfold, load_csv, split_train_test, write_csv
from .exceptions import DataValidationError, NotFittedError, TrainingDivergedError
from .forest import RandomForestRegressor, RegressionTree, RegressionTreeRegressor, best_split, build_tree
from .metrics import EvaluationReport, GaussianFit, confidence_interval, error_distribution, evaluate, fit_gaussian, mse, r_squared, rmse
from .neural import NeuralNetworkRegressor
from .polynomial import PolynomialRegression
from .synth import SynthConfig, generate, ground_truth

__version__ = "0.1.0"

__all__ = [
    "FEATURES", "TARGET", "Dataset", "FoldPlan", "MixtureRecord", "Scaler", "SplitPlan",
    "kfold", "load_csv", "split_train_test", "write_csv",
    "DataValidationError", "NotFittedError", "TrainingDivergedError",
    "PolynomialRegression", "NeuralNetworkRegressor",
    "RandomForestRegressor", "RegressionTree", "RegressionTreeRegressor", "best_split", "build_tree",
    "EvaluationReport", "GaussianFit", "confidence_interval", "error_distribution", "evaluate",
    "fit_gaussian", "mse", "r_squared", "rmse",
    "LearningCurve", "LearningCurveError", "LearningCurvePoint", "learning_curve",
    "min_data_to_plateau", "size_schedule",
    "SynthConfig", "generate", "ground_truth",
]
