"""Adaptive, cluster-wise calibrated VIV fatigue prediction for slender pipes."""
from .calibrate import CalibrationResult, calibrate_all, calibrate_cluster, fatigue_mse
from .characterize import CaseRecord, FeatureVector, SensorSeries, features
from .clustering import ClusterModel, adjusted_rand_index, classify, fit
from .evaluate import compare_strategies, evaluate
from .hydro import CeCurve, CeParameterSet, ce, default_params
from .predictor import PredictionResult, SNCurve, predict, predict_response
from .structural import CurrentProfile, PipeModel, modal_info, natural_frequencies

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult", "CaseRecord", "CeCurve", "CeParameterSet", "ClusterModel", "CurrentProfile",
    "FeatureVector", "PipeModel", "PredictionResult", "SNCurve", "SensorSeries", "adjusted_rand_index",
    "calibrate_all", "calibrate_cluster", "ce", "classify", "compare_strategies", "default_params",
    "evaluate", "fatigue_mse", "features", "fit", "modal_info", "natural_frequencies", "predict",
    "predict_response",
]
