"""Shallow-network behavioral modeling: full versus structured residual learning."""

from .compare import CompareConfig, run_comparison, summarize, write_sweep_csv
from .dpd import DpdConfig, DpdResult, Modeler, Predistorter, indirect_dpd, reference_drive, reference_pa
from .features import ARVTDNN_FEATURES, FEATURE_KINDS, SRTDNN_FEATURES, FeatureSpec, build_features
from .metrics import aclr_dbc, evm_db, nmse_db
from .mlp import (MlpModel, TrainConfig, TrainingTrace, complexity_account, gradient_check,
                  init_mlp, train)
from .pipelines import (ARVTDNN, PRESETS, SRTDNN, Preset, full_learning, pipeline_macs,
                        predict_full, predict_residual, residual_learning)

__all__ = [
    "ARVTDNN", "ARVTDNN_FEATURES", "CompareConfig", "DpdConfig", "DpdResult", "FEATURE_KINDS",
    "FeatureSpec", "MlpModel", "Modeler", "PRESETS", "Predistorter", "Preset", "SRTDNN",
    "SRTDNN_FEATURES", "TrainConfig", "TrainingTrace", "aclr_dbc", "build_features",
    "complexity_account", "evm_db", "full_learning", "gradient_check", "indirect_dpd", "init_mlp", "nmse_db",
    "pipeline_macs",
    "predict_full", "predict_residual", "reference_drive", "reference_pa", "residual_learning",
    "run_comparison", "summarize", "train", "write_sweep_csv",
]
