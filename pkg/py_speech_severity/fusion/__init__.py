"""
Fusion severity regressor, unimodal baselines and the attention ablation.
"""

# Local imports
from .model import (
    ARTIC,
    SPEECH,
    Branch,
    BranchConfig,
    ConvLayerSpec,
    FusionConfig,
    FusionModel,
    HeadConfig,
    SessionInputs,
    SeverityRegressor,
    UnimodalModel,
    Variant,
    branch_attend,
    branch_features,
    branch_forward,
    build_fusion,
    build_model,
    build_unimodal,
    fuse_and_predict,
    load_regressor,
    save_regressor,
)
from .training import Prediction, RegressorEpochRecord, RegressorTrainingConfig, predict_dataset, train_regressor

__all__ = [
    "ARTIC",
    "SPEECH",
    "Branch",
    "BranchConfig",
    "ConvLayerSpec",
    "FusionConfig",
    "FusionModel",
    "HeadConfig",
    "Prediction",
    "RegressorEpochRecord",
    "RegressorTrainingConfig",
    "SessionInputs",
    "SeverityRegressor",
    "UnimodalModel",
    "Variant",
    "branch_attend",
    "branch_features",
    "branch_forward",
    "build_fusion",
    "build_model",
    "build_unimodal",
    "fuse_and_predict",
    "load_regressor",
    "predict_dataset",
    "save_regressor",
    "train_regressor",
]
