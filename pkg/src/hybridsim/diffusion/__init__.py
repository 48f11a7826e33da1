from .model import (
    DiffusionModel,
    ModelConfig,
    ModelFormatError,
    ModelParams,
    load_model,
    new_model,
    save_model,
)
from .predictor import ScoredRanking, score_users, top_k

__all__ = [
    "DiffusionModel",
    "ModelConfig",
    "ModelFormatError",
    "ModelParams",
    "ScoredRanking",
    "load_model",
    "new_model",
    "save_model",
    "score_users",
    "top_k",
]
