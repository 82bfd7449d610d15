from .inference import DEFAULT_THETA, NoiseVerdict, classify, noise_score
from .estimator import GraphDenoiser
from .model import (
    EmbeddingModel,
    ModelGrads,
    TrainConfig,
    embed,
    init_model,
    load_model,
    save_model,
)
from .objective import (
    PairSample,
    clamp_probability,
    pair_loss,
    pair_loss_grad_p,
    pair_objective,
    pair_objective_with_grads,
    similarity,
)
from .trainer import cooccurrence_sample_source, train, train_from_stats

__all__ = [
    "DEFAULT_THETA",
    "EmbeddingModel",
    "GraphDenoiser",
    "ModelGrads",
    "NoiseVerdict",
    "PairSample",
    "TrainConfig",
    "clamp_probability",
    "classify",
    "cooccurrence_sample_source",
    "embed",
    "init_model",
    "load_model",
    "noise_score",
    "pair_loss",
    "pair_loss_grad_p",
    "pair_objective",
    "pair_objective_with_grads",
    "save_model",
    "similarity",
    "train",
    "train_from_stats",
]
