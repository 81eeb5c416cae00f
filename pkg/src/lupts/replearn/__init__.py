from .mlp import Mlp, leaky_relu, leaky_relu_grad
from .model import (
    Batch,
    Grads,
    Objective,
    RepModel,
    backward,
    loss_and_grads,
    loss_classic_rep,
    loss_crl,
    loss_distillation,
    loss_grl,
    loss_srl,
)
from .training import (
    Adam,
    DistillationResult,
    TrainConfig,
    TrainResult,
    TeacherModel,
    fit_distillation,
    split_train_validation,
    train,
    train_teacher,
)

__all__ = [
    "Adam",
    "Batch",
    "DistillationResult",
    "Grads",
    "Mlp",
    "Objective",
    "RepModel",
    "TeacherModel",
    "TrainConfig",
    "TrainResult",
    "backward",
    "fit_distillation",
    "leaky_relu",
    "leaky_relu_grad",
    "loss_and_grads",
    "loss_classic_rep",
    "loss_crl",
    "loss_distillation",
    "loss_grl",
    "loss_srl",
    "split_train_validation",
    "train",
    "train_teacher",
]
