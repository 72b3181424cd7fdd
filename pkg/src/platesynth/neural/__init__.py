from .normalize import (normalize_material, normalize_material_array,
                        denormalize_material, MATERIAL_ORDER)
from .model import ModelWeights, ModelHyper, init_weights, encode, predict
from .train import TrainConfig, AdamState, train, eval_batch_loss, batch_indices
from .checkpoint import save_checkpoint, load_checkpoint, CHECKPOINT_VERSION

__all__ = [
    "normalize_material", "normalize_material_array", "denormalize_material",
    "MATERIAL_ORDER",
    "ModelWeights", "ModelHyper", "init_weights", "encode", "predict",
    "TrainConfig", "AdamState", "train", "eval_batch_loss", "batch_indices",
    "save_checkpoint", "load_checkpoint", "CHECKPOINT_VERSION",
]
