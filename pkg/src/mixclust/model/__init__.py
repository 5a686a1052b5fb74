from .loss import affinity_distance, dc_loss, dc_loss_and_grad, dc_loss_grad
from .network import EmbeddingNetwork, NetConfig, input_features
from .optim import Adam, clip_by_global_norm
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .train import TrainConfig, build_target, train

__all__ = [
    "Adam", "Checkpoint", "EmbeddingNetwork", "NetConfig", "TrainConfig",
    "affinity_distance", "build_target", "clip_by_global_norm", "dc_loss", "dc_loss_and_grad",
    "dc_loss_grad",
    "input_features", "load_checkpoint", "save_checkpoint", "train",
]
