"""SGD training with trajectory recording."""
from landscape_probe.training.sgd import TrainConfig, TrajectoryRecord, init_params, sgd_train

__all__ = ["TrainConfig", "TrajectoryRecord", "init_params", "sgd_train"]
