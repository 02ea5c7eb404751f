from dgnet.training.dataset import (
    SnapshotDataset,
    generate_dataset,
    generate_trajectory,
    load_dataset,
    sample_window,
    save_dataset,
)
from dgnet.training.losses import (
    Batch,
    MCTargets,
    StageModel,
    build_stage_model,
    loss_mc,
    loss_naive,
    prepare_mc_batch,
    window_batch,
)
from dgnet.training.randomize import clamp_density, randomize
from dgnet.training.trainer import (
    TrainConfig,
    TrainingSet,
    TrainResult,
    adam_step,
    compute_gradients,
    make_optimizer,
    make_validator,
    train_loop,
)

__all__ = [
    "Batch",
    "MCTargets",
    "SnapshotDataset",
    "StageModel",
    "TrainConfig",
    "TrainResult",
    "TrainingSet",
    "adam_step",
    "build_stage_model",
    "clamp_density",
    "compute_gradients",
    "generate_dataset",
    "generate_trajectory",
    "load_dataset",
    "loss_mc",
    "loss_naive",
    "make_optimizer",
    "make_validator",
    "prepare_mc_batch",
    "randomize",
    "sample_window",
    "save_dataset",
    "train_loop",
    "window_batch",
]
