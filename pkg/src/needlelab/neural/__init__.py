"""Force regression over A-scan streams: a convolutional-GRU model with a
1-D residual head, a 2-D ResNet baseline, the calibration data generator,
the training loop and checkpoint I/O. All gradients are hand-derived and
verified against finite differences in the test suite."""

from . import cgru, resnet
from .checkpoint import load_checkpoint, save_checkpoint
from .cgru import CgruConfig
from .data import (CalibrationSet, coverage, cyclic_profile,
                   generate_calibration, load_calibration, save_calibration)
from .evaluate import evaluate_stream, pearson
from .resnet import ResNetConfig
from .training import (TrainConfig, arch_module, batch_inputs,
                       default_arch_config, split_window_ends, train)

__all__ = [
    "CalibrationSet", "CgruConfig", "ResNetConfig", "TrainConfig",
    "arch_module", "batch_inputs", "cgru", "coverage", "cyclic_profile",
    "default_arch_config", "evaluate_stream", "generate_calibration",
    "load_calibration", "load_checkpoint", "pearson", "resnet",
    "save_calibration", "save_checkpoint", "split_window_ends", "train",
]
