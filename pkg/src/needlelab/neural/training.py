"""Training loop shared by the two architectures.

Windows are split 90/10 into contiguous-in-time blocks with a one-window
gap so no frame is shared between train and validation. train_stride
subsamples the stride-1 window set for desk-scale runs (adjacent windows
overlap in 49 of 50 frames, so a moderate stride loses almost no
information); stride 1 recovers the full set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict

import numpy as np

from ..errors import NonFiniteLoss
from . import cgru, resnet
from .data import CalibrationSet
from .optim import Adam

_ARCHS = {"cgru": cgru, "resnet": resnet}


def arch_module(arch: str):
    try:
        return _ARCHS[arch]
    except KeyError:
        raise ValueError(f"unknown architecture {arch!r}; "
                         f"choose from {sorted(_ARCHS)}") from None


def default_arch_config(arch: str, window: int = 50, **overrides):
    if arch == "cgru":
        return cgru.CgruConfig(window=window, **overrides)
    if arch == "resnet":
        return resnet.ResNetConfig(window=window, **overrides)
    raise ValueError(f"unknown architecture {arch!r}")


def batch_inputs(arch: str, windows: np.ndarray) -> np.ndarray:
    """(B, T, 512) window stack -> architecture input layout."""
    if arch == "cgru":
        return windows
    return windows.transpose(0, 2, 1)      # resnet sees (B, 512, T)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    lr: float = 5e-4
    batch: int = 128
    seed: int = 0
    window: int = 50
    val_fraction: float = 0.1
    train_stride: int = 1
    val_stride: int = 1
    init_bias_to_mean: bool = True

    def __post_init__(self):
        if min(self.epochs, self.batch, self.window,
               self.train_stride, self.val_stride) <= 0 or self.lr <= 0:
            raise ValueError("train hyperparameters must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def split_window_ends(n_frames: int, cfg: TrainConfig):
    """(train_ends, val_ends) with no shared frames between the blocks."""
    first = cfg.window - 1
    n_train_frames = int(n_frames * (1.0 - cfg.val_fraction))
    train_ends = np.arange(first, n_train_frames, cfg.train_stride)
    val_ends = np.arange(n_train_frames + cfg.window - 1, n_frames,
                         cfg.val_stride)
    return train_ends, val_ends


def _eval_windows(mod, arch: str, params: dict, arch_cfg,
                  dataset: CalibrationSet, ends: np.ndarray,
                  batch: int = 256):
    """Forward-only MSE and MAE over the windows ending at `ends`."""
    se = 0.0
    ae = 0.0
    for lo in range(0, len(ends), batch):
        chunk = ends[lo:lo + batch]
        x = batch_inputs(arch, dataset.window_frames(chunk, arch_cfg.window))
        y = dataset.forces[chunk]
        pred = mod.forward(x, params, arch_cfg)
        se += float(np.sum((pred - y) ** 2))
        ae += float(np.sum(np.abs(pred - y)))
    n = max(len(ends), 1)
    return se / n, ae / n


def train(dataset: CalibrationSet, config: TrainConfig, arch: str,
          arch_cfg=None) -> tuple[dict, list[dict]]:
    """Adam-optimized parameters and per-epoch loss history.

    Deterministic given config.seed: parameter init, batch order and all
    reductions are fixed. Raises NonFiniteLoss with diagnostics if the
    loss leaves the finite range.
    """
    mod = arch_module(arch)
    if arch_cfg is None:
        arch_cfg = default_arch_config(arch, window=config.window)
    rng = np.random.default_rng(config.seed)
    params = mod.init_params(arch_cfg, rng)

    train_ends, val_ends = split_window_ends(dataset.n, config)
    if len(train_ends) == 0 or len(val_ends) == 0:
        raise ValueError("dataset too small for the requested split")
    if config.init_bias_to_mean:
        mean_label = float(np.mean(dataset.forces[train_ends]))
        final_bias = "fc2_b" if arch == "cgru" else "fc_b"
        params[final_bias][...] = mean_label

    optimizer = Adam(params, lr=config.lr)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_ends))
        epoch_se = 0.0
        n_seen = 0
        for lo in range(0, len(order), config.batch):
            ends = train_ends[order[lo:lo + config.batch]]
            x = batch_inputs(arch,
                             dataset.window_frames(ends, arch_cfg.window))
            y = dataset.forces[ends]
            loss, grads = mod.loss_and_grads(x, y, params, arch_cfg)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"{arch}: loss={loss} at epoch {epoch}, "
                    f"window offset {lo} (lr={config.lr})")
            optimizer.step(params, grads)
            epoch_se += loss * len(ends)
            n_seen += len(ends)
        val_mse, val_mae = _eval_windows(mod, arch, params, arch_cfg,
                                         dataset, val_ends)
        history.append({"epoch": epoch, "train_mse": epoch_se / n_seen,
                        "val_mse": val_mse, "val_mae": val_mae})
    return params, history


def measure_train_step_ms(arch: str, params: dict, arch_cfg,
                          dataset: CalibrationSet, reps: int = 10) -> float:
    """Median wall time of one forward+backward pass on a single window."""
    mod = arch_module(arch)
    ends = np.array([arch_cfg.window - 1])
    x = batch_inputs(arch, dataset.window_frames(ends, arch_cfg.window))
    y = dataset.forces[ends]
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        mod.loss_and_grads(x, y, params, arch_cfg)
        times.append(time.perf_counter() - t0)
    return float(np.median(times) * 1e3)
