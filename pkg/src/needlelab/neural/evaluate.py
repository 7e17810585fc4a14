"""Held-out stream evaluation: accuracy and real-time metrics."""

from __future__ import annotations

import time

import numpy as np

from ..errors import DegenerateVariance
from .training import arch_module, measure_train_step_ms


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation coefficient; raises DegenerateVariance when the
    reference signal has zero spread."""
    sa = float(np.std(a))
    sb = float(np.std(b))
    if sb == 0.0:
        raise DegenerateVariance("reference signal is constant")
    if sa == 0.0:
        raise DegenerateVariance("prediction signal is constant")
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def evaluate_stream(arch: str, params: dict, arch_cfg, frames: np.ndarray,
                    forces: np.ndarray, dataset_for_tt=None,
                    time_tt: bool = True) -> tuple[dict, np.ndarray]:
    """Stream the frames through the model one at a time.

    Returns (metrics, predictions). MAE and pCC are computed after the
    window-1 warm-up frames; pCC is None when undefined. it_ms is the
    median per-frame inference wall time, tt_ms the median single-window
    forward+backward time.
    """
    mod = arch_module(arch)
    n = len(frames)
    state = mod.stream_init(arch_cfg)
    preds = np.empty(n)
    times = np.empty(n)
    for i in range(n):
        t0 = time.perf_counter()
        preds[i], state = mod.stream_step(frames[i], state, params, arch_cfg)
        times[i] = time.perf_counter() - t0
    warm = arch_cfg.window - 1
    err = preds[warm:] - forces[warm:]
    try:
        pcc = pearson(preds[warm:], forces[warm:])
    except DegenerateVariance:
        pcc = None
    metrics = {
        "arch": arch,
        "n_frames": int(n),
        "n_warmup": int(warm),
        "mae": float(np.mean(np.abs(err))),
        "rmse": float(np.sqrt(np.mean(err ** 2))),
        "pcc": pcc,
        "it_ms": float(np.median(times) * 1e3),
        "it_p99_ms": float(np.percentile(times, 99) * 1e3),
    }
    if time_tt and dataset_for_tt is not None:
        metrics["tt_ms"] = measure_train_step_ms(arch, params, arch_cfg,
                                                 dataset_for_tt)
    else:
        metrics["tt_ms"] = None
    return metrics, preds
