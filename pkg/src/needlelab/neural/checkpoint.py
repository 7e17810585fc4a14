"""Versioned weight checkpoints.

A checkpoint is a binary container whose header carries the architecture
tag, a shape manifest and an echo of the model/train configuration; the
payload is the raw little-endian float32 weights.
"""

from __future__ import annotations

import numpy as np

from ..container import read_container, write_container
from .cgru import CgruConfig
from .resnet import ResNetConfig

CHECKPOINT_VERSION = 1


def save_checkpoint(path, arch: str, params: dict, arch_cfg,
                    train_cfg: dict | None = None,
                    meta: dict | None = None) -> None:
    arrays = {k: np.asarray(v, dtype=np.float32) for k, v in params.items()}
    header_meta = {
        "kind": "checkpoint",
        "version": CHECKPOINT_VERSION,
        "arch": arch,
        "arch_config": arch_cfg.to_dict(),
        "train_config": train_cfg or {},
        "meta": meta or {},
    }
    write_container(path, arrays, header_meta)


def load_checkpoint(path):
    """Returns (arch, params, arch_cfg, header_meta)."""
    arrays, meta = read_container(path)
    if meta.get("kind") != "checkpoint":
        raise ValueError(f"{path}: not a checkpoint")
    arch = meta["arch"]
    if arch == "cgru":
        cfg = CgruConfig(**meta["arch_config"])
    elif arch == "resnet":
        cfg = ResNetConfig.from_dict(meta["arch_config"])
    else:
        raise ValueError(f"{path}: unknown architecture {arch!r}")
    return arch, arrays, cfg, meta
