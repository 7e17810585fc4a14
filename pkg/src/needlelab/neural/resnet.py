"""2-D residual network baseline over the scan-history buffer.

The model sees the last `window` A-scans as a (input_len x window) image:
a strided stem convolution, four residual blocks with stride-2
downsampling, global average pooling and a linear readout. During
streaming a cyclic buffer holds the most recent frames, zero-padded
before the window is full; those first window-1 predictions are flagged
as warm-up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from . import ops

ARCH_NAME = "resnet"


@dataclass(frozen=True)
class ResNetConfig:
    input_len: int = 512
    window: int = 50
    stem_channels: int = 8
    stem_kernel: int = 5
    stem_stride: tuple = (4, 2)
    block_channels: tuple = (16, 16, 32, 32)
    block_kernel: int = 3
    dtype: str = "float32"

    def to_dict(self) -> dict:
        return {
            "input_len": self.input_len, "window": self.window,
            "stem_channels": self.stem_channels,
            "stem_kernel": self.stem_kernel,
            "stem_stride": list(self.stem_stride),
            "block_channels": list(self.block_channels),
            "block_kernel": self.block_kernel, "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResNetConfig":
        d = dict(d)
        d["stem_stride"] = tuple(d["stem_stride"])
        d["block_channels"] = tuple(d["block_channels"])
        return cls(**d)


def init_params(cfg: ResNetConfig, rng: np.random.Generator) -> dict:
    dt = np.dtype(cfg.dtype)
    k = cfg.block_kernel

    def he(shape, fan_in):
        return (np.sqrt(2.0) * rng.standard_normal(shape)
                / np.sqrt(fan_in)).astype(dt)

    sk = cfg.stem_kernel
    p = {
        "stem_w": he((sk, sk, 1, cfg.stem_channels), sk * sk),
        "stem_b": np.zeros(cfg.stem_channels, dt),
    }
    cin = cfg.stem_channels
    for i, cout in enumerate(cfg.block_channels):
        p[f"b{i}_w1"] = he((k, k, cin, cout), k * k * cin)
        p[f"b{i}_b1"] = np.zeros(cout, dt)
        p[f"b{i}_w2"] = he((k, k, cout, cout), k * k * cout)
        p[f"b{i}_b2"] = np.zeros(cout, dt)
        p[f"b{i}_skip"] = he((1, 1, cin, cout), cin)
        cin = cout
    p["fc_w"] = (rng.standard_normal((cin, 1)) / np.sqrt(cin)).astype(dt)
    p["fc_b"] = np.zeros(1, dt)
    return p


def zero_params(cfg: ResNetConfig) -> dict:
    rng = np.random.default_rng(0)
    return {k: np.zeros_like(v) for k, v in init_params(cfg, rng).items()}


def forward(buffer: np.ndarray, params: dict, cfg: ResNetConfig,
            cache: dict | None = None) -> np.ndarray:
    """(input_len, window) buffer or (B, input_len, window) batch -> force."""
    single = buffer.ndim == 2
    x = buffer[None] if single else buffer
    if x.shape[1] != cfg.input_len or x.shape[2] != cfg.window:
        raise ShapeMismatch(f"expected ({cfg.input_len}, {cfg.window}) "
                            f"buffer, got {x.shape[1:]}")
    x = np.asarray(x, dtype=cfg.dtype)[..., None]      # (B, H, W, 1)
    acts = {"x": x}
    y = ops.relu(ops.conv2d(x, params["stem_w"], params["stem_b"],
                            stride=cfg.stem_stride))
    acts["stem"] = y
    for i in range(len(cfg.block_channels)):
        a1 = ops.relu(ops.conv2d(y, params[f"b{i}_w1"], params[f"b{i}_b1"],
                                 stride=(2, 2)))
        a2 = ops.conv2d(a1, params[f"b{i}_w2"], params[f"b{i}_b2"])
        s = ops.conv2d(y, params[f"b{i}_skip"], stride=(2, 2))
        y2 = ops.relu(a2 + s)
        acts[f"b{i}_in"], acts[f"b{i}_a1"], acts[f"b{i}_out"] = y, a1, y2
        y = y2
    g = ops.global_avgpool(y)
    out = ops.dense(g, params["fc_w"], params["fc_b"])
    if cache is not None:
        cache.update(acts=acts, g=g, top=y)
    return out[0, 0] if single else out[:, 0]


def loss_and_grads(x: np.ndarray, y: np.ndarray, params: dict,
                   cfg: ResNetConfig) -> tuple[float, dict]:
    cache: dict = {}
    pred = forward(x, params, cfg, cache)
    loss, dpred = ops.mse(pred, np.asarray(y, dtype=pred.dtype))
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    backward(cache, params, cfg, dpred, grads)
    return loss, grads


def backward(cache: dict, params: dict, cfg: ResNetConfig,
             dpred: np.ndarray, grads: dict) -> None:
    acts, g, top = cache["acts"], cache["g"], cache["top"]
    dg, grads["fc_w"][...], grads["fc_b"][...] = ops.dense_backward(
        g, params["fc_w"], dpred[:, None])
    dy = ops.global_avgpool_backward(dg, top.shape)
    for i in reversed(range(len(cfg.block_channels))):
        y_in, a1, y_out = acts[f"b{i}_in"], acts[f"b{i}_a1"], acts[f"b{i}_out"]
        dy = ops.relu_backward(dy, y_out)
        da1, grads[f"b{i}_w2"][...], grads[f"b{i}_b2"][...] = \
            ops.conv2d_backward(a1, params[f"b{i}_w2"], dy)
        da1 = ops.relu_backward(da1, a1)
        dxa, grads[f"b{i}_w1"][...], grads[f"b{i}_b1"][...] = \
            ops.conv2d_backward(y_in, params[f"b{i}_w1"], da1, stride=(2, 2))
        dxb, dskip, _ = ops.conv2d_backward(y_in, params[f"b{i}_skip"], dy,
                                            stride=(2, 2))
        grads[f"b{i}_skip"][...] = dskip
        dy = dxa + dxb
    dy = ops.relu_backward(dy, acts["stem"])
    _, grads["stem_w"][...], grads["stem_b"][...] = ops.conv2d_backward(
        acts["x"], params["stem_w"], dy, stride=cfg.stem_stride,
        need_dx=False)


class CyclicBuffer:
    """Holds the most recent `window` frames, oldest first, zero-padded
    until the window has filled."""

    def __init__(self, cfg: ResNetConfig):
        self.cfg = cfg
        self.buffer = np.zeros((cfg.input_len, cfg.window), dtype=cfg.dtype)
        self.n_seen = 0

    def push(self, frame: np.ndarray) -> None:
        self.buffer[:, :-1] = self.buffer[:, 1:]
        self.buffer[:, -1] = frame
        self.n_seen += 1

    @property
    def warm(self) -> bool:
        return self.n_seen >= self.cfg.window


def stream_init(cfg: ResNetConfig) -> CyclicBuffer:
    return CyclicBuffer(cfg)


def stream_step(frame: np.ndarray, state: CyclicBuffer, params: dict,
                cfg: ResNetConfig) -> tuple[float, CyclicBuffer]:
    state.push(np.asarray(frame, dtype=cfg.dtype))
    return float(forward(state.buffer, params, cfg)), state
