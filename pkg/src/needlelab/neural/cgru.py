"""Convolutional GRU force regressor over A-scan streams.

Each timestep consumes one depth scan. The gate transforms are 1-D
convolutions along the scan axis instead of dense products:

    z_t = sigmoid(w_hz * h_prev + w_xz * x_t + b_z)      (update gate)
    r_t = sigmoid(w_hr * h_prev + w_xr * x_t + b_r)      (reset gate)
    hcand = tanh(w_hh * (r_t . h_prev) + w_xh * x_t + b_h)
    h_t = (1 - z_t) . h_prev + z_t . hcand

where * is a same-padded convolution and . the elementwise product. The
final hidden map feeds a 1-D residual head: two stride-2 blocks, then the
feature map is flattened into two fully connected layers producing the
scalar force. Flattening (rather than pooling) keeps the head sensitive
to the absolute peak position along the scan, which is where the force
lives.

A fixed average-pool over the scan axis in front of the cell keeps the
recurrence cheap enough to train on a single CPU core; pool=1 disables
it. The update-gate bias starts negative so the cell integrates history
over tens of frames instead of forgetting it. For speed the three
x-convolutions run as one merged kernel and the z/r h-convolutions as
another; streaming inference uses the identical code path at batch size
1, so a 50-frame stream reproduces the batched forward pass bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from . import ops

ARCH_NAME = "cgru"


@dataclass(frozen=True)
class CgruConfig:
    input_len: int = 512
    window: int = 50
    pool: int = 8
    channels: int = 16
    kernel: int = 7
    head_channels: int = 32
    head_kernel: int = 3
    fc_dim: int = 32
    update_bias: float = -1.0
    dtype: str = "float32"

    @property
    def cell_len(self) -> int:
        return self.input_len // self.pool

    @property
    def flat_dim(self) -> int:
        len_after = ops.conv1d_out_len(self.cell_len, self.head_kernel, 2)
        len_after = ops.conv1d_out_len(len_after, self.head_kernel, 2)
        return len_after * self.head_channels

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "input_len", "window", "pool", "channels", "kernel",
            "head_channels", "head_kernel", "fc_dim", "update_bias",
            "dtype")}


def init_params(cfg: CgruConfig, rng: np.random.Generator) -> dict:
    dt = np.dtype(cfg.dtype)
    k, c, hc, fc = cfg.kernel, cfg.channels, cfg.head_channels, cfg.fc_dim
    hk = cfg.head_kernel

    def normal(shape, fan_in, gain=1.0):
        return (gain * rng.standard_normal(shape) / np.sqrt(fan_in)).astype(dt)

    p = {
        "w_xz": normal((k, 1, c), k), "w_xr": normal((k, 1, c), k),
        "w_xh": normal((k, 1, c), k),
        "w_hz": normal((k, c, c), k * c), "w_hr": normal((k, c, c), k * c),
        "w_hh": normal((k, c, c), k * c),
        "b_z": np.full(c, cfg.update_bias, dt),
        "b_r": np.zeros(c, dt), "b_h": np.zeros(c, dt),
        "h1_w1": normal((hk, c, hc), hk * c, np.sqrt(2)),
        "h1_b1": np.zeros(hc, dt),
        "h1_w2": normal((hk, hc, hc), hk * hc, np.sqrt(2)),
        "h1_b2": np.zeros(hc, dt),
        "h1_skip": normal((1, c, hc), c),
        "h2_w1": normal((hk, hc, hc), hk * hc, np.sqrt(2)),
        "h2_b1": np.zeros(hc, dt),
        "h2_w2": normal((hk, hc, hc), hk * hc, np.sqrt(2)),
        "h2_b2": np.zeros(hc, dt),
        "h2_skip": normal((1, hc, hc), hc),
        "fc1_w": normal((cfg.flat_dim, fc), cfg.flat_dim, np.sqrt(2)),
        "fc1_b": np.zeros(fc, dt),
        "fc2_w": normal((fc, 1), fc),
        "fc2_b": np.zeros(1, dt),
    }
    return p


def zero_params(cfg: CgruConfig) -> dict:
    rng = np.random.default_rng(0)
    return {k: np.zeros_like(v) for k, v in init_params(cfg, rng).items()}


def _runtime(p: dict) -> dict:
    """Merged gate kernels, built once per forward call."""
    return {
        "w_x": np.concatenate([p["w_xz"], p["w_xr"], p["w_xh"]], axis=2),
        "w_hzr": np.concatenate([p["w_hz"], p["w_hr"]], axis=2),
        "b_zr": np.concatenate([p["b_z"], p["b_r"]]),
    }


def cell(x_t: np.ndarray, h_prev: np.ndarray, p: dict,
         cache: list | None = None, rt: dict | None = None) -> np.ndarray:
    """One recurrence step. x_t is (B, H, Cin), h_prev is (B, H, C)."""
    if x_t.shape[:2] != h_prev.shape[:2]:
        raise ShapeMismatch(f"cell: x {x_t.shape} vs h {h_prev.shape}")
    if rt is None:
        rt = _runtime(p)
    c = h_prev.shape[-1]
    xg = ops.conv1d(x_t, rt["w_x"])                     # (B, H, 3C)
    azr = ops.conv1d(h_prev, rt["w_hzr"])
    azr += xg[..., :2 * c]
    azr += rt["b_zr"]
    zr = ops.sigmoid(azr)
    z, r = zr[..., :c], zr[..., c:]
    ah = ops.conv1d(r * h_prev, p["w_hh"])
    ah += xg[..., 2 * c:]
    ah += p["b_h"]
    hcand = np.tanh(ah)
    h = (1.0 - z) * h_prev + z * hcand
    if cache is not None:
        cache.append((h_prev, z, r, hcand))
    return h


def head_forward(h: np.ndarray, p: dict, cache: dict | None = None) -> np.ndarray:
    """Regression head on the final hidden map (B, H, C) -> (B,)."""
    a1 = ops.relu(ops.conv1d(h, p["h1_w1"], p["h1_b1"], stride=2))
    o1 = ops.relu(ops.conv1d(a1, p["h1_w2"], p["h1_b2"])
                  + ops.conv1d(h, p["h1_skip"], stride=2))
    a3 = ops.relu(ops.conv1d(o1, p["h2_w1"], p["h2_b1"], stride=2))
    o2 = ops.relu(ops.conv1d(a3, p["h2_w2"], p["h2_b2"])
                  + ops.conv1d(o1, p["h2_skip"], stride=2))
    flat = o2.reshape(o2.shape[0], -1)
    f1 = ops.relu(ops.dense(flat, p["fc1_w"], p["fc1_b"]))
    out = ops.dense(f1, p["fc2_w"], p["fc2_b"])
    if cache is not None:
        cache.update(h=h, a1=a1, o1=o1, a3=a3, o2=o2, flat=flat, f1=f1)
    return out[:, 0]


def head_backward(cache: dict, p: dict, dout: np.ndarray, grads: dict):
    """Backward through the head; returns dL/dh."""
    h, a1, o1, a3, o2 = (cache["h"], cache["a1"], cache["o1"], cache["a3"],
                         cache["o2"])
    flat, f1 = cache["flat"], cache["f1"]
    df1, grads["fc2_w"][...], grads["fc2_b"][...] = ops.dense_backward(
        f1, p["fc2_w"], dout[:, None])
    df1 = ops.relu_backward(df1, f1)
    dflat, grads["fc1_w"][...], grads["fc1_b"][...] = ops.dense_backward(
        flat, p["fc1_w"], df1)
    do2 = ops.relu_backward(dflat.reshape(o2.shape), o2)
    da3, grads["h2_w2"][...], grads["h2_b2"][...] = ops.conv1d_backward(
        a3, p["h2_w2"], do2)
    da3 = ops.relu_backward(da3, a3)
    do1a, grads["h2_w1"][...], grads["h2_b1"][...] = ops.conv1d_backward(
        o1, p["h2_w1"], da3, stride=2)
    do1b, grads["h2_skip"][...], _ = ops.conv1d_backward(
        o1, p["h2_skip"], do2, stride=2)
    do1 = ops.relu_backward(do1a + do1b, o1)
    da1, grads["h1_w2"][...], grads["h1_b2"][...] = ops.conv1d_backward(
        a1, p["h1_w2"], do1)
    da1 = ops.relu_backward(da1, a1)
    dha, grads["h1_w1"][...], grads["h1_b1"][...] = ops.conv1d_backward(
        h, p["h1_w1"], da1, stride=2)
    dhb, grads["h1_skip"][...], _ = ops.conv1d_backward(
        h, p["h1_skip"], do1, stride=2)
    return dha + dhb


def pool_input(x: np.ndarray, cfg: CgruConfig) -> np.ndarray:
    """(..., input_len) -> (..., cell_len, 1) fixed average pooling."""
    pooled = ops.avgpool_last(x, cfg.pool)
    return pooled[..., None]


def forward(seq: np.ndarray, params: dict, cfg: CgruConfig,
            cache: dict | None = None) -> np.ndarray:
    """Sequence(s) of A-scans -> force estimate(s).

    seq is (T, input_len) for one sequence or (B, T, input_len) for a
    batch; returns a scalar or (B,) accordingly. The hidden state starts
    at zero.
    """
    single = seq.ndim == 2
    x = seq[None] if single else seq
    if x.shape[2] != cfg.input_len:
        raise ShapeMismatch(f"expected scan length {cfg.input_len}, "
                            f"got {x.shape[2]}")
    x = pool_input(np.asarray(x, dtype=cfg.dtype), cfg)
    B, T = x.shape[:2]
    rt = _runtime(params)
    h = np.zeros((B, cfg.cell_len, cfg.channels), dtype=cfg.dtype)
    step_caches = [] if cache is not None else None
    for t in range(T):
        h = cell(x[:, t], h, params, step_caches, rt)
    head_cache = {} if cache is not None else None
    out = head_forward(h, params, head_cache)
    if cache is not None:
        cache.update(steps=step_caches, head=head_cache, x=x, rt=rt)
    return out[0] if single else out


def loss_and_grads(x: np.ndarray, y: np.ndarray, params: dict,
                   cfg: CgruConfig) -> tuple[float, dict]:
    """MSE loss over a batch and gradients for every parameter.

    Backpropagation through time recomputes the im2col gathers instead of
    caching them; the per-gate x-kernel gradients are accumulated in one
    GEMM over all timesteps at the end.
    """
    cache: dict = {}
    pred = forward(x, params, cfg, cache)
    loss, dpred = ops.mse(pred, np.asarray(y, dtype=pred.dtype))
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    dh = head_backward(cache["head"], params, dpred, grads)

    xp, rt, steps = cache["x"], cache["rt"], cache["steps"]
    B, T = xp.shape[:2]
    c = cfg.channels
    da_all = np.zeros((B, T, cfg.cell_len, 3 * c), dtype=xp.dtype)
    for t in reversed(range(T)):
        h_prev, z, r, hcand = steps[t]
        dz = dh * (hcand - h_prev)
        dhcand = dh * z
        dh_prev = dh * (1.0 - z)

        dah = ops.tanh_backward(dhcand, hcand)
        da_all[:, t, :, 2 * c:] = dah
        drh, dw_hh, db_h = ops.conv1d_backward(r * h_prev, params["w_hh"],
                                               dah)
        grads["w_hh"] += dw_hh
        grads["b_h"] += db_h
        dh_prev += drh * r
        dr = drh * h_prev

        da_all[:, t, :, :c] = ops.sigmoid_backward(dz, z)
        da_all[:, t, :, c:2 * c] = ops.sigmoid_backward(dr, r)
        dzr = da_all[:, t, :, :2 * c]
        dhp, dw_hzr, db_zr = ops.conv1d_backward(h_prev, rt["w_hzr"], dzr)
        grads["w_hz"] += dw_hzr[:, :, :c]
        grads["w_hr"] += dw_hzr[:, :, c:]
        grads["b_z"] += db_zr[:c]
        grads["b_r"] += db_zr[c:]
        dh = dh_prev + dhp

    # x-side kernels see every timestep: one merged GEMM over B*T rows
    x_flat = xp.reshape(B * T, cfg.cell_len, 1)
    da_flat = da_all.reshape(B * T, cfg.cell_len, 3 * c)
    _, dw_x, _ = ops.conv1d_backward(x_flat, rt["w_x"], da_flat,
                                     need_dx=False)
    grads["w_xz"][...] = dw_x[:, :, :c]
    grads["w_xr"][...] = dw_x[:, :, c:2 * c]
    grads["w_xh"][...] = dw_x[:, :, 2 * c:]
    return loss, grads


def stream_init(cfg: CgruConfig) -> np.ndarray:
    return np.zeros((1, cfg.cell_len, cfg.channels), dtype=cfg.dtype)


def stream_step(frame: np.ndarray, hidden: np.ndarray, params: dict,
                cfg: CgruConfig) -> tuple[float, np.ndarray]:
    """One frame in, (force, new hidden) out. Amortized cost independent
    of stream length; identical arithmetic to forward() at batch size 1."""
    x = pool_input(np.asarray(frame, dtype=cfg.dtype).reshape(1, -1), cfg)
    h = cell(x, hidden, params)
    return float(head_forward(h, params)[0]), h
