"""Array primitives with explicit forward and backward passes.

Shape conventions: 1-D feature maps are (B, H, C), 2-D maps are
(B, H, W, C). Kernels are (k, Cin, Cout) and (kh, kw, Cin, Cout) with odd
spatial extent; padding is half the kernel so stride-1 convolutions
preserve the spatial size. Convolutions are lowered to one GEMM via an
im2col gather; backward recomputes the gather instead of caching it.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ShapeMismatch(msg)


# ---------------------------------------------------------------- 1-D conv

def conv1d_cols(x: np.ndarray, k: int, stride: int = 1) -> np.ndarray:
    """im2col for (B, H, C) input: (B*Ho, k*C) patch matrix."""
    B, H, C = x.shape
    pad = k // 2
    xp = np.zeros((B, H + 2 * pad, C), dtype=x.dtype)
    xp[:, pad:pad + H] = x
    win = sliding_window_view(xp, k, axis=1)        # (B, Hp-k+1, C, k)
    win = win[:, ::stride]
    Ho = win.shape[1]
    cols = win.transpose(0, 1, 3, 2).reshape(B * Ho, k * C)
    return np.ascontiguousarray(cols)


def conv1d_out_len(H: int, k: int, stride: int) -> int:
    return (H + 2 * (k // 2) - k) // stride + 1


def conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None,
           stride: int = 1) -> np.ndarray:
    B, H, C = x.shape
    k, cin, cout = w.shape
    _check(cin == C, f"conv1d: input has {C} channels, kernel expects {cin}")
    _check(k % 2 == 1, "conv1d: kernel width must be odd")
    cols = conv1d_cols(x, k, stride)
    y = cols @ w.reshape(k * cin, cout)
    if b is not None:
        y += b
    return y.reshape(B, -1, cout)


def conv1d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                    stride: int = 1, need_dx: bool = True):
    """Gradients of conv1d. Returns (dx, dw, db); dx is None when skipped."""
    B, H, C = x.shape
    k, cin, cout = w.shape
    Ho = dy.shape[1]
    dy2 = dy.reshape(B * Ho, cout)
    cols = conv1d_cols(x, k, stride)
    dw = (cols.T @ dy2).reshape(k, cin, cout)
    db = dy2.sum(axis=0)
    dx = None
    if need_dx:
        dcol = (dy2 @ w.reshape(k * cin, cout).T).reshape(B, Ho, k, cin)
        pad = k // 2
        dxp = np.zeros((B, H + 2 * pad, C), dtype=x.dtype)
        for tap in range(k):
            dxp[:, tap:tap + Ho * stride:stride] += dcol[:, :, tap]
        dx = dxp[:, pad:pad + H]
    return dx, dw, db


# ---------------------------------------------------------------- 2-D conv

def conv2d_cols(x: np.ndarray, kh: int, kw: int,
                stride: tuple[int, int]) -> np.ndarray:
    B, H, W, C = x.shape
    sh, sw = stride
    ph, pw = kh // 2, kw // 2
    xp = np.zeros((B, H + 2 * ph, W + 2 * pw, C), dtype=x.dtype)
    xp[:, ph:ph + H, pw:pw + W] = x
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::sh, ::sw]                        # (B, Ho, Wo, C, kh, kw)
    B_, Ho, Wo = win.shape[:3]
    cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(B * Ho * Wo, kh * kw * C)
    return np.ascontiguousarray(cols), Ho, Wo


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None,
           stride: tuple[int, int] = (1, 1)) -> np.ndarray:
    B, H, W, C = x.shape
    kh, kw, cin, cout = w.shape
    _check(cin == C, f"conv2d: input has {C} channels, kernel expects {cin}")
    _check(kh % 2 == 1 and kw % 2 == 1, "conv2d: kernel extent must be odd")
    cols, Ho, Wo = conv2d_cols(x, kh, kw, stride)
    y = cols @ w.reshape(kh * kw * cin, cout)
    if b is not None:
        y += b
    return y.reshape(B, Ho, Wo, cout)


def conv2d_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                    stride: tuple[int, int] = (1, 1), need_dx: bool = True):
    B, H, W, C = x.shape
    kh, kw, cin, cout = w.shape
    sh, sw = stride
    _, Ho, Wo, _ = dy.shape
    dy2 = dy.reshape(B * Ho * Wo, cout)
    cols, _, _ = conv2d_cols(x, kh, kw, stride)
    dw = (cols.T @ dy2).reshape(kh, kw, cin, cout)
    db = dy2.sum(axis=0)
    dx = None
    if need_dx:
        dcol = (dy2 @ w.reshape(kh * kw * cin, cout).T).reshape(
            B, Ho, Wo, kh, kw, cin)
        ph, pw = kh // 2, kw // 2
        dxp = np.zeros((B, H + 2 * ph, W + 2 * pw, C), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                dxp[:, i:i + Ho * sh:sh, j:j + Wo * sw:sw] += dcol[:, :, :, i, j]
        dx = dxp[:, ph:ph + H, pw:pw + W]
    return dx, dw, db


# ----------------------------------------------------------------- dense

def dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check(x.shape[1] == w.shape[0],
           f"dense: {x.shape[1]} inputs vs weight rows {w.shape[0]}")
    return x @ w + b


def dense_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray):
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


# ------------------------------------------------------------ activations

def sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def sigmoid_backward(dy: np.ndarray, s: np.ndarray) -> np.ndarray:
    return dy * s * (1.0 - s)


def tanh_backward(dy: np.ndarray, th: np.ndarray) -> np.ndarray:
    return dy * (1.0 - th * th)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    return dy * (y > 0)


# ---------------------------------------------------------------- pooling

def avgpool_last(x: np.ndarray, factor: int) -> np.ndarray:
    """Average-pool the trailing axis by an integer factor."""
    if factor == 1:
        return x
    _check(x.shape[-1] % factor == 0,
           f"pool: {x.shape[-1]} not divisible by {factor}")
    return x.reshape(*x.shape[:-1], x.shape[-1] // factor, factor).mean(-1)


def global_avgpool(x: np.ndarray) -> np.ndarray:
    """(B, ..., C) -> (B, C), averaging all interior axes."""
    B, C = x.shape[0], x.shape[-1]
    return x.reshape(B, -1, C).mean(axis=1)


def global_avgpool_backward(dy: np.ndarray, x_shape: tuple) -> np.ndarray:
    B, C = dy.shape
    n = int(np.prod(x_shape[1:-1]))
    dx = np.broadcast_to(dy[:, None, :] / n, (B, n, C))
    return dx.reshape(x_shape).astype(dy.dtype, copy=False)


# ------------------------------------------------------------------ loss

def mse(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. pred."""
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff
