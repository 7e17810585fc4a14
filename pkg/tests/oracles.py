"""Independent naive references for the network primitives.

Everything here is written with explicit scalar loops and stays separate
from the vectorized implementations it checks. Deliberately slow; use
tiny shapes.
"""

import math

import numpy as np


def conv1d_ref(x, w, b=None, stride=1):
    """x (B,H,Cin), w (k,Cin,Cout), zero padding k//2."""
    B, H, Cin = x.shape
    k, _, Cout = w.shape
    pad = k // 2
    Ho = (H + 2 * pad - k) // stride + 1
    y = np.zeros((B, Ho, Cout), dtype=np.float64)
    for n in range(B):
        for o in range(Ho):
            for co in range(Cout):
                acc = 0.0
                for tap in range(k):
                    src = o * stride + tap - pad
                    if src < 0 or src >= H:
                        continue
                    for ci in range(Cin):
                        acc += float(x[n, src, ci]) * float(w[tap, ci, co])
                if b is not None:
                    acc += float(b[co])
                y[n, o, co] = acc
    return y


def conv2d_ref(x, w, b=None, stride=(1, 1)):
    """x (B,H,W,Cin), w (kh,kw,Cin,Cout), zero padding (kh//2, kw//2)."""
    B, H, W, Cin = x.shape
    kh, kw, _, Cout = w.shape
    sh, sw = stride
    ph, pw = kh // 2, kw // 2
    Ho = (H + 2 * ph - kh) // sh + 1
    Wo = (W + 2 * pw - kw) // sw + 1
    y = np.zeros((B, Ho, Wo, Cout), dtype=np.float64)
    for n in range(B):
        for oi in range(Ho):
            for oj in range(Wo):
                for co in range(Cout):
                    acc = 0.0
                    for i in range(kh):
                        si = oi * sh + i - ph
                        if si < 0 or si >= H:
                            continue
                        for j in range(kw):
                            sj = oj * sw + j - pw
                            if sj < 0 or sj >= W:
                                continue
                            for ci in range(Cin):
                                acc += float(x[n, si, sj, ci]) * \
                                    float(w[i, j, ci, co])
                    if b is not None:
                        acc += float(b[co])
                    y[n, oi, oj, co] = acc
    return y


def sigmoid_ref(v):
    return 1.0 / (1.0 + math.exp(-v))


def cgru_cell_ref(x_t, h_prev, p):
    """Scalar-loop recurrence step following the gate equations:
    z = sig(w_hz*h + w_xz*x + b_z); r = sig(w_hr*h + w_xr*x + b_r);
    cand = tanh(w_hh*(r.h) + w_xh*x + b_h); h' = (1-z).h + z.cand."""
    az = conv1d_ref(h_prev, p["w_hz"]) + conv1d_ref(x_t, p["w_xz"])
    ar = conv1d_ref(h_prev, p["w_hr"]) + conv1d_ref(x_t, p["w_xr"])
    B, H, C = az.shape
    z = np.zeros_like(az)
    r = np.zeros_like(ar)
    for n in range(B):
        for i in range(H):
            for c in range(C):
                z[n, i, c] = sigmoid_ref(az[n, i, c] + float(p["b_z"][c]))
                r[n, i, c] = sigmoid_ref(ar[n, i, c] + float(p["b_r"][c]))
    rh = np.zeros_like(h_prev, dtype=np.float64)
    for n in range(B):
        for i in range(H):
            for c in range(C):
                rh[n, i, c] = r[n, i, c] * float(h_prev[n, i, c])
    ah = conv1d_ref(rh, p["w_hh"]) + conv1d_ref(x_t, p["w_xh"])
    h_new = np.zeros_like(az)
    for n in range(B):
        for i in range(H):
            for c in range(C):
                cand = math.tanh(ah[n, i, c] + float(p["b_h"][c]))
                h_new[n, i, c] = ((1.0 - z[n, i, c]) * float(h_prev[n, i, c])
                                  + z[n, i, c] * cand)
    return h_new


def dense_ref(x, w, b):
    B, nin = x.shape
    nout = w.shape[1]
    y = np.zeros((B, nout), dtype=np.float64)
    for n in range(B):
        for o in range(nout):
            acc = float(b[o])
            for i in range(nin):
                acc += float(x[n, i]) * float(w[i, o])
            y[n, o] = acc
    return y


def residual_block2d_ref(x, w1, b1, w2, b2, w_skip, stride=(2, 2)):
    """relu(conv(relu(conv(x, w1, stride)), w2) + conv(x, w_skip, stride))."""
    a1 = np.maximum(conv2d_ref(x, w1, b1, stride), 0.0)
    a2 = conv2d_ref(a1, w2, b2)
    s = conv2d_ref(x, w_skip, None, stride)
    return np.maximum(a2 + s, 0.0)


def residual_block1d_ref(x, w1, b1, w2, b2, w_skip, stride=2):
    a1 = np.maximum(conv1d_ref(x, w1, b1, stride), 0.0)
    a2 = conv1d_ref(a1, w2, b2)
    s = conv1d_ref(x, w_skip, None, stride)
    return np.maximum(a2 + s, 0.0)
