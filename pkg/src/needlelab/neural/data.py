"""Calibration data: cyclic load profiles and synchronized A-scan/force
records for training the force regressors.

The calibration procedure mimics pressing the needle tip against a rigid
surface with slowly varying axial load: a sum of low-frequency sinusoids,
rectified and scaled to the 0..5 N range, sampled at the control rate.
Windows of `window` consecutive frames labelled with the force at the
final frame form the supervised dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..container import read_container, write_container
from ..sensor import SensorConfig, sense_batch

RATE_HZ = 200.0
F_MAX = 5.0
WINDOW = 50


@dataclass
class CalibrationSet:
    frames: np.ndarray          # (n, 512) float32
    forces: np.ndarray          # (n,) float64
    t: np.ndarray               # (n,) float64
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.forces)

    def n_windows(self, window: int = WINDOW) -> int:
        return max(self.n - window + 1, 0)

    def window_ends(self, window: int = WINDOW) -> np.ndarray:
        """End indices of every stride-1 window."""
        return np.arange(window - 1, self.n)

    def window_frames(self, ends: np.ndarray, window: int = WINDOW) -> np.ndarray:
        """(B, window, 512) gather of the windows ending at `ends`."""
        idx = ends[:, None] - (window - 1) + np.arange(window)[None, :]
        return self.frames[idx]


def cyclic_profile(n: int, rng: np.random.Generator, rate_hz: float = RATE_HZ,
                   n_components: int = 3, freq_range: tuple = (0.2, 2.0),
                   f_max: float = F_MAX) -> tuple[np.ndarray, np.ndarray]:
    """Rectified sum of sinusoids with random phases and frequencies,
    scaled so the peak equals f_max. Returns (t, force)."""
    t = np.arange(n) / rate_hz
    freqs = rng.uniform(*freq_range, size=n_components)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_components)
    amps = rng.uniform(0.5, 1.5, size=n_components)
    s = np.zeros(n)
    for a, f, ph in zip(amps, freqs, phases):
        s += a * np.sin(2.0 * np.pi * f * t + ph)
    s = np.abs(s)
    s *= f_max / s.max()
    return t, s


def generate_calibration(n: int, seed: int,
                         sensor_cfg: SensorConfig = SensorConfig(),
                         profile: str = "cyclic",
                         chunk: int = 8192) -> CalibrationSet:
    """Render n synchronized (A-scan, force) records. Deterministic in
    (n, seed, sensor_cfg)."""
    if n < 1000:
        raise ValueError(f"calibration needs n >= 1000, got {n}")
    if profile != "cyclic":
        raise ValueError(f"unknown profile {profile!r}")
    rng = np.random.default_rng(seed)
    t, forces = cyclic_profile(n, rng, rate_hz=RATE_HZ)
    frames = np.empty((n, 512), dtype=np.float32)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        frames[lo:hi] = sense_batch(forces[lo:hi], rng, sensor_cfg)
    meta = {"n": n, "seed": seed, "profile": profile, "rate_hz": RATE_HZ,
            "f_max": F_MAX, "noise": sensor_cfg.noise}
    return CalibrationSet(frames=frames, forces=forces, t=t, meta=meta)


def save_calibration(dataset: CalibrationSet, path) -> None:
    write_container(path, {"frames": dataset.frames,
                           "forces": dataset.forces, "t": dataset.t},
                    {"kind": "calibration", **dataset.meta})


def load_calibration(path) -> CalibrationSet:
    arrays, meta = read_container(path)
    if meta.get("kind") != "calibration":
        raise ValueError(f"{path}: not a calibration dataset")
    return CalibrationSet(frames=arrays["frames"], forces=arrays["forces"],
                          t=arrays["t"], meta=meta)


def coverage(forces: np.ndarray, f_max: float = F_MAX,
             bin_width: float = 0.1) -> float:
    """Fraction of force bins in [0, f_max] hit by at least one sample."""
    n_bins = int(round(f_max / bin_width))
    hist, _ = np.histogram(forces, bins=n_bins, range=(0.0, f_max))
    return float(np.count_nonzero(hist) / n_bins)
