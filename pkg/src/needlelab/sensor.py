"""Compression-cavity tip-force sensing and A-scan synthesis.

The needle tip rides on a deformable cavity between tip and sheath. Axial
load shortens the cavity; the cavity length shows up as the position of a
reflectivity peak in a 512-pixel depth scan (A-scan). The mapping is a
saturating exponential spring, so the gap stays positive under any load
and the force is recoverable from the peak position by the closed-form
inverse. That inverse, applied to a sub-pixel peak fit, is the classical
baseline the learned regressors are compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeForce

N_PIXELS = 512
IMAGING_DEPTH_MM = 2.6


@dataclass(frozen=True)
class SensorConfig:
    rest_gap: float = 0.5         # mm, unloaded cavity length
    force_scale: float = 2.0      # N, spring constant of the exponential law
    peak_amplitude: float = 0.9
    peak_sigma_px: float = 2.5
    base_level: float = 0.03      # background reflectivity
    additive_sigma: float = 0.01
    noise: bool = True            # speckle + additive noise on rendering


@dataclass(frozen=True)
class CavityState:
    rest_gap: float
    compression: float

    @property
    def effective_gap(self) -> float:
        return self.rest_gap - self.compression


@dataclass(frozen=True)
class AScanFrame:
    intensities: np.ndarray       # (512,) in [0, 1]
    t: float = 0.0

    def validate(self) -> None:
        if self.intensities.shape != (N_PIXELS,):
            raise ValueError(f"A-scan must have {N_PIXELS} samples, got "
                             f"{self.intensities.shape}")
        if not np.all(np.isfinite(self.intensities)):
            raise ValueError("A-scan contains non-finite values")
        if self.intensities.min() < 0.0 or self.intensities.max() > 1.0:
            raise ValueError("A-scan intensities must lie in [0, 1]")


def cavity_compression(f_tip: float, cfg: SensorConfig = SensorConfig()) -> float:
    """Cavity shortening in mm under the given tip force.

    compression = rest_gap * (1 - exp(-f / force_scale)): monotone,
    saturating at the rest gap, invertible on [0, inf).
    """
    if f_tip < 0:
        raise NegativeForce(f"tip force {f_tip} N is negative")
    return cfg.rest_gap * (1.0 - np.exp(-f_tip / cfg.force_scale))


def force_from_compression(compression: float,
                           cfg: SensorConfig = SensorConfig()) -> float:
    """Closed-form inverse of cavity_compression."""
    ratio = 1.0 - compression / cfg.rest_gap
    if ratio <= 0:
        raise NegativeForce("compression at or beyond the rest gap")
    return -cfg.force_scale * float(np.log(ratio))


def peak_center_px(gap_mm: float) -> float:
    """Sub-pixel position of the cavity reflection for a given gap."""
    return gap_mm / IMAGING_DEPTH_MM * N_PIXELS


def render_ascan(cavity: CavityState, rng: np.random.Generator | None = None,
                 cfg: SensorConfig = SensorConfig(), t: float = 0.0) -> AScanFrame:
    """Synthesize one A-scan for a cavity state.

    A Gaussian reflectivity peak sits at the pixel position of the
    effective gap; the background is a low base level under multiplicative
    speckle (unit-mean exponential) plus additive Gaussian noise. With
    cfg.noise False the speckle factor is 1 and no noise is added.
    """
    frames = render_batch(np.asarray([cavity.effective_gap]), rng, cfg)
    return AScanFrame(intensities=frames[0], t=t)


def render_batch(gaps_mm: np.ndarray, rng: np.random.Generator | None = None,
                 cfg: SensorConfig = SensorConfig()) -> np.ndarray:
    """Vectorized rendering: (n,) gaps -> (n, 512) clipped intensities."""
    gaps_mm = np.asarray(gaps_mm, dtype=np.float64)
    centers = peak_center_px(gaps_mm)[:, None]
    px = np.arange(N_PIXELS, dtype=np.float64)[None, :]
    peak = cfg.peak_amplitude * np.exp(
        -0.5 * ((px - centers) / cfg.peak_sigma_px) ** 2)
    if cfg.noise:
        if rng is None:
            raise ValueError("rng required when noise is enabled")
        speckle = rng.exponential(1.0, size=peak.shape)
        noise = rng.normal(0.0, cfg.additive_sigma, size=peak.shape)
    else:
        speckle = 1.0
        noise = 0.0
    out = peak + cfg.base_level * speckle + noise
    return np.clip(out, 0.0, 1.0)


def sense(f_tip: float, rng: np.random.Generator | None = None,
          cfg: SensorConfig = SensorConfig(), t: float = 0.0) -> AScanFrame:
    """Tip force -> A-scan, composing the cavity law with the renderer."""
    compression = cavity_compression(f_tip, cfg)
    return render_ascan(CavityState(cfg.rest_gap, compression), rng, cfg, t)


def sense_batch(forces: np.ndarray, rng: np.random.Generator | None = None,
                cfg: SensorConfig = SensorConfig()) -> np.ndarray:
    forces = np.asarray(forces, dtype=np.float64)
    if np.any(forces < 0):
        raise NegativeForce("negative force in batch")
    gaps = cfg.rest_gap * np.exp(-forces / cfg.force_scale)
    return render_batch(gaps, rng, cfg)


def peak_pixel(intensities: np.ndarray,
               cfg: SensorConfig = SensorConfig()) -> float:
    """Sub-pixel peak estimate: parabolic fit of log-intensity around the
    argmax after subtracting the nominal background level. For an exact
    Gaussian peak the fit recovers the center exactly."""
    argmax = int(np.argmax(intensities))
    if argmax == 0 or argmax == len(intensities) - 1:
        return float(argmax)
    window = intensities[argmax - 1:argmax + 2] - cfg.base_level
    floor = 1e-9
    logs = np.log(np.maximum(window, floor))
    denom = logs[0] - 2.0 * logs[1] + logs[2]
    if denom >= -1e-12:
        return float(argmax)
    return argmax + 0.5 * (logs[0] - logs[2]) / denom


def force_from_frame(intensities: np.ndarray,
                     cfg: SensorConfig = SensorConfig(),
                     f_max: float = 8.0) -> float:
    """Classical baseline estimator: peak position -> gap -> force."""
    px = peak_pixel(intensities, cfg)
    gap = max(px / N_PIXELS * IMAGING_DEPTH_MM, 1e-6)
    gap = min(gap, cfg.rest_gap)
    force = -cfg.force_scale * float(np.log(gap / cfg.rest_gap))
    return float(np.clip(force, 0.0, f_max))
