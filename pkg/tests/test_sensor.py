import math

import numpy as np
import pytest

from needlelab.errors import NegativeForce
from needlelab.sensor import (AScanFrame, CavityState, IMAGING_DEPTH_MM,
                              N_PIXELS, SensorConfig, cavity_compression,
                              force_from_frame, peak_center_px, peak_pixel,
                              render_ascan, sense, sense_batch)

NOISELESS = SensorConfig(noise=False)


def test_compression_zero_at_zero_force():
    assert cavity_compression(0.0) == 0.0


def test_compression_closed_form():
    expected = 0.5 * (1.0 - math.exp(-1.0))
    assert cavity_compression(2.0) == pytest.approx(expected, abs=1e-12)


def test_compression_saturates_below_rest_gap():
    assert cavity_compression(50.0) < 0.5
    assert cavity_compression(50.0) == pytest.approx(0.5, abs=1e-9)
    assert cavity_compression(1e6) <= 0.5  # underflows to the asymptote


def test_negative_force_rejected():
    with pytest.raises(NegativeForce):
        cavity_compression(-0.1)
    with pytest.raises(NegativeForce):
        sense_batch(np.array([1.0, -0.5]), np.random.default_rng(0))


def test_peak_position_at_rest():
    assert peak_center_px(0.5) == pytest.approx(0.5 / 2.6 * 512)
    assert peak_center_px(0.5) == pytest.approx(98.46, abs=0.01)


def test_render_noiseless_argmax_at_rounded_center():
    for force in [0.0, 0.5, 1.0, 2.0, 3.5, 5.0]:
        frame = sense(force, cfg=NOISELESS)
        gap = 0.5 * math.exp(-force / 2.0)
        center = gap / IMAGING_DEPTH_MM * N_PIXELS
        assert int(np.argmax(frame.intensities)) == round(center)


def test_full_compression_peak_at_zero():
    frame = render_ascan(CavityState(rest_gap=0.5, compression=0.5),
                         cfg=NOISELESS)
    assert int(np.argmax(frame.intensities)) == 0


def test_five_newton_peak_position():
    gap = 0.5 * math.exp(-2.5)
    assert gap == pytest.approx(0.041, abs=5e-4)
    assert peak_center_px(gap) == pytest.approx(8.08, abs=0.01)
    frame = sense(5.0, cfg=NOISELESS)
    assert int(np.argmax(frame.intensities)) == round(peak_center_px(gap))


def test_sense_deterministic_given_seed():
    a = sense(1.7, np.random.default_rng(42))
    b = sense(1.7, np.random.default_rng(42))
    assert np.array_equal(a.intensities, b.intensities)


def test_rng_required_with_noise():
    with pytest.raises(ValueError):
        sense(1.0)


def test_frame_invariants_over_many_random_forces():
    # spec property: 1e6 random forces in [0, 5], every frame valid
    rng = np.random.default_rng(123)
    remaining = 1_000_000
    while remaining > 0:
        n = min(remaining, 65536)
        forces = rng.uniform(0.0, 5.0, size=n)
        frames = sense_batch(forces, rng)
        assert frames.shape == (n, N_PIXELS)
        assert np.all(np.isfinite(frames))
        assert frames.min() >= 0.0 and frames.max() <= 1.0
        remaining -= n


def test_peak_strictly_decreasing_in_force():
    forces = np.linspace(0.0, 5.0, 101)
    peaks = [peak_pixel(sense(f, cfg=NOISELESS).intensities, NOISELESS)
             for f in forces]
    assert all(b < a for a, b in zip(peaks, peaks[1:]))


def test_analytic_inverse_recovers_force():
    # classical baseline oracle: error under 0.02 N across [0, 5] N
    forces = np.linspace(0.0, 5.0, 501)
    frames = sense_batch(forces, cfg=NOISELESS)
    recovered = np.array([force_from_frame(fr, NOISELESS) for fr in frames])
    assert np.max(np.abs(recovered - forces)) < 0.02


def test_frame_validation():
    frame = sense(1.0, np.random.default_rng(7))
    frame.validate()
    with pytest.raises(ValueError):
        AScanFrame(intensities=np.zeros(100)).validate()
    with pytest.raises(ValueError):
        AScanFrame(intensities=np.full(512, 2.0)).validate()
