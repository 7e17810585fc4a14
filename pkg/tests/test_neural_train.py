import numpy as np
import pytest

from needlelab.errors import DegenerateVariance, NonFiniteLoss
from needlelab.neural import (CalibrationSet, CgruConfig, ResNetConfig,
                              TrainConfig, cgru, coverage, cyclic_profile,
                              evaluate_stream, generate_calibration,
                              load_calibration, load_checkpoint, pearson,
                              save_calibration, save_checkpoint,
                              split_window_ends, train)
from needlelab.sensor import SensorConfig

TINY_CGRU = CgruConfig(input_len=64, pool=4, channels=4, kernel=5,
                       head_channels=4, fc_dim=4, window=10)
TINY_RESNET = ResNetConfig(input_len=64, window=10, stem_channels=2,
                           stem_kernel=3, stem_stride=(2, 1),
                           block_channels=(4, 4))


def tiny_dataset(n=1500, seed=0, constant=None, input_len=64):
    """Small synthetic dataset; frames are low-res renders."""
    rng = np.random.default_rng(seed)
    if constant is None:
        t, forces = cyclic_profile(n, rng)
    else:
        t = np.arange(n) / 200.0
        forces = np.full(n, float(constant))
    # cheap stand-in frames: peak position encodes the force
    px = np.linspace(0, 1, input_len)
    centers = 0.19 * np.exp(-forces / 2.0)
    frames = np.exp(-0.5 * ((px[None, :] - centers[:, None]) / 0.01) ** 2)
    frames += rng.normal(0, 0.01, size=frames.shape)
    return CalibrationSet(frames=np.clip(frames, 0, 1).astype(np.float32),
                          forces=forces, t=t, meta={"n": n, "seed": seed})


def test_window_count_formula():
    ds = CalibrationSet(frames=np.zeros((60000, 512), np.float32),
                        forces=np.zeros(60000), t=np.zeros(60000))
    assert ds.n_windows(window=50) == 59951  # n - T + 1


def test_calibration_labels_and_coverage():
    rng = np.random.default_rng(3)
    _, forces = cyclic_profile(60000, rng)
    assert forces.min() >= 0.0
    assert forces.max() == pytest.approx(5.0)
    assert coverage(forces) >= 0.95


def test_generate_calibration_deterministic_and_valid():
    a = generate_calibration(2000, seed=9)
    b = generate_calibration(2000, seed=9)
    assert np.array_equal(a.frames, b.frames)
    assert np.array_equal(a.forces, b.forces)
    assert a.frames.shape == (2000, 512)
    assert a.frames.min() >= 0.0 and a.frames.max() <= 1.0
    assert a.n_windows() == 2000 - 50 + 1


def test_generate_calibration_rejects_tiny_n():
    with pytest.raises(ValueError):
        generate_calibration(100, seed=0)


def test_dataset_roundtrip(tmp_path):
    ds = generate_calibration(1200, seed=4)
    path = tmp_path / "calib.bin"
    save_calibration(ds, path)
    loaded = load_calibration(path)
    assert np.array_equal(loaded.frames, ds.frames)
    assert np.array_equal(loaded.forces, ds.forces)
    assert loaded.meta["seed"] == 4


def test_split_has_no_shared_frames():
    cfg = TrainConfig(window=10, val_fraction=0.1)
    train_ends, val_ends = split_window_ends(1000, cfg)
    train_frames = set()
    for e in train_ends:
        train_frames.update(range(e - 9, e + 1))
    val_frames = set()
    for e in val_ends:
        val_frames.update(range(e - 9, e + 1))
    assert not train_frames & val_frames


def test_constant_label_training_converges():
    ds = tiny_dataset(n=1200, constant=2.5)
    cfg = TrainConfig(epochs=10, batch=32, window=10, seed=1, train_stride=5,
                      val_stride=5)
    params, history = train(ds, cfg, "cgru", TINY_CGRU)
    assert history[-1]["val_mae"] < 0.01


def test_training_deterministic():
    ds = tiny_dataset(n=800)
    cfg = TrainConfig(epochs=2, batch=32, window=10, seed=7, train_stride=4,
                      val_stride=4)
    p1, h1 = train(ds, cfg, "cgru", TINY_CGRU)
    p2, h2 = train(ds, cfg, "cgru", TINY_CGRU)
    assert h1 == h2
    assert abs(h1[-1]["train_mse"] - h2[-1]["train_mse"]) < 1e-10
    for k in p1:
        assert np.array_equal(p1[k], p2[k])


def test_nonfinite_loss_raises():
    ds = tiny_dataset(n=800)
    cfg = TrainConfig(epochs=50, batch=32, window=10, seed=1, lr=1e18,
                      train_stride=4, val_stride=4)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFiniteLoss):
            train(ds, cfg, "cgru", TINY_CGRU)


def test_trained_model_is_order_sensitive():
    ds = tiny_dataset(n=2000)
    cfg = TrainConfig(epochs=4, batch=32, window=10, seed=2, lr=3e-3,
                      train_stride=3, val_stride=3)
    params, _ = train(ds, cfg, "cgru", TINY_CGRU)
    # a window over a rising force flank, then the same frames shuffled
    ends = np.array([800])
    win = ds.window_frames(ends, 10)[0]
    base = cgru.forward(win, params, TINY_CGRU)
    swapped = win.copy()
    swapped[[0, 9]] = swapped[[9, 0]]
    assert cgru.forward(swapped, params, TINY_CGRU) != base


def test_resnet_training_runs():
    ds = tiny_dataset(n=1000)
    cfg = TrainConfig(epochs=2, batch=32, window=10, seed=3, train_stride=5,
                      val_stride=5)
    params, history = train(ds, cfg, "resnet", TINY_RESNET)
    assert len(history) == 2
    assert np.isfinite(history[-1]["val_mae"])


def test_pearson_branches():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert pearson(y, y) == pytest.approx(1.0)
    assert pearson(-y, y) == pytest.approx(-1.0)
    with pytest.raises(DegenerateVariance):
        pearson(y, np.ones(4))


def test_evaluate_stream_reports_null_pcc_for_constant_predictor():
    ds = tiny_dataset(n=300)
    params = cgru.zero_params(TINY_CGRU)
    params["fc2_b"][:] = 1.0
    metrics, preds = evaluate_stream("cgru", params, TINY_CGRU,
                                     ds.frames[:100], ds.forces[:100],
                                     time_tt=False)
    assert metrics["pcc"] is None
    assert np.allclose(preds, 1.0)
    assert metrics["n_warmup"] == 9


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    params = cgru.init_params(TINY_CGRU, rng)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, "cgru", params, TINY_CGRU,
                    train_cfg={"epochs": 2}, meta={"note": "test"})
    arch, loaded, cfg, meta = load_checkpoint(path)
    assert arch == "cgru"
    assert cfg == TINY_CGRU
    assert meta["train_config"] == {"epochs": 2}
    for k in params:
        assert np.array_equal(loaded[k],
                              np.asarray(params[k], dtype=np.float32))


def test_checkpoint_bytes_deterministic(tmp_path):
    params = cgru.init_params(TINY_CGRU, np.random.default_rng(5))
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, "cgru", params, TINY_CGRU)
    save_checkpoint(p2, "cgru", params, TINY_CGRU)
    assert p1.read_bytes() == p2.read_bytes()
