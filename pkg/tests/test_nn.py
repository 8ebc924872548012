"""Hand-written classifier: forward passes against worked examples, exact
gradients against finite differences, checkpoints, training behavior."""

import numpy as np
import pytest

from dtwadv.nn import (
    PRESETS,
    ArchitectureSpec,
    Classifier,
    Conv1D,
    Dense,
    MaxPool1D,
    TrainConfig,
    build_preset,
    cnn_spec,
    cross_entropy,
    finite_diff_check,
    input_gradient,
    kink_margin,
    load_checkpoint,
    mlp_spec,
    save_checkpoint,
    softmax,
    train,
)
from dtwadv.nn import CHECKPOINT_MAGIC
from dtwadv.signal import split, synth_two_class

# ------------------------------------------------------------------ hand forward


def _hand_mlp():
    """2-in, 2-hidden ReLU, 2-out linear with every weight set by hand.

    theta layout: W1 row-major, b1, W2 row-major, b2.
    W1 = I, b1 = 0          -> hidden = relu(x)
    W2 = [[.5, 1], [1, 2]]  -> scores = W2 @ hidden + b2
    b2 = [2, 1]
    """
    spec = ArchitectureSpec((Dense(2), Dense(2, relu=False)), 1, 2, 2)
    theta = np.array([1, 0, 0, 1, 0, 0, 0.5, 1, 1, 2, 2, 1], dtype=np.float64)
    return Classifier(spec, theta=theta)


def test_hand_mlp_forward():
    F = _hand_mlp()
    # x = [1, 2]: hidden = [1, 2]; scores = [.5 + 2 + 2, 1 + 4 + 1]
    assert np.array_equal(F.forward(np.array([1.0, 2.0])), [4.5, 6.0])
    # negative input clips at the hidden ReLU
    assert np.array_equal(F.forward(np.array([-3.0, 2.0])), [0 + 2 + 2, 0 + 4 + 1])
    assert F.predict(np.array([1.0, 2.0])) == 1


def test_hand_mlp_input_gradient():
    F = _hand_mlp()
    # All hidden units active -> d score_0 / dx = W2[0] @ W1 = [0.5, 1]
    g = input_gradient(F, np.array([1.0, 2.0]), np.array([1.0, 0.0]))
    assert np.array_equal(g, [[0.5, 1.0]])
    # upstream mixes rows linearly
    g2 = input_gradient(F, np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    assert np.array_equal(g2, [[1.5, 3.0]])


def test_hand_conv_pool_forward():
    # x = [1, 2, 3], conv kernel [2, 1], bias 0.5:
    #   pre = [2*1 + 1*2 + .5, 2*2 + 1*3 + .5] = [4.5, 7.5] -> relu unchanged
    # pool width 2 -> [7.5]; dense W = [[2], [-1]], b = [1, 0]
    spec = ArchitectureSpec((Conv1D(1, 2), MaxPool1D(2), Dense(2, relu=False)), 1, 3, 2)
    theta = np.array([2, 1, 0.5, 2, -1, 1, 0], dtype=np.float64)
    F = Classifier(spec, theta=theta)
    assert np.array_equal(F.forward(np.array([1.0, 2.0, 3.0])), [16.0, -7.5])


def test_forward_batch_consistent_with_single():
    F = Classifier(cnn_spec(2, 16, 3), seed=1)
    rng = np.random.default_rng(0)
    Xb = rng.standard_normal((5, 2, 16))
    scores = F.forward_batch(Xb)
    for k in range(5):
        # batched matmul reduces in a different order than the single-example
        # path, so agreement is to rounding, not bitwise
        np.testing.assert_allclose(scores[k], F.forward(Xb[k]), rtol=1e-12, atol=1e-12)
    assert np.array_equal(F.predict_batch(Xb), scores.argmax(axis=1))


def test_forward_shape_checks():
    F = Classifier(mlp_spec(1, 8, 2), seed=0)
    with pytest.raises(ValueError, match="does not match spec"):
        F.forward(np.zeros((1, 9)))
    with pytest.raises(ValueError, match="does not match spec"):
        F.forward_batch(np.zeros((4, 2, 8)))


# ------------------------------------------------------------------ spec


def test_spec_requires_linear_head():
    with pytest.raises(ValueError, match="dense-linear"):
        ArchitectureSpec((Dense(4),), 1, 8, 4)  # relu head
    with pytest.raises(ValueError, match="dense-linear"):
        ArchitectureSpec((Dense(3, relu=False),), 1, 8, 4)  # wrong width
    with pytest.raises(ValueError, match="at least one layer"):
        ArchitectureSpec((), 1, 8, 2)


def test_spec_shape_propagation_errors():
    with pytest.raises(ValueError, match="kernel 9 exceeds"):
        ArchitectureSpec((Conv1D(4, 9), Dense(2, relu=False)), 1, 8, 2)
    with pytest.raises(ValueError, match="conv1d after flatten"):
        ArchitectureSpec((Dense(4), Conv1D(2, 3), Dense(2, relu=False)), 1, 8, 2)


def test_param_count_hand_value():
    # conv: 16 filters * (3 ch * 5 taps) + 16; dense1: 64 * (16 * 14) + 64;
    # head: 2 * 64 + 2.  (T=32 -> conv out 28 -> pool 14.)
    spec = cnn_spec(3, 32, 2)
    assert spec.param_count == (16 * 15 + 16) + (64 * 224 + 64) + (2 * 64 + 2)


def test_presets_and_build():
    assert set(PRESETS) >= {"mlp", "cnn"}
    spec = build_preset("mlp", 1, 16, 3)
    assert spec.n_classes == 3
    with pytest.raises(ValueError, match="unknown preset"):
        build_preset("resnet", 1, 16, 2)


def test_classifier_theta_validation():
    spec = mlp_spec(1, 4, 2)
    with pytest.raises(ValueError, match="spec wants"):
        Classifier(spec, theta=np.zeros(3))


def test_init_deterministic_per_seed():
    spec = cnn_spec(1, 16, 2)
    assert np.array_equal(Classifier(spec, seed=3).theta, Classifier(spec, seed=3).theta)
    assert not np.array_equal(Classifier(spec, seed=3).theta, Classifier(spec, seed=4).theta)


# ------------------------------------------------------------------ gradients


@pytest.mark.parametrize("arch", ["mlp", "cnn", "a1-scaled"])
def test_input_gradient_passes_finite_differences(arch):
    F = Classifier(build_preset(arch, 2, 16, 3), seed=7)
    rng = np.random.default_rng(42)
    X = rng.standard_normal((2, 16))
    report = finite_diff_check(F, X, tolerance=1e-4)
    assert report.passed, f"max rel error {report.max_rel_error:.2e}"
    assert report.n_coords + report.n_excluded == 32


def test_finite_diff_check_float32_documented_bound():
    F = Classifier(cnn_spec(1, 16, 2), seed=1)
    X = np.random.default_rng(3).standard_normal((1, 16))
    report = finite_diff_check(F, X, tolerance=1e-2, dtype=np.float32)
    assert report.passed


def test_input_gradient_validates_upstream():
    F = Classifier(mlp_spec(1, 8, 2), seed=0)
    with pytest.raises(ValueError, match="upstream"):
        input_gradient(F, np.zeros((1, 8)), np.zeros(3))


def test_kink_margin_flags_boundary_input():
    F = _hand_mlp()
    # hidden pre-activations equal x, so x = [0, 1] sits exactly on a kink
    assert kink_margin(F, np.array([0.0, 1.0])) == 0.0
    assert kink_margin(F, np.array([5.0, 1.0])) == 1.0


# ------------------------------------------------------------------ softmax / CE


def test_softmax_and_cross_entropy():
    s = np.array([1.0, 2.0, 3.0])
    p = softmax(s)
    assert p.sum() == pytest.approx(1.0, rel=1e-15)
    assert np.all(np.diff(p) > 0)
    # CE identity: -log p[label]
    assert cross_entropy(s, 2) == pytest.approx(-np.log(p[2]), rel=1e-12)
    # shift invariance, including very large scores
    assert cross_entropy(s + 1000.0, 2) == pytest.approx(cross_entropy(s, 2), rel=1e-12)


# ------------------------------------------------------------------ training


def test_train_deterministic_and_pure():
    ds = split(synth_two_class(40, 1, 16, seed=2), (0.6, 0.2, 0.2), seed=1)
    init = Classifier(mlp_spec(1, 16, 2), seed=0)
    before = init.theta.copy()
    cfg = TrainConfig(epochs=3, seed=5)
    m1, h1 = train(init, ds, cfg)
    m2, h2 = train(init, ds, cfg)
    assert np.array_equal(init.theta, before)  # input model untouched
    assert np.array_equal(m1.theta, m2.theta)
    assert h1 == h2 and len(h1) == 3
    assert h1[0].epoch == 0 and 0.0 <= h1[0].accuracy <= 1.0


def test_train_loss_decreases():
    ds = split(synth_two_class(60, 1, 16, seed=2), (0.6, 0.2, 0.2), seed=1)
    _, hist = train(Classifier(mlp_spec(1, 16, 2), seed=0), ds, TrainConfig(epochs=15, seed=0))
    assert hist[-1].loss < hist[0].loss


def test_train_requires_train_split():
    base = synth_two_class(10, 1, 8, seed=0)
    only_test = type(base)(base.X, base.y, np.full(10, "test", dtype="<U8"))
    with pytest.raises(ValueError, match="train split is empty"):
        train(Classifier(mlp_spec(1, 8, 2), seed=0), only_test, TrainConfig(epochs=1))


def test_train_config_validation():
    for kwargs in (
        {"epochs": 0},
        {"batch_size": 0},
        {"lr": 0.0},
        {"momentum": 1.0},
        {"momentum": -0.1},
    ):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


def test_mlp_reaches_stated_accuracy(ds1_small):
    # Contract: the stock MLP hits >= 0.9 test accuracy on the univariate
    # synthetic task after the default 50 epochs.
    ds = split(ds1_small, (0.6, 0.2, 0.2), seed=0)
    model, _ = train(Classifier(mlp_spec(1, 32, 2), seed=0), ds, TrainConfig(seed=0))
    test = ds.subset("test")
    acc = float((model.predict_batch(test.X) == test.y).mean())
    print(f"MLP test accuracy: {acc:.3f}")
    assert acc >= 0.9


def test_momentum_changes_trajectory():
    ds = split(synth_two_class(40, 1, 16, seed=2), (0.6, 0.2, 0.2), seed=1)
    plain, _ = train(Classifier(mlp_spec(1, 16, 2), seed=0), ds, TrainConfig(epochs=2, seed=0))
    heavy, _ = train(
        Classifier(mlp_spec(1, 16, 2), seed=0), ds, TrainConfig(epochs=2, momentum=0.9, seed=0)
    )
    assert not np.array_equal(plain.theta, heavy.theta)


# ------------------------------------------------------------------ checkpoints


def test_checkpoint_roundtrip_bitwise(tmp_path):
    ds = split(synth_two_class(20, 2, 12, seed=3), (0.5, 0.25, 0.25), seed=0)
    model, _ = train(Classifier(cnn_spec(2, 12, 2), seed=1), ds, TrainConfig(epochs=2, seed=1))
    path = tmp_path / "model.bin"
    save_checkpoint(model, path)
    back = load_checkpoint(path)
    assert back.spec == model.spec
    assert back.seed == model.seed
    assert np.array_equal(back.theta, model.theta)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 12))
    assert np.array_equal(back.forward(x), model.forward(x))


def test_checkpoint_magic_and_corruption(tmp_path):
    model = Classifier(mlp_spec(1, 8, 2), seed=0)
    path = tmp_path / "m.bin"
    save_checkpoint(model, path)
    blob = path.read_bytes()
    assert blob[:8] == CHECKPOINT_MAGIC == b"DTWADV1\n"

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTANNET" + blob[8:])
    with pytest.raises(ValueError, match="bad magic"):
        load_checkpoint(bad)

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(blob[:-16])
    with pytest.raises(ValueError, match="parameter count"):
        load_checkpoint(truncated)
