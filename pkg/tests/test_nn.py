"""Core network engine: forward, losses, gradients, SGD, checkpoints."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ungan.data import Dataset
from ungan.errors import ConfigurationError, FormatError, LabelError, NumericError, ShapeError
from ungan.nn import (
    GradientSet,
    Network,
    bce,
    compute_gradients,
    copy_network,
    cross_entropy,
    forward,
    forward_logits,
    init_network,
    load_network,
    make_optimizer,
    network_to_dict,
    networks_identical,
    predict_labels,
    save_network,
    sgd_step,
    softmax,
)
from ungan.unlearn import pretrain_model


# --- finite-difference oracle ----------------------------------------------

def loss_value(net, x, targets, kind, frozen=None):
    if kind == "cross_entropy":
        return cross_entropy(forward_logits(net, x), targets)[0]
    if kind == "bce":
        return bce(forward(net, x), targets)
    return bce(forward(frozen, forward(net, x)), targets)


def finite_difference_grads(net, x, targets, kind, frozen=None, h=1e-5):
    """Central differences over every parameter of ``net``."""
    weight_grads, bias_grads = [], []
    for li in range(len(net.weights)):
        for arrays, grads in ((net.weights, weight_grads), (net.biases, bias_grads)):
            g = np.zeros_like(arrays[li])
            for idx in np.ndindex(*g.shape):
                plus = copy_network(net)
                plus_arrays = plus.weights if arrays is net.weights else plus.biases
                plus_arrays[li][idx] += h
                minus = copy_network(net)
                minus_arrays = minus.weights if arrays is net.weights else minus.biases
                minus_arrays[li][idx] -= h
                g[idx] = (
                    loss_value(plus, x, targets, kind, frozen)
                    - loss_value(minus, x, targets, kind, frozen)
                ) / (2 * h)
            grads.append(g)
    return GradientSet(weight_grads, bias_grads)


def max_relative_error(analytic: GradientSet, fd: GradientSet) -> float:
    worst = 0.0
    for a, f in zip(
        analytic.weight_grads + analytic.bias_grads, fd.weight_grads + fd.bias_grads
    ):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


def perturb_biases(net, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    for b in net.biases:
        b += rng.standard_normal(b.shape) * scale


# --- initialization ---------------------------------------------------------

def test_init_same_seed_bit_identical():
    a = init_network([4, 3], "relu", "softmax", 7)
    b = init_network([4, 3], "relu", "softmax", 7)
    assert networks_identical(a, b)


def test_init_biases_exactly_zero():
    net = init_network([4, 3], "relu", "softmax", 0)
    for b in net.biases:
        assert np.all(b == 0.0)


def test_init_weight_bound_scan():
    net = init_network([16, 32, 10], "relu", "softmax", 1)
    for w, fan_in in zip(net.weights, [16, 32]):
        assert np.all(np.abs(w) <= 1.0 / math.sqrt(fan_in))


def test_init_different_seed_differs():
    a = init_network([4, 3], "relu", "softmax", 7)
    b = init_network([4, 3], "relu", "softmax", 8)
    assert not networks_identical(a, b)


@pytest.mark.parametrize("dims", [[], [4], [4, 0, 3]])
def test_init_invalid_dims(dims):
    with pytest.raises(ConfigurationError):
        init_network(dims, "relu", "softmax", 0)


def test_init_unknown_activation():
    with pytest.raises(ConfigurationError):
        init_network([4, 3], "gelu", "softmax", 0)


# --- forward ----------------------------------------------------------------

def test_forward_identity_single_layer():
    net = init_network([3, 3], "relu", "identity", 0)
    net.weights[0] = np.eye(3)
    net.biases[0] = np.zeros(3)
    x = np.array([[1.0, -2.0, 0.5], [0.0, 3.0, -1.0]])
    assert np.array_equal(forward(net, x), x)


def test_forward_zero_input_relu_uniform_softmax():
    net = init_network([4, 5, 10], "relu", "softmax", 3)
    out = forward(net, np.zeros((2, 4)))
    assert np.allclose(out, 0.1, atol=1e-15)
    assert np.all(forward_logits(net, np.zeros((2, 4))) == 0.0)


def test_forward_matches_straight_line_recompute():
    net = init_network([4, 6, 3], "relu", "identity", 11)
    perturb_biases(net, 1)
    x = np.random.default_rng(5).standard_normal((7, 4))
    # independent dense recompute, written out longhand
    h = x @ net.weights[0].T + net.biases[0]
    h = np.maximum(h, 0.0)
    expected = h @ net.weights[1].T + net.biases[1]
    assert np.max(np.abs(forward(net, x) - expected)) < 1e-12


def test_forward_softmax_rows_sum_to_one():
    net = init_network([4, 8, 6], "tanh", "softmax", 2)
    x = np.random.default_rng(0).standard_normal((30, 4)) * 5
    out = forward(net, x)
    assert np.max(np.abs(out.sum(axis=1) - 1.0)) < 1e-12


def test_forward_sigmoid_in_open_interval():
    net = init_network([4, 8, 1], "tanh", "sigmoid", 2)
    x = np.random.default_rng(0).standard_normal((30, 4))
    out = forward(net, x)
    assert np.all((out > 0.0) & (out < 1.0))


def test_forward_dimension_mismatch():
    net = init_network([4, 3], "relu", "softmax", 0)
    with pytest.raises(ShapeError):
        forward(net, np.zeros((2, 5)))


# --- losses -----------------------------------------------------------------

def test_cross_entropy_uniform_logits():
    mean, per = cross_entropy(np.zeros((4, 10)), np.array([0, 3, 5, 9]))
    assert abs(mean - math.log(10)) < 1e-12
    assert np.allclose(per, math.log(10), atol=1e-12)


def test_cross_entropy_saturated_correct_logit():
    logits = np.zeros((1, 10))
    logits[0, 4] = 30.0
    mean, _ = cross_entropy(logits, np.array([4]))
    assert 0.0 <= mean < 1e-9


def test_cross_entropy_closed_form():
    logits = np.array([[1.0, 2.0, 0.5]])
    mean, per = cross_entropy(logits, np.array([1]))
    expected = math.log(math.exp(1.0) + math.exp(2.0) + math.exp(0.5)) - 2.0
    assert abs(mean - expected) < 1e-12
    assert abs(per[0] - expected) < 1e-12


def test_cross_entropy_per_sample_nonnegative():
    rng = np.random.default_rng(8)
    logits = rng.standard_normal((50, 7)) * 10
    labels = rng.integers(0, 7, 50)
    mean, per = cross_entropy(logits, labels)
    assert np.all(per >= 0.0)
    assert mean >= 0.0 and np.isfinite(mean)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(LabelError):
        cross_entropy(np.zeros((2, 3)), np.array([0, 3]))


def test_bce_half_outputs():
    assert abs(bce(np.full(5, 0.5), np.array([1, 0, 1, 1, 0.0])) - math.log(2)) < 1e-12


def test_bce_perfect_fit():
    targets = np.array([1.0, 0.0, 1.0])
    assert bce(targets, targets) <= 1e-9


def test_bce_closed_form():
    value = bce(np.array([0.8, 0.3]), np.array([1.0, 0.0]))
    assert abs(value - (-(math.log(0.8) + math.log(0.7)) / 2)) < 1e-12


def test_bce_length_mismatch():
    with pytest.raises(ShapeError):
        bce(np.array([0.5, 0.5]), np.array([1.0]))


# --- gradients --------------------------------------------------------------

def test_gradients_match_finite_differences_all_kinds():
    rng = np.random.default_rng(99)
    net = init_network([4, 5, 3], "relu", "softmax", 0)
    perturb_biases(net, 10)
    x = rng.standard_normal((6, 4))
    y = rng.integers(0, 3, 6)
    analytic = compute_gradients(net, x, y, "cross_entropy")
    fd = finite_difference_grads(net, x, y, "cross_entropy")
    assert max_relative_error(analytic, fd) < 1e-4

    dnet = init_network([4, 5, 1], "tanh", "sigmoid", 1)
    perturb_biases(dnet, 11)
    t = rng.integers(0, 2, 6).astype(float)
    analytic = compute_gradients(dnet, x, t, "bce")
    fd = finite_difference_grads(dnet, x, t, "bce")
    assert max_relative_error(analytic, fd) < 1e-4

    gen = init_network([3, 5, 4], "tanh", "identity", 2)
    disc = init_network([4, 5, 1], "tanh", "sigmoid", 3)
    perturb_biases(gen, 12)
    z = rng.standard_normal((6, 3))
    targets = np.zeros(6)
    analytic = compute_gradients(gen, z, targets, "bce_through_frozen_discriminator", frozen_head=disc)
    fd = finite_difference_grads(gen, z, targets, "bce_through_frozen_discriminator", frozen=disc)
    assert max_relative_error(analytic, fd) < 1e-4


def test_gradients_zero_input_relu_dead_units():
    net = init_network([4, 5, 3], "relu", "softmax", 0)  # biases are zero
    grads = compute_gradients(net, np.zeros((3, 4)), np.array([0, 1, 2]), "cross_entropy")
    assert np.all(grads.weight_grads[0] == 0.0)


def test_gradients_linear_softmax_closed_form():
    net = init_network([4, 3], "relu", "softmax", 5)
    x = np.random.default_rng(6).standard_normal((8, 4))
    y = np.array([0, 1, 2, 0, 1, 2, 0, 1])
    grads = compute_gradients(net, x, y, "cross_entropy")
    probs = softmax(x @ net.weights[0].T + net.biases[0])
    onehot = np.zeros_like(probs)
    onehot[np.arange(8), y] = 1.0
    expected = (probs - onehot).T @ x / 8
    assert np.max(np.abs(grads.weight_grads[0] - expected)) < 1e-10


def test_generator_gradients_cover_generator_only():
    """Frozen discriminator receives no gradient buffers at all."""
    gen = init_network([3, 6, 4], "tanh", "identity", 0)
    disc = init_network([4, 7, 1], "tanh", "sigmoid", 1)
    z = np.random.default_rng(0).standard_normal((5, 3))
    grads = compute_gradients(gen, z, np.zeros(5), "bce_through_frozen_discriminator", frozen_head=disc)
    assert [g.shape for g in grads.weight_grads] == [w.shape for w in gen.weights]
    assert [g.shape for g in grads.bias_grads] == [b.shape for b in gen.biases]
    assert [g.shape for g in grads.weight_grads] != [w.shape for w in disc.weights]


def test_gradients_unknown_kind_and_missing_head():
    net = init_network([3, 2], "relu", "softmax", 0)
    with pytest.raises(ConfigurationError):
        compute_gradients(net, np.zeros((1, 3)), np.array([0]), "mse")
    gen = init_network([3, 4], "tanh", "identity", 0)
    with pytest.raises(ConfigurationError):
        compute_gradients(gen, np.zeros((1, 3)), np.zeros(1), "bce_through_frozen_discriminator")


def test_gradients_shape_mismatch():
    net = init_network([3, 2], "relu", "softmax", 0)
    with pytest.raises(ShapeError):
        compute_gradients(net, np.zeros((2, 4)), np.array([0, 1]), "cross_entropy")


# --- SGD --------------------------------------------------------------------

def _scalar_net(w0: float) -> Network:
    net = init_network([1, 1], "relu", "identity", 0)
    net.weights[0][:] = w0
    return net


def _scalar_grads(net: Network, g: float) -> GradientSet:
    return GradientSet([np.full_like(net.weights[0], g)], [np.zeros_like(net.biases[0])])


def test_sgd_plain_step():
    net = _scalar_net(1.0)
    opt = make_optimizer(net, learning_rate=0.1, momentum=0.0)
    net, _ = sgd_step(net, _scalar_grads(net, 0.2), opt)
    assert net.weights[0][0, 0] == pytest.approx(0.98, abs=1e-15)


def test_sgd_momentum_recurrence():
    # v1 = 1, v2 = 0.9*1 + 1 = 1.9; w = 0 - 0.1*1 - 0.1*1.9 = -0.29
    net = _scalar_net(0.0)
    opt = make_optimizer(net, learning_rate=0.1, momentum=0.9)
    net, opt = sgd_step(net, _scalar_grads(net, 1.0), opt)
    net, opt = sgd_step(net, _scalar_grads(net, 1.0), opt)
    assert net.weights[0][0, 0] == pytest.approx(-0.29, abs=1e-15)


def test_sgd_zero_gradient_is_identity():
    net = init_network([4, 5, 2], "relu", "softmax", 9)
    opt = make_optimizer(net, 0.5, 0.9)
    zeros = GradientSet(
        [np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases]
    )
    stepped, _ = sgd_step(net, zeros, opt)
    assert networks_identical(net, stepped)


def test_sgd_nonfinite_gradient_aborts():
    net = _scalar_net(1.0)
    opt = make_optimizer(net, 0.1, 0.0)
    bad = GradientSet([np.array([[np.nan]])], [np.zeros(1)])
    with pytest.raises(NumericError):
        sgd_step(net, bad, opt)


def test_sgd_does_not_mutate_inputs():
    net = init_network([3, 2], "relu", "softmax", 0)
    before = [w.copy() for w in net.weights]
    opt = make_optimizer(net, 0.1, 0.9)
    grads = GradientSet([np.ones_like(w) for w in net.weights], [np.ones_like(b) for b in net.biases])
    sgd_step(net, grads, opt)
    for w, old in zip(net.weights, before):
        assert np.array_equal(w, old)
    assert all(np.all(v == 0.0) for v in opt.velocity_w)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_sgd_zero_gradient_fixpoint_property(seed):
    net = init_network([3, 4, 2], "tanh", "softmax", seed)
    opt = make_optimizer(net, 0.3, 0.5)
    zeros = GradientSet(
        [np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases]
    )
    stepped, _ = sgd_step(net, zeros, opt)
    assert networks_identical(net, stepped)


# --- prediction -------------------------------------------------------------

def test_predict_argmax():
    net = init_network([3, 3], "relu", "identity", 0)
    net.weights[0] = np.eye(3)
    assert predict_labels(net, np.array([[0.1, 0.9, 0.3]])) == np.array([1])


def test_predict_tie_breaks_to_lowest_index():
    net = init_network([4, 10], "relu", "softmax", 0)
    for w in net.weights:
        w[:] = 0.0
    labels = predict_labels(net, np.random.default_rng(0).standard_normal((5, 4)))
    assert np.all(labels == 0)


def test_predict_requires_multiclass_head():
    net = init_network([3, 1], "relu", "identity", 0)
    with pytest.raises(ConfigurationError):
        predict_labels(net, np.zeros((1, 3)))


def test_predict_overfit_memorization():
    """A model trained to convergence on 200 points reproduces their labels."""
    rng = np.random.default_rng(0)
    features = np.concatenate(
        [rng.standard_normal((100, 4)) + 2.5, rng.standard_normal((100, 4)) - 2.5]
    )
    labels = np.concatenate([np.zeros(100, dtype=np.int64), np.ones(100, dtype=np.int64)])
    ds = Dataset(features, labels, 2, "train", 0)
    model = pretrain_model(ds, [4, 16, 2], epochs=120, lr=0.05, seed=1, batch_size=32)
    agreement = float(np.mean(predict_labels(model, features) == labels))
    assert agreement >= 0.99


@given(
    shift=st.floats(-50, 50, allow_nan=False),
    seed=st.integers(0, 2**31),
)
@settings(max_examples=30, deadline=None)
def test_predict_invariant_under_logit_shift(shift, seed):
    rng = np.random.default_rng(seed)
    logits = rng.standard_normal((6, 5))
    net = init_network([5, 5], "relu", "identity", 0)
    net.weights[0] = np.eye(5)
    base = predict_labels(net, logits)
    shifted = predict_labels(net, logits + shift)
    assert np.array_equal(base, shifted)


# --- checkpoints ------------------------------------------------------------

def test_checkpoint_round_trip_bit_identical(tmp_path):
    net = init_network([5, 7, 3], "tanh", "softmax", 123)
    perturb_biases(net, 4)
    path = str(tmp_path / "net.json")
    save_network(net, path, role="classifier")
    loaded = load_network(path)
    assert networks_identical(net, loaded)
    assert loaded.seed == net.seed


def test_checkpoint_version_guard(tmp_path):
    import json

    net = init_network([3, 2], "relu", "softmax", 0)
    doc = network_to_dict(net)
    doc["format_version"] = 99
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError, match="format_version"):
        load_network(str(path))


def test_checkpoint_truncated_payload(tmp_path):
    import json

    net = init_network([3, 2], "relu", "softmax", 0)
    doc = network_to_dict(net)
    doc["weights"][0] = doc["weights"][0][: len(doc["weights"][0]) // 2]
    path = tmp_path / "trunc.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError, match="byte"):
        load_network(str(path))


def test_checkpoint_nonfinite_payload(tmp_path):
    import base64
    import json

    net = init_network([3, 2], "relu", "softmax", 0)
    doc = network_to_dict(net)
    bad = np.full((2, 3), np.nan)
    doc["weights"][0] = base64.b64encode(bad.astype("<f8").tobytes()).decode("ascii")
    path = tmp_path / "nan.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError, match="non-finite"):
        load_network(str(path))


def test_checkpoint_role_field_written(tmp_path):
    import json

    net = init_network([3, 2], "relu", "softmax", 0)
    path = str(tmp_path / "role.json")
    save_network(net, path, role="forget_generator")
    doc = json.loads(open(path).read())
    assert doc["role"] == "forget_generator"
