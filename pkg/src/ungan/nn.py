"""Minimal deterministic feedforward network engine.

Dense fully-connected networks in float64 with exact reverse-mode
gradients, binary/categorical losses, and momentum SGD. Networks are
treated as immutable values: every update returns fresh arrays, so the
same (seed, inputs, hyperparameters) always reproduce the same bits.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FormatError, LabelError, NumericError, ShapeError

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "sigmoid", "softmax")
LOSS_KINDS = ("cross_entropy", "bce", "bce_through_frozen_discriminator")

# Probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before any log.
PROB_EPS = 1e-12

CHECKPOINT_VERSION = 1


@dataclass
class Network:
    """A dense feedforward net: weights[i] has shape (dims[i+1], dims[i])."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: str
    output_activation: str
    seed: int

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]


@dataclass
class GradientSet:
    """Per-layer loss gradients, shape-congruent with one Network."""

    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]

    def scaled(self, factor: float) -> "GradientSet":
        return GradientSet(
            [factor * g for g in self.weight_grads],
            [factor * g for g in self.bias_grads],
        )


@dataclass
class OptimizerState:
    """Momentum-SGD state; velocity buffers start at zero."""

    learning_rate: float
    momentum: float
    velocity_w: list[np.ndarray]
    velocity_b: list[np.ndarray]


def make_optimizer(net: Network, learning_rate: float, momentum: float = 0.9) -> OptimizerState:
    if learning_rate <= 0.0:
        raise ConfigurationError(f"learning_rate must be positive, got {learning_rate}")
    if not 0.0 <= momentum < 1.0:
        raise ConfigurationError(f"momentum must be in [0, 1), got {momentum}")
    return OptimizerState(
        learning_rate=learning_rate,
        momentum=momentum,
        velocity_w=[np.zeros_like(w) for w in net.weights],
        velocity_b=[np.zeros_like(b) for b in net.biases],
    )


def init_network(
    layer_dims: list[int],
    hidden_activation: str = "relu",
    output_activation: str = "softmax",
    seed: int = 0,
) -> Network:
    """Build a network with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights.

    Biases start at zero. The draw comes from a single seeded generator,
    so identical arguments yield bit-identical networks.
    """
    if len(layer_dims) < 2:
        raise ConfigurationError(f"layer_dims needs at least 2 entries, got {layer_dims}")
    if any(int(d) < 1 for d in layer_dims):
        raise ConfigurationError(f"all layer dims must be >= 1, got {layer_dims}")
    if hidden_activation not in HIDDEN_ACTIVATIONS:
        raise ConfigurationError(f"unknown hidden activation {hidden_activation!r}")
    if output_activation not in OUTPUT_ACTIVATIONS:
        raise ConfigurationError(f"unknown output activation {output_activation!r}")

    dims = [int(d) for d in layer_dims]
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(dims, weights, biases, hidden_activation, output_activation, int(seed))


def copy_network(net: Network) -> Network:
    return Network(
        list(net.layer_dims),
        [w.copy() for w in net.weights],
        [b.copy() for b in net.biases],
        net.hidden_activation,
        net.output_activation,
        net.seed,
    )


def networks_identical(a: Network, b: Network) -> bool:
    """Bitwise parameter equality (plus matching structure)."""
    if a.layer_dims != b.layer_dims:
        return False
    if (a.hidden_activation, a.output_activation) != (b.hidden_activation, b.output_activation):
        return False
    for wa, wb in zip(a.weights, b.weights):
        if wa.tobytes() != wb.tobytes():
            return False
    for ba, bb in zip(a.biases, b.biases):
        if ba.tobytes() != bb.tobytes():
            return False
    return True


def _as_batch(net: Network, batch: np.ndarray) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"batch must be 2-D (n, d), got shape {x.shape}")
    if x.shape[1] != net.input_dim:
        raise ShapeError(f"batch has {x.shape[1]} columns, network expects {net.input_dim}")
    return x


def _hidden_act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _hidden_act_grad(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    t = np.tanh(z)
    return 1.0 - t * t


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; rows sum to 1 up to float64 rounding."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_trace(net: Network, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Run all affine layers, returning (pre-activations, activations).

    activations[0] is the input; pre_acts[i] is layer i's affine output.
    The output activation is NOT applied; the last pre-activation holds
    the logits.
    """
    acts = [x]
    pre_acts = []
    a = x
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        pre_acts.append(z)
        if i < n_layers - 1:
            a = _hidden_act(net.hidden_activation, z)
            acts.append(a)
    return pre_acts, acts


def forward_logits(net: Network, batch: np.ndarray) -> np.ndarray:
    """Network output before the output activation (the logits)."""
    x = _as_batch(net, batch)
    pre_acts, _ = _forward_trace(net, x)
    return pre_acts[-1]


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Full forward pass including the output activation."""
    logits = forward_logits(net, batch)
    if net.output_activation == "sigmoid":
        return _sigmoid(logits)
    if net.output_activation == "softmax":
        return softmax(logits)
    return logits


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy from raw logits.

    Returns (mean loss, per-sample losses); per-sample loss i is
    -log softmax(logits[i])[labels[i]], computed through log-sum-exp so
    saturated logits stay finite.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels)
    if z.ndim != 2:
        raise ShapeError(f"logits must be 2-D, got shape {z.shape}")
    if y.ndim != 1 or y.shape[0] != z.shape[0]:
        raise ShapeError(f"labels shape {y.shape} does not match logits rows {z.shape[0]}")
    c = z.shape[1]
    if y.size and (y.min() < 0 or y.max() >= c):
        raise LabelError(f"labels must lie in [0, {c}), got range [{y.min()}, {y.max()}]")
    m = z.max(axis=1)
    lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
    per_sample = np.maximum(lse - z[np.arange(z.shape[0]), y], 0.0)
    return float(per_sample.mean()), per_sample


def bce(outputs: np.ndarray, targets: np.ndarray) -> float:
    """Binary cross-entropy; outputs are clamped to [1e-12, 1-1e-12]."""
    o = np.asarray(outputs, dtype=np.float64).reshape(-1)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if o.shape != t.shape:
        raise ShapeError(f"outputs shape {o.shape} != targets shape {t.shape}")
    o = np.clip(o, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(t * np.log(o) + (1.0 - t) * np.log(1.0 - o)))


def _backprop(net: Network, pre_acts, acts, delta_out: np.ndarray) -> GradientSet:
    """Propagate the output-layer delta back through all layers."""
    n_layers = len(net.weights)
    weight_grads: list[np.ndarray | None] = [None] * n_layers
    bias_grads: list[np.ndarray | None] = [None] * n_layers
    delta = delta_out
    for i in range(n_layers - 1, -1, -1):
        weight_grads[i] = delta.T @ acts[i]
        bias_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * _hidden_act_grad(net.hidden_activation, pre_acts[i - 1])
    return GradientSet(weight_grads, bias_grads)  # type: ignore[arg-type]


def _input_gradient(net: Network, pre_acts, delta_out: np.ndarray) -> np.ndarray:
    """Gradient of the loss w.r.t. the network input (params untouched)."""
    delta = delta_out
    for i in range(len(net.weights) - 1, 0, -1):
        delta = (delta @ net.weights[i]) * _hidden_act_grad(net.hidden_activation, pre_acts[i - 1])
    return delta @ net.weights[0]


def compute_gradients(
    net: Network,
    batch: np.ndarray,
    targets: np.ndarray,
    loss_kind: str,
    frozen_head: Network | None = None,
) -> GradientSet:
    """Exact reverse-mode gradients of the mean loss over the batch.

    loss kinds:
      cross_entropy   -- softmax cross-entropy against integer labels.
      bce             -- binary cross-entropy on a sigmoid head against
                         0/1 targets.
      bce_through_frozen_discriminator -- ``net`` is a generator; its
                         output feeds ``frozen_head`` (a sigmoid-head
                         discriminator) and the BCE against ``targets``
                         is differentiated into the generator's
                         parameters only. The discriminator receives no
                         gradient buffers at all.
    """
    if loss_kind not in LOSS_KINDS:
        raise ConfigurationError(f"unknown loss kind {loss_kind!r}")

    x = _as_batch(net, batch)
    n = x.shape[0]
    if n == 0:
        raise ShapeError("empty batch")

    if loss_kind == "cross_entropy":
        y = np.asarray(targets)
        if y.ndim != 1 or y.shape[0] != n:
            raise ShapeError(f"labels shape {y.shape} does not match batch rows {n}")
        c = net.output_dim
        if y.min() < 0 or y.max() >= c:
            raise LabelError(f"labels must lie in [0, {c})")
        pre_acts, acts = _forward_trace(net, x)
        probs = softmax(pre_acts[-1])
        delta = probs
        delta[np.arange(n), y] -= 1.0
        delta /= n
        return _backprop(net, pre_acts, acts, delta)

    if loss_kind == "bce":
        if net.output_activation != "sigmoid":
            raise ConfigurationError("bce loss requires a sigmoid output head")
        t = np.asarray(targets, dtype=np.float64).reshape(-1)
        if t.shape[0] != n:
            raise ShapeError(f"targets length {t.shape[0]} does not match batch rows {n}")
        pre_acts, acts = _forward_trace(net, x)
        out = _sigmoid(pre_acts[-1])
        delta = (out - t.reshape(out.shape)) / (n * out.shape[1])
        return _backprop(net, pre_acts, acts, delta)

    # bce_through_frozen_discriminator
    if frozen_head is None:
        raise ConfigurationError("bce_through_frozen_discriminator requires frozen_head")
    if frozen_head.output_activation != "sigmoid":
        raise ConfigurationError("frozen head must have a sigmoid output")
    if net.output_dim != frozen_head.input_dim:
        raise ShapeError(
            f"generator output dim {net.output_dim} != discriminator input dim {frozen_head.input_dim}"
        )
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if t.shape[0] != n:
        raise ShapeError(f"targets length {t.shape[0]} does not match batch rows {n}")

    gen_pre, gen_acts = _forward_trace(net, x)
    fake = gen_pre[-1]  # generator output head is the identity
    if net.output_activation != "identity":
        raise ConfigurationError("generator must use an identity output head")
    disc_pre, _ = _forward_trace(frozen_head, fake)
    out = _sigmoid(disc_pre[-1])
    delta_disc = (out - t.reshape(out.shape)) / (n * out.shape[1])
    delta_fake = _input_gradient(frozen_head, disc_pre, delta_disc)
    return _backprop(net, gen_pre, gen_acts, delta_fake)


def sgd_step(net: Network, grads: GradientSet, opt: OptimizerState) -> tuple[Network, OptimizerState]:
    """One momentum-SGD update: v <- mu*v + g, w <- w - lr*v.

    Returns a fresh (Network, OptimizerState); inputs are not mutated.
    Aborts with NumericError if any gradient entry is non-finite.
    """
    if len(grads.weight_grads) != len(net.weights):
        raise ShapeError("gradient set does not match network layer count")
    for g, w in zip(grads.weight_grads, net.weights):
        if g.shape != w.shape:
            raise ShapeError(f"weight gradient shape {g.shape} != weight shape {w.shape}")
    for g, b in zip(grads.bias_grads, net.biases):
        if g.shape != b.shape:
            raise ShapeError(f"bias gradient shape {g.shape} != bias shape {b.shape}")
    for g in (*grads.weight_grads, *grads.bias_grads):
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient; update step aborted")

    mu, lr = opt.momentum, opt.learning_rate
    new_vw = [mu * v + g for v, g in zip(opt.velocity_w, grads.weight_grads)]
    new_vb = [mu * v + g for v, g in zip(opt.velocity_b, grads.bias_grads)]
    new_net = Network(
        list(net.layer_dims),
        [w - lr * v for w, v in zip(net.weights, new_vw)],
        [b - lr * v for b, v in zip(net.biases, new_vb)],
        net.hidden_activation,
        net.output_activation,
        net.seed,
    )
    return new_net, OptimizerState(lr, mu, new_vw, new_vb)


def predict_labels(net: Network, batch: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties break toward the smallest index."""
    if net.output_dim < 2:
        raise ConfigurationError(f"classifier needs >= 2 outputs, has {net.output_dim}")
    if net.output_activation not in ("softmax", "identity"):
        raise ConfigurationError("predict_labels needs a softmax or identity head")
    logits = forward_logits(net, batch)
    return np.argmax(logits, axis=1)


# --- checkpoint I/O -------------------------------------------------------

def _encode_array(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode_array(text: str, shape: tuple[int, ...], what: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise FormatError(f"{what}: invalid base64 payload ({exc})") from exc
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise FormatError(f"{what}: truncated payload at byte {len(raw)}, expected {expected} bytes")
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{what}: non-finite values in payload")
    return arr


def network_to_dict(net: Network, role: str | None = None) -> dict:
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "layer_dims": list(net.layer_dims),
        "activations": {"hidden": net.hidden_activation, "output": net.output_activation},
        "seed": int(net.seed),
        "weights": [_encode_array(w) for w in net.weights],
        "biases": [_encode_array(b) for b in net.biases],
    }
    if role is not None:
        doc["role"] = role
    return doc


def network_from_dict(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise FormatError("checkpoint must be a JSON object")
    version = doc.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint format_version {version!r}")
    try:
        dims = [int(d) for d in doc["layer_dims"]]
        hidden = doc["activations"]["hidden"]
        output = doc["activations"]["output"]
        seed = int(doc["seed"])
        raw_w = doc["weights"]
        raw_b = doc["biases"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"checkpoint missing field: {exc}") from exc
    if len(dims) < 2 or len(raw_w) != len(dims) - 1 or len(raw_b) != len(dims) - 1:
        raise FormatError("checkpoint layer structure is inconsistent")
    weights = [
        _decode_array(txt, (dims[i + 1], dims[i]), f"weights[{i}]") for i, txt in enumerate(raw_w)
    ]
    biases = [_decode_array(txt, (dims[i + 1],), f"biases[{i}]") for i, txt in enumerate(raw_b)]
    if hidden not in HIDDEN_ACTIVATIONS or output not in OUTPUT_ACTIVATIONS:
        raise FormatError(f"checkpoint has unknown activations {hidden!r}/{output!r}")
    return Network(dims, weights, biases, hidden, output, seed)


def save_network(net: Network, path: str, role: str | None = None) -> None:
    """Write a bit-exact JSON checkpoint (arrays as base64 LE float64)."""
    text = json.dumps(network_to_dict(net, role), sort_keys=True, indent=1)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def load_network(path: str) -> Network:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at byte {exc.pos}") from exc
    return network_from_dict(doc)
