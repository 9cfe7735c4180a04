"""Unlearning by fine-tuning on inverted-label forget data.

The flow: pre-train a classifier, label GAN-generated synthetic sets
with it, invert every forget-side label, then fine-tune a copy of the
classifier with an alternating schedule (forget pass, then retain pass,
every epoch). Two reference baselines are included: fine-tuning on the
retain set alone, and the inverted-label procedure without synthetic
data.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, invert_labels
from .errors import ConfigurationError, NumericError, ShapeError
from .nn import (
    Network,
    compute_gradients,
    copy_network,
    cross_entropy,
    forward_logits,
    init_network,
    make_optimizer,
    predict_labels,
    sgd_step,
)
from .seeding import derive_seed

PhaseLog = list[tuple[int, str, float]]


@dataclass
class UnlearnPlan:
    """Hyperparameters for the label-inversion fine-tuning run.

    synthetic_ratio 0 degenerates to the no-GAN baseline;
    finetune_epochs 0 degenerates to the identity. When
    ``invert_original_labels`` is False only synthetic forget labels are
    inverted (ablation switch); the default inverts both.
    """

    inversion_mode: str = "complement"
    synthetic_ratio: float = 1.0
    finetune_epochs: int = 3
    forget_lr: float = 0.01
    retain_lr: float = 0.01
    batch_size: int = 64
    momentum: float = 0.9
    invert_original_labels: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.inversion_mode not in ("complement", "random_different"):
            raise ConfigurationError(f"unknown inversion mode {self.inversion_mode!r}")
        if self.synthetic_ratio < 0:
            raise ConfigurationError(f"synthetic_ratio must be >= 0, got {self.synthetic_ratio}")
        if self.finetune_epochs < 0:
            raise ConfigurationError(f"finetune_epochs must be >= 0, got {self.finetune_epochs}")
        if self.forget_lr <= 0 or self.retain_lr <= 0:
            raise ConfigurationError("learning rates must be positive")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass
class CombinedSets:
    """Fine-tuning material: forget rows carry inverted labels."""

    forget_combined: Dataset
    retain_combined: Dataset


def _sgd_epoch(net, opt, features, labels, batch_size, rng):
    """One shuffled full pass of minibatch cross-entropy SGD.

    Returns (net, opt, mean per-sample loss measured before each
    update).
    """
    n = features.shape[0]
    perm = rng.permutation(n)
    loss_sum = 0.0
    for start in range(0, n, batch_size):
        idx = perm[start : start + batch_size]
        xb, yb = features[idx], labels[idx]
        batch_loss, _ = cross_entropy(forward_logits(net, xb), yb)
        if not np.isfinite(batch_loss):
            raise NumericError("non-finite training loss")
        grads = compute_gradients(net, xb, yb, "cross_entropy")
        net, opt = sgd_step(net, grads, opt)
        loss_sum += batch_loss * idx.size
    return net, opt, loss_sum / n


def pretrain_model(
    train: Dataset,
    arch: list[int],
    epochs: int,
    lr: float,
    seed: int,
    momentum: float = 0.9,
    batch_size: int = 64,
) -> Network:
    """Train the classifier M from scratch with minibatch SGD.

    With epochs=0 this returns exactly init_network(arch, relu,
    softmax, seed). Defaults are sized to overfit the toy mixture so a
    membership signal exists.
    """
    if train.labels is None or train.n == 0:
        raise ConfigurationError("pretraining needs a non-empty labeled dataset")
    if arch[0] != train.dim:
        raise ConfigurationError(f"arch input dim {arch[0]} != data dim {train.dim}")
    if arch[-1] != train.num_classes:
        raise ConfigurationError(f"arch output dim {arch[-1]} != num_classes {train.num_classes}")

    net = init_network(arch, "relu", "softmax", seed)
    if epochs == 0:
        return net
    opt = make_optimizer(net, lr, momentum)
    rng = np.random.default_rng(derive_seed(seed, "pretrain-shuffle"))
    for epoch in range(1, epochs + 1):
        try:
            net, opt, _ = _sgd_epoch(net, opt, train.features, train.labels, batch_size, rng)
        except NumericError as exc:
            raise NumericError(f"pretraining diverged at epoch {epoch}: {exc}") from exc
    return net


def label_synthetic(model: Network, synth: Dataset) -> Dataset:
    """Assign classifier predictions as labels to an unlabeled sample."""
    if synth.labels is not None:
        raise ConfigurationError("synthetic dataset is already labeled")
    if synth.dim != model.input_dim:
        raise ShapeError(f"synthetic dim {synth.dim} != model input dim {model.input_dim}")
    labels = predict_labels(model, synth.features)
    return Dataset(synth.features, labels, model.output_dim, synth.split_tag, synth.origin_seed)


def build_combined_sets(
    forget: Dataset,
    retain: Dataset,
    synth_forget: Dataset | None,
    synth_retain: Dataset | None,
    model: Network,
    plan: UnlearnPlan,
) -> CombinedSets:
    """Concatenate originals with synthetic data and invert forget labels.

    All forget-side labels (original ground truth and classifier-
    assigned synthetic alike, unless the plan restricts inversion to
    synthetic rows) are replaced via the plan's inversion mode. Retain
    labels pass through unchanged. Row order is shuffled
    deterministically from the plan seed.
    """
    if forget.labels is None or retain.labels is None:
        raise ConfigurationError("forget/retain sets must be labeled")
    c = forget.num_classes
    if retain.num_classes != c or model.output_dim != c:
        raise ConfigurationError("num_classes mismatch across forget/retain/model")
    for name, synth in (("synth_forget", synth_forget), ("synth_retain", synth_retain)):
        if synth is not None:
            if synth.labels is None:
                raise ConfigurationError(f"{name} must be labeled before combination")
            if synth.num_classes != c:
                raise ConfigurationError(f"{name} num_classes {synth.num_classes} != {c}")
            if synth.dim != forget.dim:
                raise ConfigurationError(f"{name} dim {synth.dim} != data dim {forget.dim}")

    if synth_forget is not None and synth_forget.n > 0:
        f_feat = np.concatenate([forget.features, synth_forget.features], axis=0)
        f_orig = np.concatenate([forget.labels, synth_forget.labels])
    else:
        f_feat = forget.features.copy()
        f_orig = forget.labels.copy()

    invert_seed = derive_seed(plan.seed, "invert")
    if plan.invert_original_labels:
        f_labels = invert_labels(f_orig, c, plan.inversion_mode, invert_seed)
    else:
        f_labels = f_orig.copy()
        if synth_forget is not None and synth_forget.n > 0:
            f_labels[forget.n :] = invert_labels(
                synth_forget.labels, c, plan.inversion_mode, invert_seed
            )

    if synth_retain is not None and synth_retain.n > 0:
        r_feat = np.concatenate([retain.features, synth_retain.features], axis=0)
        r_labels = np.concatenate([retain.labels, synth_retain.labels])
    else:
        r_feat = retain.features.copy()
        r_labels = retain.labels.copy()

    f_perm = np.random.default_rng(derive_seed(plan.seed, "shuffle-forget")).permutation(len(f_labels))
    r_perm = np.random.default_rng(derive_seed(plan.seed, "shuffle-retain")).permutation(len(r_labels))
    return CombinedSets(
        forget_combined=Dataset(f_feat[f_perm], f_labels[f_perm], c, "forget", plan.seed),
        retain_combined=Dataset(r_feat[r_perm], r_labels[r_perm], c, "retain", plan.seed),
    )


def finetune_unlearn(model: Network, sets: CombinedSets, plan: UnlearnPlan) -> tuple[Network, PhaseLog]:
    """Fine-tune a copy of the classifier with the alternating schedule.

    Every epoch runs one full pass over the combined forget set (at
    forget_lr, against the inverted labels) and then one full pass over
    the combined retain set (at retain_lr). Each phase keeps its own
    momentum buffer. Returns the fine-tuned network and an ordered
    phase log of (epoch, phase, mean_loss) rows.
    """
    fc, rc = sets.forget_combined, sets.retain_combined
    if fc.dim != model.input_dim or rc.dim != model.input_dim:
        raise ConfigurationError("combined set dims do not match the model")
    if fc.num_classes != model.output_dim:
        raise ConfigurationError("combined set num_classes does not match the model")

    target = copy_network(model)
    phase_log: PhaseLog = []
    if plan.finetune_epochs == 0:
        return target, phase_log

    opts = {
        "forget": make_optimizer(target, plan.forget_lr, plan.momentum),
        "retain": make_optimizer(target, plan.retain_lr, plan.momentum),
    }
    rng = np.random.default_rng(derive_seed(plan.seed, "finetune"))
    for epoch in range(1, plan.finetune_epochs + 1):
        for phase, ds in (("forget", fc), ("retain", rc)):
            try:
                target, opts[phase], mean_loss = _sgd_epoch(
                    target, opts[phase], ds.features, ds.labels, plan.batch_size, rng
                )
            except NumericError as exc:
                raise NumericError(f"fine-tuning diverged at epoch {epoch}, {phase} phase: {exc}") from exc
            phase_log.append((epoch, phase, mean_loss))
    return target, phase_log


def baseline_retain_only(
    model: Network,
    retain: Dataset,
    epochs: int,
    lr: float,
    seed: int,
    momentum: float = 0.9,
    batch_size: int = 64,
) -> Network:
    """Reference unlearner: fine-tune on the retain set with true labels.

    The forget set is never an input here, by signature.
    """
    if retain.labels is None or retain.n == 0:
        raise ConfigurationError("baseline fine-tuning needs a non-empty labeled retain set")
    if retain.dim != model.input_dim or retain.num_classes != model.output_dim:
        raise ConfigurationError("retain set does not match the model")
    net = copy_network(model)
    if epochs == 0:
        return net
    opt = make_optimizer(net, lr, momentum)
    rng = np.random.default_rng(derive_seed(seed, "baseline1"))
    for epoch in range(1, epochs + 1):
        try:
            net, opt, _ = _sgd_epoch(net, opt, retain.features, retain.labels, batch_size, rng)
        except NumericError as exc:
            raise NumericError(f"baseline fine-tuning diverged at epoch {epoch}: {exc}") from exc
    return net


def baseline_inverted_no_gan(
    model: Network, forget: Dataset, retain: Dataset, plan: UnlearnPlan
) -> tuple[Network, PhaseLog]:
    """Inverted-label fine-tuning without any synthetic data.

    Definitionally the full pipeline with synthetic_ratio forced to 0.
    """
    plan_zero = replace(plan, synthetic_ratio=0.0)
    sets = build_combined_sets(forget, retain, None, None, model, plan_zero)
    return finetune_unlearn(model, sets, plan_zero)


def write_phase_log(rows: PhaseLog, path: str) -> None:
    """Write the fine-tuning phase log as CSV ``epoch,phase,mean_loss``."""
    lines = ["epoch,phase,mean_loss"]
    lines += [f"{epoch},{phase},{loss!r}" for epoch, phase, loss in rows]
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def make_classifier_arch(input_dim: int, hidden_dims: list[int], num_classes: int) -> list[int]:
    return [input_dim, *hidden_dims, num_classes]
