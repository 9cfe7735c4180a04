"""Generator/discriminator training and distribution tracking.

One GAN pair is trained per source set (forget, retain). The training
loop alternates discriminator ascent with generator steps under either
the plain minimax objective (default) or the non-saturating variant,
and records a real-vs-synthetic KL estimate after every epoch.

Network shapes are fixed by convention: tanh hidden layers everywhere,
identity output for the generator (data space is unbounded), sigmoid
output for the discriminator.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, FormatError, NumericError, ShapeError
from .nn import (
    GradientSet,
    Network,
    bce,
    compute_gradients,
    forward,
    init_network,
    make_optimizer,
    sgd_step,
)
from .seeding import derive_seed

LOSS_VARIANTS = ("minimax", "non_saturating")


@dataclass
class GanConfig:
    noise_dim: int
    generator_dims: list[int]
    discriminator_dims: list[int]
    epochs: int
    batch_size: int
    disc_steps_per_gen_step: int = 1
    gen_lr: float = 0.01
    disc_lr: float = 0.01
    momentum: float = 0.9
    loss_variant: str = "minimax"
    kl_bins: int = 32
    kl_epsilon: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.noise_dim < 1:
            raise ConfigurationError(f"noise_dim must be >= 1, got {self.noise_dim}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.disc_steps_per_gen_step < 1:
            raise ConfigurationError("disc_steps_per_gen_step must be >= 1")
        if self.gen_lr <= 0 or self.disc_lr <= 0:
            raise ConfigurationError("learning rates must be positive")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigurationError(f"unknown loss variant {self.loss_variant!r}")
        if len(self.generator_dims) < 2 or len(self.discriminator_dims) < 2:
            raise ConfigurationError("generator/discriminator need >= 2 layer dims")
        if self.generator_dims[0] != self.noise_dim:
            raise ConfigurationError(
                f"generator input dim {self.generator_dims[0]} != noise_dim {self.noise_dim}"
            )
        if self.generator_dims[-1] != self.discriminator_dims[0]:
            raise ConfigurationError(
                f"generator output dim {self.generator_dims[-1]} != "
                f"discriminator input dim {self.discriminator_dims[0]}"
            )
        if self.discriminator_dims[-1] != 1:
            raise ConfigurationError("discriminator must have a single sigmoid output")
        if self.kl_bins < 2:
            raise ConfigurationError(f"kl_bins must be >= 2, got {self.kl_bins}")
        if self.kl_epsilon <= 0:
            raise ConfigurationError(f"kl_epsilon must be > 0, got {self.kl_epsilon}")


@dataclass
class GanPair:
    generator: Network
    discriminator: Network
    kl_trace: list[tuple[int, float]] = field(default_factory=list)
    source_tag: str = "forget"


def estimate_kl(real: np.ndarray, synth: np.ndarray, bins: int = 32, epsilon: float = 1e-6) -> float:
    """Histogram KL(real || synth), averaged over feature dimensions.

    Each dimension is binned over the combined [min, max] range with
    ``bins`` equal bins; every bin mass gets ``epsilon`` of Laplace
    smoothing before normalization, so the estimate stays finite when
    one sample misses a bin entirely. Dimensions with a degenerate
    range contribute 0. Tiny negative totals from rounding clamp to 0.
    """
    p_mat = np.asarray(real, dtype=np.float64)
    q_mat = np.asarray(synth, dtype=np.float64)
    if p_mat.ndim != 2 or q_mat.ndim != 2:
        raise ShapeError("estimate_kl expects 2-D sample matrices")
    if p_mat.shape[1] != q_mat.shape[1]:
        raise ShapeError(f"dimension mismatch: {p_mat.shape[1]} vs {q_mat.shape[1]}")
    if p_mat.shape[0] == 0 or q_mat.shape[0] == 0:
        raise ShapeError("estimate_kl expects non-empty samples")

    total = 0.0
    d = p_mat.shape[1]
    for j in range(d):
        pj, qj = p_mat[:, j], q_mat[:, j]
        lo = min(pj.min(), qj.min())
        hi = max(pj.max(), qj.max())
        if hi == lo:
            continue
        p_counts, _ = np.histogram(pj, bins=bins, range=(lo, hi))
        q_counts, _ = np.histogram(qj, bins=bins, range=(lo, hi))
        p = p_counts / pj.size + epsilon
        q = q_counts / qj.size + epsilon
        p /= p.sum()
        q /= q.sum()
        total += float(np.sum(p * np.log(p / q)))
    return max(total / d, 0.0)


def sample_synthetic(gen: Network, n: int, seed: int, source_tag: str = "forget") -> Dataset:
    """Draw n generator outputs from standard-normal noise (unlabeled)."""
    if n < 1:
        raise ConfigurationError(f"sample size must be >= 1, got {n}")
    if source_tag not in ("forget", "retain"):
        raise ConfigurationError(f"source_tag must be 'forget' or 'retain', got {source_tag!r}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, gen.input_dim))
    x = forward(gen, z)
    if not np.all(np.isfinite(x)):
        raise NumericError("generator produced non-finite samples")
    return Dataset(x, None, None, f"synthetic_{source_tag}", int(seed))


def _check_finite_loss(value: float, epoch: int, step: int, which: str) -> None:
    if not np.isfinite(value):
        raise NumericError(f"non-finite {which} loss at epoch {epoch}, step {step}")


def train_gan(real: Dataset, cfg: GanConfig, source_tag: str = "forget") -> GanPair:
    """Train one generator/discriminator pair on ``real``.

    Per batch: one discriminator descent step on BCE with real=1 /
    fake=0 targets (ascent on the value function), and after every
    ``disc_steps_per_gen_step`` such steps one generator step. Under
    ``minimax`` the generator descends log(1 - D(G(z))), implemented as
    negated BCE-gradient against fake targets; under
    ``non_saturating`` it descends -log D(G(z)).

    After each epoch the KL between ``real`` and a fresh synthetic
    sample of the same size is appended to the pair's trace.
    """
    if real.n < cfg.batch_size:
        raise ConfigurationError(f"dataset size {real.n} < batch_size {cfg.batch_size}")
    if real.dim != cfg.generator_dims[-1]:
        raise ConfigurationError(
            f"data dim {real.dim} != generator output dim {cfg.generator_dims[-1]}"
        )

    gen = init_network(cfg.generator_dims, "tanh", "identity", derive_seed(cfg.seed, "generator-init"))
    disc = init_network(
        cfg.discriminator_dims, "tanh", "sigmoid", derive_seed(cfg.seed, "discriminator-init")
    )
    g_opt = make_optimizer(gen, cfg.gen_lr, cfg.momentum)
    d_opt = make_optimizer(disc, cfg.disc_lr, cfg.momentum)
    rng = np.random.default_rng(derive_seed(cfg.seed, "training"))

    x_real = real.features
    n = real.n
    kl_trace: list[tuple[int, float]] = []
    disc_steps = 0
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch_idx = perm[start : start + cfg.batch_size]
            m = batch_idx.size

            z = rng.standard_normal((m, cfg.noise_dim))
            fake = forward(gen, z)
            d_in = np.concatenate([x_real[batch_idx], fake], axis=0)
            d_targets = np.concatenate([np.ones(m), np.zeros(m)])
            _check_finite_loss(bce(forward(disc, d_in), d_targets), epoch, disc_steps, "discriminator")
            d_grads = compute_gradients(disc, d_in, d_targets, "bce")
            disc, d_opt = sgd_step(disc, d_grads, d_opt)
            disc_steps += 1

            if disc_steps % cfg.disc_steps_per_gen_step == 0:
                z_gen = rng.standard_normal((cfg.batch_size, cfg.noise_dim))
                if cfg.loss_variant == "minimax":
                    targets = np.zeros(cfg.batch_size)
                    g_grads: GradientSet = compute_gradients(
                        gen, z_gen, targets, "bce_through_frozen_discriminator", frozen_head=disc
                    ).scaled(-1.0)
                else:
                    targets = np.ones(cfg.batch_size)
                    g_grads = compute_gradients(
                        gen, z_gen, targets, "bce_through_frozen_discriminator", frozen_head=disc
                    )
                _check_finite_loss(
                    bce(forward(disc, forward(gen, z_gen)), targets), epoch, disc_steps, "generator"
                )
                gen, g_opt = sgd_step(gen, g_grads, g_opt)

        synth = sample_synthetic(gen, n, derive_seed(cfg.seed, f"kl-sample-{epoch}"), source_tag)
        kl_trace.append((epoch, estimate_kl(x_real, synth.features, cfg.kl_bins, cfg.kl_epsilon)))

    return GanPair(gen, disc, kl_trace, source_tag)


def write_kl_trace(trace: list[tuple[int, float]], path: str) -> None:
    """Write a trace as CSV with header ``epoch,kl``."""
    lines = ["epoch,kl"]
    lines += [f"{epoch},{kl!r}" for epoch, kl in trace]
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_kl_trace(path: str) -> list[tuple[int, float]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != "epoch,kl":
        raise FormatError(f"{path}: not a KL trace CSV")
    out = []
    for line in lines[1:]:
        epoch_text, kl_text = line.split(",")
        out.append((int(epoch_text), float(kl_text)))
    return out
