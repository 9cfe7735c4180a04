"""Desk-scale machine-unlearning laboratory.

Trains a classifier on a synthetic mixture, erases the influence of a
designated forget set by fine-tuning on inverted labels augmented with
GAN-generated data, and evaluates the result with accuracy tables, KL
traces, and membership-inference attacks.
"""

__version__ = "0.1.0"

from .data import Dataset, SplitSpec, generate_mixture, invert_labels, split_dataset
from .errors import UnganError
from .evaluate import MiaConfig, MiaReport, compile_report, evaluate_accuracy, mia_score
from .gan import GanConfig, GanPair, estimate_kl, sample_synthetic, train_gan
from .nn import Network, forward, init_network, predict_labels
from .unlearn import (
    UnlearnPlan,
    baseline_inverted_no_gan,
    baseline_retain_only,
    build_combined_sets,
    finetune_unlearn,
    label_synthetic,
    pretrain_model,
)
