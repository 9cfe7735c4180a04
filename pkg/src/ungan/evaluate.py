"""Accuracy measurement, membership-inference scoring, and reports.

The membership-inference protocol: the attack feature is the scalar
per-sample loss; forget rows are labeled 1 (members), test rows 0
(non-members); the larger side is subsampled to balance; attackers are
scored by stratified k-fold cross-validated balanced accuracy. A score
near 0.5 means membership is not inferable from the loss distribution.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .attackers import ATTACKER_NAMES, make_attacker
from .data import Dataset
from .errors import ConfigurationError, EvaluationError, ShapeError
from .nn import Network, cross_entropy, forward_logits, predict_labels

REQUIRED_MODELS = ("pretrained", "baseline1", "baseline2", "proposed")


@dataclass
class MiaConfig:
    attacker: str = "logreg"
    cv_folds: int = 5
    balance_seed: int = 0
    iterations: int = 300
    learning_rate: float = 0.2
    regularization: float = 1e-3
    stump_count: int = 50
    shrinkage: float = 0.3

    def __post_init__(self):
        if self.attacker not in ATTACKER_NAMES:
            raise ConfigurationError(f"unknown attacker {self.attacker!r}")
        if self.cv_folds < 2:
            raise ConfigurationError(f"cv_folds must be >= 2, got {self.cv_folds}")
        if self.iterations < 1 or self.stump_count < 1:
            raise ConfigurationError("iterations and stump_count must be >= 1")
        if self.learning_rate <= 0 or self.shrinkage <= 0:
            raise ConfigurationError("learning_rate and shrinkage must be positive")
        if self.regularization < 0:
            raise ConfigurationError("regularization must be >= 0")


@dataclass
class MiaReport:
    """Cross-validated attack scores for one model."""

    model_id: str
    scores: dict[str, float] = field(default_factory=dict)
    fold_scores: dict[str, list[float]] = field(default_factory=dict)
    n_forget: int = 0
    n_test: int = 0

    def merged_with(self, other: "MiaReport") -> "MiaReport":
        if (other.n_forget, other.n_test) != (self.n_forget, self.n_test):
            raise ConfigurationError("cannot merge MIA reports over different sample sizes")
        return MiaReport(
            self.model_id,
            {**self.scores, **other.scores},
            {**self.fold_scores, **other.fold_scores},
            self.n_forget,
            self.n_test,
        )


def evaluate_accuracy(model: Network, ds: Dataset) -> float:
    """Fraction of rows whose predicted class matches the stored label."""
    if ds.n == 0 or ds.labels is None:
        raise ConfigurationError("accuracy needs a non-empty labeled dataset")
    return float(np.mean(predict_labels(model, ds.features) == ds.labels))


def per_sample_losses(model: Network, ds: Dataset) -> np.ndarray:
    """Cross-entropy of each row against its true label."""
    if ds.n == 0 or ds.labels is None:
        raise ConfigurationError("per-sample losses need a non-empty labeled dataset")
    if ds.dim != model.input_dim:
        raise ShapeError(f"dataset dim {ds.dim} != model input dim {model.input_dim}")
    _, losses = cross_entropy(forward_logits(model, ds.features), ds.labels)
    return losses


def _stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Indices per fold, each with (near-)proportional class mix."""
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(members.size)]
        for i, chunk in enumerate(np.array_split(members, k)):
            folds[i].append(chunk)
    return [np.sort(np.concatenate(parts)) for parts in folds]


def _balanced_accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    recalls = []
    for cls in (0, 1):
        mask = y_true == cls
        recalls.append(float(np.mean(y_pred[mask] == cls)))
    return 0.5 * (recalls[0] + recalls[1])


def mia_score_from_losses(
    member_losses: np.ndarray, nonmember_losses: np.ndarray, cfg: MiaConfig, model_id: str = "model"
) -> MiaReport:
    """Run the configured attacker on raw loss vectors.

    The larger side is subsampled (seeded) to the smaller side's size;
    folds are stratified; single-class folds are skipped with a
    warning; the score is the mean balanced accuracy of the remaining
    folds.
    """
    member = np.asarray(member_losses, dtype=np.float64).reshape(-1)
    nonmember = np.asarray(nonmember_losses, dtype=np.float64).reshape(-1)
    if member.size < cfg.cv_folds or nonmember.size < cfg.cv_folds:
        raise ConfigurationError(
            f"need at least cv_folds={cfg.cv_folds} losses per side, "
            f"got {member.size} and {nonmember.size}"
        )

    rng = np.random.default_rng(cfg.balance_seed)
    size = min(member.size, nonmember.size)
    if member.size > size:
        member = member[np.sort(rng.permutation(member.size)[:size])]
    if nonmember.size > size:
        nonmember = nonmember[np.sort(rng.permutation(nonmember.size)[:size])]

    x = np.concatenate([member, nonmember])[:, None]
    y = np.concatenate([np.ones(size, dtype=np.int64), np.zeros(size, dtype=np.int64)])

    fold_scores = []
    for i, eval_idx in enumerate(_stratified_folds(y, cfg.cv_folds, rng)):
        train_mask = np.ones(y.size, dtype=bool)
        train_mask[eval_idx] = False
        y_train, y_eval = y[train_mask], y[eval_idx]
        if np.unique(y_train).size < 2 or np.unique(y_eval).size < 2:
            warnings.warn(f"skipping degenerate single-class fold {i}", stacklevel=2)
            continue
        attacker = make_attacker(
            cfg.attacker,
            iterations=cfg.iterations,
            learning_rate=cfg.learning_rate,
            regularization=cfg.regularization,
            stump_count=cfg.stump_count,
            shrinkage=cfg.shrinkage,
        )
        attacker.fit(x[train_mask], y_train)
        fold_scores.append(_balanced_accuracy(y_eval, attacker.predict(x[eval_idx])))

    if not fold_scores:
        raise EvaluationError("all cross-validation folds were degenerate")
    return MiaReport(
        model_id,
        {cfg.attacker: float(np.mean(fold_scores))},
        {cfg.attacker: fold_scores},
        int(member.size),
        int(nonmember.size),
    )


def mia_score(model: Network, forget: Dataset, test: Dataset, cfg: MiaConfig,
              model_id: str = "model") -> MiaReport:
    """Membership-inference score of ``model`` from per-sample losses."""
    if forget.n < cfg.cv_folds or test.n < cfg.cv_folds:
        raise ConfigurationError(f"forget/test sizes must be >= cv_folds={cfg.cv_folds}")
    return mia_score_from_losses(
        per_sample_losses(model, forget), per_sample_losses(model, test), cfg, model_id
    )


def mia_score_all(model: Network, forget: Dataset, test: Dataset, cfg: MiaConfig,
                  model_id: str = "model",
                  attackers: tuple[str, ...] = ATTACKER_NAMES) -> MiaReport:
    """One MiaReport covering every requested attacker."""
    report: MiaReport | None = None
    for name in attackers:
        single = mia_score(model, forget, test, replace(cfg, attacker=name), model_id)
        report = single if report is None else report.merged_with(single)
    assert report is not None
    return report


@dataclass
class MetricsReport:
    """Joint accuracy / MIA / KL summary for one experiment."""

    accuracy: dict[str, dict[str, float]]
    mia: dict[str, MiaReport]
    kl_traces: dict[str, list[tuple[int, float]]]
    config: dict

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mia": {
                model_id: {
                    "model_id": rep.model_id,
                    "scores": rep.scores,
                    "fold_scores": rep.fold_scores,
                    "n_forget": rep.n_forget,
                    "n_test": rep.n_test,
                }
                for model_id, rep in self.mia.items()
            },
            "kl_traces": {
                tag: [[int(e), float(v)] for e, v in trace] for tag, trace in self.kl_traces.items()
            },
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        mia = {
            model_id: MiaReport(
                entry["model_id"],
                {k: float(v) for k, v in entry["scores"].items()},
                {k: [float(s) for s in v] for k, v in entry["fold_scores"].items()},
                int(entry["n_forget"]),
                int(entry["n_test"]),
            )
            for model_id, entry in doc["mia"].items()
        }
        traces = {
            tag: [(int(e), float(v)) for e, v in trace] for tag, trace in doc["kl_traces"].items()
        }
        return cls(doc["accuracy"], mia, traces, doc["config"])


def compile_report(
    models: dict[str, Network],
    datasets: dict[str, Dataset],
    gan_traces: dict[str, list[tuple[int, float]]],
    cfg: MiaConfig,
    config_echo: dict | None = None,
    attackers: tuple[str, ...] = ATTACKER_NAMES,
) -> MetricsReport:
    """Measure every model and assemble the full metrics report."""
    missing = [m for m in REQUIRED_MODELS if m not in models]
    missing += [d for d in ("retain", "test", "forget") if d not in datasets]
    if missing:
        raise ConfigurationError(f"compile_report is missing artifacts: {', '.join(missing)}")

    accuracy = {}
    mia = {}
    for model_id in REQUIRED_MODELS:
        model = models[model_id]
        accuracy[model_id] = {
            "retain": evaluate_accuracy(model, datasets["retain"]),
            "test": evaluate_accuracy(model, datasets["test"]),
            "forget": evaluate_accuracy(model, datasets["forget"]),
        }
        mia[model_id] = mia_score_all(
            model, datasets["forget"], datasets["test"], cfg, model_id, attackers
        )
    return MetricsReport(accuracy, mia, dict(gan_traces), config_echo or {})


def save_report(report: MetricsReport, path: str) -> None:
    text = json.dumps(report.to_dict(), sort_keys=True, indent=1)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def load_report(path: str) -> MetricsReport:
    with open(path, "r", encoding="utf-8") as fh:
        return MetricsReport.from_dict(json.load(fh))


def write_report_csvs(report: MetricsReport, out_dir: str) -> list[str]:
    """Emit accuracy.csv and mia.csv next to the JSON report."""
    paths = []
    acc_path = os.path.join(out_dir, "accuracy.csv")
    lines = ["model,retain,test,forget"]
    for model_id in sorted(report.accuracy):
        acc = report.accuracy[model_id]
        lines.append(f"{model_id},{acc['retain']!r},{acc['test']!r},{acc['forget']!r}")
    with open(acc_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    paths.append(acc_path)

    mia_path = os.path.join(out_dir, "mia.csv")
    lines = ["model,attacker,score"]
    for model_id in sorted(report.mia):
        rep = report.mia[model_id]
        for attacker in sorted(rep.scores):
            lines.append(f"{model_id},{attacker},{rep.scores[attacker]!r}")
    with open(mia_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    paths.append(mia_path)
    return paths
