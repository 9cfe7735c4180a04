"""Configuration-driven experiment pipeline.

One run produces, in a single artifact directory: the dataset splits,
the pre-trained classifier, both GAN pairs with their KL traces, the
synthetic samples, the unlearned model plus both baselines, the
metrics report, and a manifest with the SHA-256 of every artifact.

All randomness flows from ``master_seed`` through named sub-seeds
(see seeding.derive_seed), so re-running a config reproduces identical
bytes, and running the stages one at a time matches the monolithic run.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass

import jsonschema

from .data import Dataset, SplitSpec, generate_mixture, load_dataset, split_dataset, store_dataset
from .errors import ConfigurationError, MissingArtifactError, UnganError
from .evaluate import MetricsReport, MiaConfig, compile_report, save_report, write_report_csvs
from .gan import GanConfig, read_kl_trace, sample_synthetic, train_gan, write_kl_trace
from .nn import load_network, save_network
from .seeding import derive_seed
from .unlearn import (
    UnlearnPlan,
    baseline_inverted_no_gan,
    baseline_retain_only,
    build_combined_sets,
    finetune_unlearn,
    label_synthetic,
    make_classifier_arch,
    pretrain_model,
    write_phase_log,
)

log = logging.getLogger("ungan")

MANIFEST_VERSION = 1
STAGE_ORDER = ("pretrain", "gan-train", "unlearn", "evaluate")

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["master_seed", "data", "classifier", "gan", "unlearn", "baseline1", "mia"],
    "properties": {
        "master_seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["num_classes", "dim", "n", "class_separation",
                         "test_fraction", "forget_fraction"],
            "properties": {
                "num_classes": {"type": "integer", "minimum": 2},
                "dim": {"type": "integer", "minimum": 2},
                "n": {"type": "integer", "minimum": 4},
                "class_separation": {"type": "number", "exclusiveMinimum": 0},
                "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "forget_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "forget_mode": {"enum": ["random", "class_targeted"]},
                "forget_class": {"type": ["integer", "null"], "minimum": 0},
            },
        },
        "classifier": {
            "type": "object",
            "additionalProperties": False,
            "required": ["hidden_dims", "epochs", "learning_rate"],
            "properties": {
                "hidden_dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "epochs": {"type": "integer", "minimum": 0},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
            },
        },
        "gan": {"$ref": "#/$defs/gan"},
        "gan_forget": {"$ref": "#/$defs/gan_override"},
        "gan_retain": {"$ref": "#/$defs/gan_override"},
        "unlearn": {
            "type": "object",
            "additionalProperties": False,
            "required": ["synthetic_ratio", "finetune_epochs"],
            "properties": {
                "inversion_mode": {"enum": ["complement", "random_different"]},
                "synthetic_ratio": {"type": "number", "minimum": 0},
                "finetune_epochs": {"type": "integer", "minimum": 0},
                "forget_lr": {"type": "number", "exclusiveMinimum": 0},
                "retain_lr": {"type": "number", "exclusiveMinimum": 0},
                "batch_size": {"type": "integer", "minimum": 1},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "invert_original_labels": {"type": "boolean"},
            },
        },
        "baseline1": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epochs", "learning_rate"],
            "properties": {
                "epochs": {"type": "integer", "minimum": 0},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
            },
        },
        "mia": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cv_folds": {"type": "integer", "minimum": 2},
                "iterations": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "regularization": {"type": "number", "minimum": 0},
                "stump_count": {"type": "integer", "minimum": 1},
                "shrinkage": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
    "$defs": {
        "gan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["noise_dim", "generator_hidden", "discriminator_hidden",
                         "epochs", "batch_size"],
            "properties": {
                "noise_dim": {"type": "integer", "minimum": 1},
                "generator_hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "discriminator_hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "epochs": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
                "disc_steps_per_gen_step": {"type": "integer", "minimum": 1},
                "gen_lr": {"type": "number", "exclusiveMinimum": 0},
                "disc_lr": {"type": "number", "exclusiveMinimum": 0},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "loss_variant": {"enum": ["minimax", "non_saturating"]},
                "kl_bins": {"type": "integer", "minimum": 2},
                "kl_epsilon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "gan_override": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "noise_dim": {"type": "integer", "minimum": 1},
                "generator_hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "discriminator_hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "epochs": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
                "disc_steps_per_gen_step": {"type": "integer", "minimum": 1},
                "gen_lr": {"type": "number", "exclusiveMinimum": 0},
                "disc_lr": {"type": "number", "exclusiveMinimum": 0},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "loss_variant": {"enum": ["minimax", "non_saturating"]},
                "kl_bins": {"type": "integer", "minimum": 2},
                "kl_epsilon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


def default_config(master_seed: int = 1) -> dict:
    """The bundled desk-scale experiment configuration."""
    return {
        "master_seed": master_seed,
        "data": {
            "num_classes": 10,
            "dim": 16,
            "n": 5000,
            "class_separation": 4.0,
            "test_fraction": 0.1,
            "forget_fraction": 0.1,
            "forget_mode": "random",
            "forget_class": None,
        },
        "classifier": {
            "hidden_dims": [64, 64],
            "epochs": 150,
            "learning_rate": 0.05,
            "momentum": 0.9,
            "batch_size": 64,
        },
        "gan": {
            "noise_dim": 8,
            "generator_hidden": [32, 32],
            "discriminator_hidden": [32, 32],
            "epochs": 40,
            "batch_size": 64,
            "disc_steps_per_gen_step": 1,
            "gen_lr": 0.01,
            "disc_lr": 0.01,
            "momentum": 0.5,
            "loss_variant": "minimax",
            "kl_bins": 32,
            "kl_epsilon": 1e-6,
        },
        # the forget split is ~9x smaller, so its GAN needs more passes
        "gan_forget": {"epochs": 200, "gen_lr": 0.02, "disc_lr": 0.02},
        "unlearn": {
            "inversion_mode": "complement",
            "synthetic_ratio": 1.0,
            "finetune_epochs": 3,
            "forget_lr": 0.01,
            "retain_lr": 0.015,
            "batch_size": 64,
            "momentum": 0.9,
            "invert_original_labels": True,
        },
        "baseline1": {"epochs": 3, "learning_rate": 0.01, "momentum": 0.9, "batch_size": 64},
        "mia": {
            "cv_folds": 5,
            "iterations": 300,
            "learning_rate": 0.2,
            "regularization": 1e-3,
            "stump_count": 50,
            "shrinkage": 0.3,
        },
    }


@dataclass
class ExperimentConfig:
    """A schema-validated config dict plus derived stage configs."""

    raw: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigurationError(f"config invalid at {path}: {exc.message}") from exc
        data = doc["data"]
        if data["n"] % data["num_classes"] != 0:
            raise ConfigurationError("config invalid at data/n: must be a multiple of num_classes")
        if data.get("forget_mode") == "class_targeted" and data.get("forget_class") is None:
            raise ConfigurationError(
                "config invalid at data/forget_class: required for class_targeted mode"
            )
        return cls(doc)

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise MissingArtifactError(f"missing config file: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON at byte {exc.pos}") from exc
        return cls.from_dict(doc)

    @property
    def master_seed(self) -> int:
        return int(self.raw["master_seed"])

    def seed_for(self, component: str) -> int:
        return derive_seed(self.master_seed, component)

    def all_seeds(self) -> dict[str, int]:
        names = ("data-generate", "data-split", "classifier", "gan-forget", "gan-retain",
                 "synthetic-forget", "synthetic-retain", "unlearn", "baseline1", "mia")
        return {name: self.seed_for(name) for name in names}

    def split_spec(self) -> SplitSpec:
        data = self.raw["data"]
        return SplitSpec(
            test_fraction=data["test_fraction"],
            forget_fraction=data["forget_fraction"],
            forget_mode=data.get("forget_mode", "random"),
            forget_class=data.get("forget_class"),
            seed=self.seed_for("data-split"),
        )

    def gan_config(self, source_tag: str) -> GanConfig:
        base = dict(self.raw["gan"])
        base.update(self.raw.get(f"gan_{source_tag}", {}))
        dim = self.raw["data"]["dim"]
        return GanConfig(
            noise_dim=base["noise_dim"],
            generator_dims=[base["noise_dim"], *base["generator_hidden"], dim],
            discriminator_dims=[dim, *base["discriminator_hidden"], 1],
            epochs=base["epochs"],
            batch_size=base["batch_size"],
            disc_steps_per_gen_step=base.get("disc_steps_per_gen_step", 1),
            gen_lr=base.get("gen_lr", 0.01),
            disc_lr=base.get("disc_lr", 0.01),
            momentum=base.get("momentum", 0.5),
            loss_variant=base.get("loss_variant", "minimax"),
            kl_bins=base.get("kl_bins", 32),
            kl_epsilon=base.get("kl_epsilon", 1e-6),
            seed=self.seed_for(f"gan-{source_tag}"),
        )

    def unlearn_plan(self) -> UnlearnPlan:
        u = self.raw["unlearn"]
        return UnlearnPlan(
            inversion_mode=u.get("inversion_mode", "complement"),
            synthetic_ratio=u["synthetic_ratio"],
            finetune_epochs=u["finetune_epochs"],
            forget_lr=u.get("forget_lr", 0.01),
            retain_lr=u.get("retain_lr", 0.01),
            batch_size=u.get("batch_size", 64),
            momentum=u.get("momentum", 0.9),
            invert_original_labels=u.get("invert_original_labels", True),
            seed=self.seed_for("unlearn"),
        )

    def mia_config(self) -> MiaConfig:
        m = self.raw["mia"]
        return MiaConfig(
            cv_folds=m.get("cv_folds", 5),
            balance_seed=self.seed_for("mia"),
            iterations=m.get("iterations", 300),
            learning_rate=m.get("learning_rate", 0.2),
            regularization=m.get("regularization", 1e-3),
            stump_count=m.get("stump_count", 50),
            shrinkage=m.get("shrinkage", 0.3),
        )


# --- artifact bookkeeping ---------------------------------------------------

def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _require(out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    if not os.path.exists(path):
        raise MissingArtifactError(f"missing input artifact: {path}")
    return path


def _load_manifest(out_dir: str, config: ExperimentConfig) -> dict:
    path = os.path.join(out_dir, "manifest.json")
    config_sha = hashlib.sha256(_canonical_json(config.raw).encode("utf-8")).hexdigest()
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("config_sha256") == config_sha:
            return manifest
    return {
        "format_version": MANIFEST_VERSION,
        "config_sha256": config_sha,
        "master_seed": config.master_seed,
        "seeds": config.all_seeds(),
        "stages": [],
    }


def _record_stage(manifest: dict, out_dir: str, stage: str, status: str,
                  inputs: list[str], outputs: list[str], wall_time_ms: int,
                  error: str | None = None) -> None:
    entry = {
        "stage": stage,
        "status": status,
        "inputs": sorted(inputs),
        "outputs": [
            {"path": name, "sha256": _sha256_file(os.path.join(out_dir, name))}
            for name in sorted(outputs)
            if os.path.exists(os.path.join(out_dir, name))
        ],
        "wall_time_ms": wall_time_ms,
    }
    if error is not None:
        entry["error"] = error
    stages = [s for s in manifest["stages"] if s["stage"] != stage]
    stages.append(entry)
    order = {name: i for i, name in enumerate(STAGE_ORDER)}
    manifest["stages"] = sorted(stages, key=lambda s: order.get(s["stage"], 99))
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(_canonical_json(manifest))


def manifest_hashes(manifest: dict) -> dict[str, str]:
    """Flat {artifact path: sha256} view, independent of wall times."""
    out = {}
    for stage in manifest["stages"]:
        for item in stage["outputs"]:
            out[item["path"]] = item["sha256"]
    return out


# --- stages -----------------------------------------------------------------

def stage_pretrain(config: ExperimentConfig, out_dir: str) -> list[str]:
    """Generate and split the data, then train the classifier M."""
    os.makedirs(out_dir, exist_ok=True)
    data_cfg = config.raw["data"]
    full = generate_mixture(
        data_cfg["num_classes"], data_cfg["dim"], data_cfg["n"],
        data_cfg["class_separation"], config.seed_for("data-generate"),
    )
    splits = split_dataset(full, config.split_spec())
    log.info("split sizes: train=%d test=%d forget=%d retain=%d",
             splits["train"].n, splits["test"].n, splits["forget"].n, splits["retain"].n)

    cls_cfg = config.raw["classifier"]
    arch = make_classifier_arch(data_cfg["dim"], cls_cfg["hidden_dims"], data_cfg["num_classes"])
    model = pretrain_model(
        splits["train"], arch, cls_cfg["epochs"], cls_cfg["learning_rate"],
        config.seed_for("classifier"), cls_cfg.get("momentum", 0.9),
        cls_cfg.get("batch_size", 64),
    )

    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(_canonical_json(config.raw))
    outputs = ["config.json"]
    for tag in ("train", "test", "forget", "retain"):
        store_dataset(splits[tag], os.path.join(out_dir, f"{tag}.json"))
        outputs.append(f"{tag}.json")
    save_network(model, os.path.join(out_dir, "pretrained.json"), role="classifier")
    outputs.append("pretrained.json")
    return outputs


def _train_one_gan(config: ExperimentConfig, real: Dataset, source_tag: str):
    pair = train_gan(real, config.gan_config(source_tag), source_tag)
    log.info("gan-%s: kl %0.4f -> %0.4f", source_tag, pair.kl_trace[0][1], pair.kl_trace[-1][1])
    return pair


def stage_gan_train(config: ExperimentConfig, in_dir: str, out_dir: str, jobs: int = 1) -> list[str]:
    """Train both GAN pairs and sample the synthetic datasets."""
    os.makedirs(out_dir, exist_ok=True)
    forget = load_dataset(_require(in_dir, "forget.json"))
    retain = load_dataset(_require(in_dir, "retain.json"))

    if jobs >= 2:
        with concurrent.futures.ThreadPoolExecutor(max_workers=2) as pool:
            f_future = pool.submit(_train_one_gan, config, forget, "forget")
            r_future = pool.submit(_train_one_gan, config, retain, "retain")
            pairs = {"forget": f_future.result(), "retain": r_future.result()}
    else:
        pairs = {
            "forget": _train_one_gan(config, forget, "forget"),
            "retain": _train_one_gan(config, retain, "retain"),
        }

    ratio = float(config.raw["unlearn"]["synthetic_ratio"])
    outputs = []
    for tag, real in (("forget", forget), ("retain", retain)):
        pair = pairs[tag]
        save_network(pair.generator, os.path.join(out_dir, f"gan_{tag}_generator.json"),
                     role=f"{tag}_generator")
        save_network(pair.discriminator, os.path.join(out_dir, f"gan_{tag}_discriminator.json"),
                     role=f"{tag}_discriminator")
        write_kl_trace(pair.kl_trace, os.path.join(out_dir, f"kl_{tag}.csv"))
        outputs += [f"gan_{tag}_generator.json", f"gan_{tag}_discriminator.json", f"kl_{tag}.csv"]
        n_synth = int(round(ratio * real.n))
        if n_synth > 0:
            synth = sample_synthetic(pair.generator, n_synth,
                                     config.seed_for(f"synthetic-{tag}"), tag)
            store_dataset(synth, os.path.join(out_dir, f"synthetic_{tag}.json"))
            outputs.append(f"synthetic_{tag}.json")
    return outputs


def stage_unlearn(config: ExperimentConfig, in_dir: str, out_dir: str) -> list[str]:
    """Label synthetic data, build combined sets, fine-tune all models."""
    os.makedirs(out_dir, exist_ok=True)
    model = load_network(_require(in_dir, "pretrained.json"))
    forget = load_dataset(_require(in_dir, "forget.json"))
    retain = load_dataset(_require(in_dir, "retain.json"))
    plan = config.unlearn_plan()

    synth_forget = synth_retain = None
    if plan.synthetic_ratio > 0:
        synth_forget = label_synthetic(model, load_dataset(_require(in_dir, "synthetic_forget.json")))
        synth_retain = label_synthetic(model, load_dataset(_require(in_dir, "synthetic_retain.json")))

    sets = build_combined_sets(forget, retain, synth_forget, synth_retain, model, plan)
    proposed, phase_log = finetune_unlearn(model, sets, plan)

    b1_cfg = config.raw["baseline1"]
    baseline1 = baseline_retain_only(
        model, retain, b1_cfg["epochs"], b1_cfg["learning_rate"],
        config.seed_for("baseline1"), b1_cfg.get("momentum", 0.9), b1_cfg.get("batch_size", 64),
    )
    baseline2, b2_log = baseline_inverted_no_gan(model, forget, retain, plan)

    save_network(proposed, os.path.join(out_dir, "proposed.json"), role="unlearned")
    save_network(baseline1, os.path.join(out_dir, "baseline1.json"), role="baseline1")
    save_network(baseline2, os.path.join(out_dir, "baseline2.json"), role="baseline2")
    write_phase_log(phase_log, os.path.join(out_dir, "phase_log_proposed.csv"))
    write_phase_log(b2_log, os.path.join(out_dir, "phase_log_baseline2.csv"))
    return ["proposed.json", "baseline1.json", "baseline2.json",
            "phase_log_proposed.csv", "phase_log_baseline2.csv"]


def stage_evaluate(config: ExperimentConfig, in_dir: str, out_dir: str) -> list[str]:
    """Compile the metrics report from artifacts on disk (no retraining)."""
    os.makedirs(out_dir, exist_ok=True)
    models = {
        model_id: load_network(_require(in_dir, f"{name}.json"))
        for model_id, name in (("pretrained", "pretrained"), ("baseline1", "baseline1"),
                               ("baseline2", "baseline2"), ("proposed", "proposed"))
    }
    datasets = {
        tag: load_dataset(_require(in_dir, f"{tag}.json")) for tag in ("retain", "test", "forget")
    }
    traces = {
        "forget": read_kl_trace(_require(in_dir, "kl_forget.csv")),
        "retain": read_kl_trace(_require(in_dir, "kl_retain.csv")),
    }
    report = compile_report(models, datasets, traces, config.mia_config(), config_echo=config.raw)
    save_report(report, os.path.join(out_dir, "metrics.json"))
    write_report_csvs(report, out_dir)
    return ["metrics.json", "accuracy.csv", "mia.csv"]


STAGE_INPUTS = {
    "pretrain": [],
    "gan-train": ["forget.json", "retain.json"],
    "unlearn": ["pretrained.json", "forget.json", "retain.json"],
    "evaluate": ["pretrained.json", "baseline1.json", "baseline2.json", "proposed.json",
                 "retain.json", "test.json", "forget.json", "kl_forget.csv", "kl_retain.csv"],
}


def run_stage(stage: str, config: ExperimentConfig, in_dir: str, out_dir: str, jobs: int = 1) -> None:
    """Execute one stage and record it in the manifest (even on failure)."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = _load_manifest(out_dir, config)
    started = time.perf_counter()
    expected_inputs = list(STAGE_INPUTS[stage])
    try:
        if stage == "pretrain":
            outputs = stage_pretrain(config, out_dir)
        elif stage == "gan-train":
            outputs = stage_gan_train(config, in_dir, out_dir, jobs)
        elif stage == "unlearn":
            outputs = stage_unlearn(config, in_dir, out_dir)
        elif stage == "evaluate":
            outputs = stage_evaluate(config, in_dir, out_dir)
        else:
            raise ConfigurationError(f"unknown stage {stage!r}")
    except Exception as exc:
        elapsed = int((time.perf_counter() - started) * 1000)
        _record_stage(manifest, out_dir, stage, "failed", expected_inputs, [], elapsed, str(exc))
        raise
    elapsed = int((time.perf_counter() - started) * 1000)
    _record_stage(manifest, out_dir, stage, "ok", expected_inputs, outputs, elapsed)
    log.info("stage %s finished in %d ms (%d artifacts)", stage, elapsed, len(outputs))


def run_experiment(config_path: str, out_dir: str | None = None, jobs: int = 1) -> tuple[int, str]:
    """Run the full pipeline; returns (exit status, artifact directory).

    Exit status is 0 iff every stage succeeded. On failure, artifacts
    written so far are kept and the manifest records the failed stage.
    """
    config = ExperimentConfig.from_file(config_path)
    target = out_dir or config.raw.get("output_dir") or "out"
    for stage in STAGE_ORDER:
        try:
            run_stage(stage, config, target, target, jobs)
        except UnganError as exc:
            log.error("stage %s failed: %s", stage, exc)
            return 1, target
    return 0, target


def format_report_tables(report: MetricsReport) -> str:
    """Human-readable accuracy / MIA / KL summary."""
    lines = ["Accuracy (fraction correct)", f"  {'model':<12} {'retain':>8} {'test':>8} {'forget':>8}"]
    for model_id in ("pretrained", "baseline1", "baseline2", "proposed"):
        acc = report.accuracy[model_id]
        lines.append(
            f"  {model_id:<12} {acc['retain']:>8.3f} {acc['test']:>8.3f} {acc['forget']:>8.3f}"
        )
    lines.append("")
    attackers = sorted(next(iter(report.mia.values())).scores)
    header = " ".join(f"{a:>14}" for a in attackers)
    lines.append("Membership-inference score (balanced accuracy; 0.5 = not inferable)")
    lines.append(f"  {'model':<12} {header}")
    for model_id in ("pretrained", "baseline1", "baseline2", "proposed"):
        scores = report.mia[model_id].scores
        row = " ".join(f"{scores[a]:>14.3f}" for a in attackers)
        lines.append(f"  {model_id:<12} {row}")
    lines.append("")
    lines.append("KL divergence trace (real vs synthetic)")
    for tag in ("forget", "retain"):
        trace = report.kl_traces.get(tag, [])
        if trace:
            lines.append(
                f"  {tag}: epoch {trace[0][0]} -> {trace[-1][0]}: "
                f"{trace[0][1]:.4f} -> {trace[-1][1]:.4f}"
            )
    return "\n".join(lines)
