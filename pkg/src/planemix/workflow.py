"""End-to-end composition: data -> lift -> budget -> init -> train -> calibrate.

This is the one place the stages are wired together; the CLI, the benchmark
harness, and the demos all run through it so they cannot drift apart.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import budgeting, calibration, features, model as model_ops, training
from .datasets import (Dataset, SplitSpec, load_csv, make_aniso_blobs,
                       make_circles, make_moons, make_two_spirals,
                       stratified_split)

GENERATORS = ("moons", "circles", "aniso", "spirals")
# paper-scale default sample counts per generator
DEFAULT_SIZES = {"moons": 4000, "circles": 4000, "aniso": 4500, "spirals": 2000}


def generate_dataset(name: str, n: int | None = None, seed: int = 0,
                     noise: float | None = None, radius_ratio: float = 0.5,
                     turns: float = 2.0) -> Dataset:
    if name not in GENERATORS:
        raise ValueError(f"unknown dataset {name!r}; choose from {GENERATORS}")
    n = n or DEFAULT_SIZES[name]
    if name == "moons":
        return make_moons(n, noise if noise is not None else 0.25, seed=seed)
    if name == "circles":
        return make_circles(n, radius_ratio, noise if noise is not None else 0.08,
                            seed=seed)
    if name == "aniso":
        return make_aniso_blobs(n, seed=seed)
    return make_two_spirals(n, turns, seed=seed)


def load_dataset(source: str, seed: int = 0, n: int | None = None,
                 label_column: str | int = "label", **gen_kwargs) -> Dataset:
    """Named generator or CSV path, whichever the source string matches."""
    if source in GENERATORS:
        return generate_dataset(source, n=n, seed=seed, **gen_kwargs)
    return load_csv(source, label_column=label_column)


def split_dataset(data: Dataset, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """The evaluation protocol's stratified 60/20/20 split."""
    return stratified_split(data, SplitSpec(0.6, 0.2, 0.2, seed=seed))


@dataclass
class FitResult:
    model: model_ops.PlaneMixture
    log: training.TrainLog
    budget: budgeting.PlaneBudget
    lift_description: str
    lift_probes: list[features.LiftProbe]
    temperature: calibration.TemperatureFit | None
    train_seconds: float

    @property
    def stored_temperature(self) -> float | None:
        return self.temperature.temperature if self.temperature else None


def train_classifier(train: Dataset, val: Dataset, *, lift: str = "auto",
                     rff_dim: int = features.FINAL_RFF_DIM,
                     rff_gamma: float = 1.0, pca_variance: float | None = None,
                     planes: str | int = "auto", planes_cap: int = 4,
                     init: str = "auto", init_noise: float = 0.05,
                     config: training.TrainConfig | None = None,
                     calibrate: bool = True) -> FitResult:
    """Full recipe on an existing train/val split.

    lift is 'linear', 'rff', or 'auto' (probe-selected); planes is 'auto' for
    silhouette budgeting or a fixed per-class count.
    """
    if config is None:
        config = training.TrainConfig()
    started = time.perf_counter()

    probes: list[features.LiftProbe] = []
    if lift == "auto":
        cands = features.default_lift_candidates(pca_variance, seed=config.seed)
        pipeline, probes = features.select_lift(
            train, val, cands, training.probe_train_config(config.seed),
            final_rff_dim=rff_dim)
    elif lift in ("linear", "rff"):
        pipeline = features.build_pipeline(train, features.PipelineConfig(
            lift, rff_dim=rff_dim, rff_gamma=rff_gamma,
            pca_variance=pca_variance, seed=config.seed))
    else:
        raise ValueError(f"unknown lift {lift!r}")

    lifted = pipeline.apply(train.features)
    if planes == "auto":
        budget = budgeting.auto_budget(lifted, train.labels, train.class_count,
                                       cap=planes_cap, seed=config.seed)
    else:
        budget = budgeting.fixed_budget(train.class_count, int(planes), planes_cap)

    init_spec = budgeting.InitSpec(init, init_noise, config.seed)
    mdl, log = training.fit(train, val, pipeline, budget, init_spec, config)

    temp = None
    if calibrate:
        temp = calibration.fit_temperature(
            model_ops.class_scores(mdl, val.features), val.labels)
    seconds = time.perf_counter() - started
    return FitResult(mdl, log, budget, _describe_pipeline(pipeline), probes,
                     temp, seconds)


def _describe_pipeline(pipe: features.FeaturePipeline) -> str:
    parts = []
    if pipe.pca is not None:
        parts.append(f"pca(rank={pipe.pca.rank})")
    if pipe.rff is not None:
        parts.append(f"rff(dim={pipe.rff.output_dim}, gamma={pipe.rff.gamma:g})")
    return "+".join(parts) if parts else "linear"


def evaluate_model(mdl: model_ops.PlaneMixture, data: Dataset,
                   temperature: float | None = None) -> dict:
    """Accuracy, macro-F1, NLL, and calibration error (pre/post temperature)."""
    scores = model_ops.class_scores(mdl, data.features)
    preds = np.argmax(scores, axis=1)
    probs = model_ops.posterior(scores)
    out = {
        "accuracy": calibration.accuracy(preds, data.labels),
        "macro_f1": calibration.macro_f1(preds, data.labels, mdl.class_count),
        "nll": calibration.nll(scores, data.labels),
        "ece": calibration.ece(probs, data.labels),
    }
    if temperature is not None:
        scaled = calibration.apply_temperature(scores, temperature)
        out["temperature"] = temperature
        out["ece_scaled"] = calibration.ece(scaled, data.labels)
        out["nll_scaled"] = calibration.nll(scores / temperature, data.labels)
    return out


def dataset_fingerprint(data: Dataset) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data.features).tobytes())
    h.update(np.ascontiguousarray(data.labels).tobytes())
    return h.hexdigest()


def fit_metadata(result: FitResult, train: Dataset,
                 config: training.TrainConfig) -> dict:
    """What goes into the model file; deliberately free of wall-clock values."""
    return {
        "train_config": {
            "alpha_start": config.alpha_start, "alpha_end": config.alpha_end,
            "l2": config.l2, "usage_boost": config.usage_boost,
            "usage_floor": config.usage_floor,
            "label_smoothing": config.label_smoothing,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "lr_schedule": config.lr_schedule, "max_epochs": config.max_epochs,
            "patience": config.patience, "clip_norm": config.clip_norm,
            "usage_momentum": config.usage_momentum, "seed": config.seed,
        },
        "planes_per_class": list(result.budget.per_class),
        "lift": result.lift_description,
        "init_strategy": result.log.init_strategy,
        "best_epoch": result.log.best_epoch,
        "best_val_loss": result.log.best_val_loss,
        "epochs_run": len(result.log.epochs),
        "diverged": result.log.diverged,
        "train_fingerprint": dataset_fingerprint(train),
    }
