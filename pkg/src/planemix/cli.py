"""Command-line interface.

Subcommands: generate, fit, predict, evaluate, calibrate, bench, inspect.
Named datasets (moons, circles, aniso, spirals) are generated on the fly and
split 60/20/20 by the given seed; anything else is treated as a CSV path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench, calibration, diagnostics, model as model_ops, persist, workflow
from .datasets import Dataset, save_csv
from .svgplot import grid_svg, reliability_svg
from .training import TrainConfig


def _add_dataset_args(p: argparse.ArgumentParser, with_gen: bool = True):
    p.add_argument("--dataset", required=True,
                   help="named generator (moons|circles|aniso|spirals) or CSV path")
    p.add_argument("--label-column", default="label",
                   help="label column name or index for CSV input")
    if with_gen:
        p.add_argument("--n", type=int, default=None,
                       help="sample count for named generators")
        p.add_argument("--noise", type=float, default=None)
        p.add_argument("--radius-ratio", type=float, default=0.5)
        p.add_argument("--turns", type=float, default=2.0)


def _load(args, seed: int) -> Dataset:
    label_col = args.label_column
    if isinstance(label_col, str) and label_col.lstrip("-").isdigit():
        label_col = int(label_col)
    kwargs = {}
    if getattr(args, "noise", None) is not None:
        kwargs["noise"] = args.noise
    if hasattr(args, "radius_ratio"):
        kwargs["radius_ratio"] = args.radius_ratio
        kwargs["turns"] = args.turns
    return workflow.load_dataset(args.dataset, seed=seed,
                                 n=getattr(args, "n", None),
                                 label_column=label_col, **kwargs)


def _split_for(args, data: Dataset, part: str) -> Dataset:
    """Named generators use the protocol split; CSV files are used whole
    unless a split part is requested explicitly."""
    choice = getattr(args, "split", None) or \
        (part if args.dataset in workflow.GENERATORS else "all")
    if choice == "all":
        return data
    train, val, test = workflow.split_dataset(data, args.seed)
    return {"train": train, "val": val, "test": test}[choice]


def _add_fit_args(p: argparse.ArgumentParser):
    p.add_argument("--lift", choices=("linear", "rff", "auto"), default="auto")
    p.add_argument("--rff-dim", type=int, default=1024,
                   help="random feature count (lifted dim is twice this)")
    p.add_argument("--rff-gamma", type=float, default=1.0)
    p.add_argument("--pca-variance", type=float, default=None)
    p.add_argument("--planes", default="auto",
                   help="'auto' or a fixed per-class plane count")
    p.add_argument("--planes-cap", type=int, default=4)
    p.add_argument("--init", choices=("auto", "kmeans", "logreg", "random"),
                   default="auto")
    p.add_argument("--init-noise", type=float, default=0.05)
    p.add_argument("--no-calibrate", action="store_true",
                   help="skip temperature fitting on the validation split")
    # training recipe
    p.add_argument("--alpha-start", type=float, default=3.0)
    p.add_argument("--alpha-end", type=float, default=6.0)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--usage-boost", type=float, default=0.5)
    p.add_argument("--usage-floor", type=float, default=1e-3)
    p.add_argument("--label-smoothing", type=float, default=0.02)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=1e-2)
    p.add_argument("--lr-schedule", choices=("cosine", "exponential", "constant"),
                   default="cosine")
    p.add_argument("--max-epochs", type=int, default=300)
    p.add_argument("--patience", type=int, default=12)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--usage-momentum", type=float, default=0.9)
    p.add_argument("--class-weights", default=None,
                   help="comma-separated per-class loss weights")


def _config_from(args) -> TrainConfig:
    weights = None
    if args.class_weights:
        weights = tuple(float(v) for v in args.class_weights.split(","))
    return TrainConfig(
        alpha_start=args.alpha_start, alpha_end=args.alpha_end, l2=args.l2,
        usage_boost=args.usage_boost, usage_floor=args.usage_floor,
        label_smoothing=args.label_smoothing, class_weights=weights,
        batch_size=args.batch_size, learning_rate=args.learning_rate,
        lr_schedule=args.lr_schedule, max_epochs=args.max_epochs,
        patience=args.patience, clip_norm=args.clip_norm,
        usage_momentum=args.usage_momentum, seed=args.seed)


def cmd_generate(args) -> int:
    data = workflow.generate_dataset(
        args.dataset, n=args.n, seed=args.seed,
        noise=args.noise, radius_ratio=args.radius_ratio, turns=args.turns)
    save_csv(data, args.out)
    print(f"wrote {data.n} samples, {data.class_count} classes -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    data = _load(args, args.seed)
    train, val, test = workflow.split_dataset(data, args.seed)
    config = _config_from(args)
    result = workflow.train_classifier(
        train, val, lift=args.lift, rff_dim=args.rff_dim,
        rff_gamma=args.rff_gamma, pca_variance=args.pca_variance,
        planes=args.planes if args.planes == "auto" else int(args.planes),
        planes_cap=args.planes_cap, init=args.init, init_noise=args.init_noise,
        config=config, calibrate=not args.no_calibrate)

    persist.save_model(result.model, args.out, result.stored_temperature,
                       workflow.fit_metadata(result, train, config))
    stem = args.out[:-5] if args.out.endswith(".json") else args.out
    result.log.to_csv(stem + ".train_log.csv")
    metrics = workflow.evaluate_model(result.model, test,
                                      result.stored_temperature)
    summary = _fit_summary(args, result, metrics)
    with open(stem + ".summary.txt", "w") as fh:
        fh.write(summary)
    print(summary, end="")
    return 0


def _fit_summary(args, result, metrics) -> str:
    lines = [
        f"dataset:        {args.dataset} (seed {args.seed})",
        f"lift:           {result.lift_description}",
        f"planes/class:   {list(result.budget.per_class)}",
        f"init:           {result.log.init_strategy}",
        f"epochs run:     {len(result.log.epochs)}"
        + (" (early stop)" if result.log.stopped_early else ""),
        f"best val loss:  {result.log.best_val_loss:.6f} "
        f"(epoch {result.log.best_epoch})",
        f"train seconds:  {result.train_seconds:.2f}",
        f"test accuracy:  {metrics['accuracy']:.4f}",
        f"test macro-F1:  {metrics['macro_f1']:.4f}",
        f"test ece:       {metrics['ece']:.4f}",
    ]
    if "ece_scaled" in metrics:
        lines.append(f"test ece (T):   {metrics['ece_scaled']:.4f} "
                     f"at T={metrics['temperature']:.3f}")
    if result.log.diverged:
        lines.append("WARNING: training diverged; parameters are the last "
                     "finite snapshot")
    for note in result.log.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def cmd_predict(args) -> int:
    mdl, temperature, _ = persist.load_model(args.model)
    if args.alpha is not None:
        mdl = mdl.with_alpha(args.alpha)
    data = _load(args, args.seed)
    data = _split_for(args, data, "test")
    scores = model_ops.class_scores(mdl, data.features)
    if temperature is not None:
        probs = calibration.apply_temperature(scores, temperature)
    else:
        probs = model_ops.posterior(scores)
    preds = np.argmax(scores, axis=1)
    names = mdl.class_names or tuple(str(c) for c in range(mdl.class_count))
    if args.format == "json":
        rows = [{"prediction": names[p],
                 "probabilities": {names[c]: float(probs[i, c])
                                   for c in range(mdl.class_count)}}
                for i, p in enumerate(preds)]
        text = json.dumps(rows, indent=2) + "\n"
    else:
        header = "prediction," + ",".join(f"p_{n}" for n in names)
        lines = [header]
        for i, p in enumerate(preds):
            lines.append(names[p] + "," +
                         ",".join(repr(float(v)) for v in probs[i]))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def cmd_evaluate(args) -> int:
    mdl, temperature, _ = persist.load_model(args.model)
    if args.alpha is not None:
        mdl = mdl.with_alpha(args.alpha)
    data = _load(args, args.seed)
    data = _split_for(args, data, "test")
    metrics = workflow.evaluate_model(mdl, data, temperature)
    if args.format == "json":
        text = json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    else:
        text = "metric,value\n" + "".join(
            f"{k},{metrics[k]!r}\n" for k in sorted(metrics))
    _emit(text, args.out)
    return 0


def cmd_calibrate(args) -> int:
    mdl, _, metadata = persist.load_model(args.model)
    data = _load(args, args.seed)
    data = _split_for(args, data, "val")
    fit = calibration.fit_temperature(
        model_ops.class_scores(mdl, data.features), data.labels)
    out = args.out or args.model
    metadata["calibration"] = {
        "nll_before": fit.nll_before, "nll_after": fit.nll_after,
        "ece_before": fit.ece_before, "ece_after": fit.ece_after,
        "degenerate": fit.degenerate,
    }
    persist.save_model(mdl, out, fit.temperature, metadata)
    print(f"temperature {fit.temperature:.4f} "
          f"(nll {fit.nll_before:.4f} -> {fit.nll_after:.4f}, "
          f"ece {fit.ece_before:.4f} -> {fit.ece_after:.4f}) -> {out}")
    return 0


def cmd_bench(args) -> int:
    datasets = tuple(args.datasets.split(","))
    seeds = tuple(int(s) for s in args.seeds.split(","))
    report = bench.run_suite(datasets, seeds, lift=args.lift,
                             with_scaling=not args.skip_scaling,
                             measure_latency=not args.skip_latency)
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "bench_report.csv")
    json_path = os.path.join(args.out_dir, "bench_report.json")
    bench.report_to_csv(report, csv_path)
    bench.report_to_json(report, json_path)
    for cell in report.cells:
        status = cell.error or (f"acc={cell.accuracy:.4f} "
                                f"ece={cell.ece_after:.4f} "
                                f"lift={cell.lift}")
        print(f"{cell.dataset} seed={cell.seed}: {status}")
    if report.scaling is not None:
        print(f"plane scaling: slope {report.scaling.slope_ns:.1f} ns/plane, "
              f"R^2 {report.scaling.r_squared:.4f}")
    print(f"wrote {csv_path} and {json_path}")
    failures = sum(1 for c in report.cells if c.error)
    return 1 if failures == len(report.cells) else 0


def cmd_inspect(args) -> int:
    mdl, temperature, _ = persist.load_model(args.model)
    if args.alpha is not None:
        mdl = mdl.with_alpha(args.alpha)
    data = _load(args, args.seed)
    data = _split_for(args, data, "test")
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = {"artifacts": [], "notes": []}

    def artifact(name: str, text: str):
        path = os.path.join(args.out_dir, name)
        with open(path, "w") as fh:
            fh.write(text)
        manifest["artifacts"].append(name)

    stats = diagnostics.responsibility_stats(mdl, data.features, data.labels)
    usage = diagnostics.plane_usage(mdl, data.features, data.labels)
    usage_lines = ["class,plane,winner_fraction_pct"]
    for c, row in enumerate(usage.fractions):
        for m, frac in enumerate(row):
            usage_lines.append(f"{c},{m},{100.0 * frac:.2f}")
    artifact("plane_usage.csv", "\n".join(usage_lines) + "\n")
    artifact("responsibility_stats.json", json.dumps({
        "mean_max_responsibility": stats.mean_max,
        "mean_responsibility_entropy": stats.mean_entropy,
        "absent_classes": [c for c, a in enumerate(usage.absent) if a],
    }, indent=2) + "\n")

    if mdl.pipeline.is_linear:
        lines = ["class,plane,feature,weight"]
        for c in range(mdl.class_count):
            for m in range(int(mdl.planes_per_class[c])):
                for name, w in diagnostics.plane_saliency(
                        mdl, c, m, feature_names=data.feature_names):
                    lines.append(f"{c},{m},{name},{w!r}")
        artifact("saliency.csv", "\n".join(lines) + "\n")
    else:
        manifest["notes"].append(
            "saliency skipped: random-feature lift has no per-input weights")

    if mdl.pipeline.input_dim == 2:
        bounds = diagnostics.bounds_from(data.features)
        res = args.grid_resolution
        dgrid = diagnostics.decision_grid(mdl, bounds, res)
        dgrid.to_csv(os.path.join(args.out_dir, "decision_grid.csv"))
        manifest["artifacts"].append("decision_grid.csv")
        artifact("decision_grid.svg",
                 grid_svg(dgrid, data.features, data.labels,
                          title="decision regions"))
        for c in range(mdl.class_count):
            rgrid = diagnostics.responsibility_grid(mdl, c, bounds, res)
            artifact(f"responsibility_grid_class{c}.svg",
                     grid_svg(rgrid, title=f"class {c} plane responsibilities"))
    else:
        manifest["notes"].append("grids skipped: input space is not 2-D")

    scores = model_ops.class_scores(mdl, data.features)
    probs = model_ops.posterior(scores)
    rows = calibration.reliability_data(probs, data.labels)
    before = calibration.ece(probs, data.labels)
    artifact("reliability_before.csv", _reliability_csv(rows))
    artifact("reliability_before.svg",
             reliability_svg(rows, before, "reliability (uncalibrated)"))
    if temperature is not None:
        scaled = calibration.apply_temperature(scores, temperature)
        rows_t = calibration.reliability_data(scaled, data.labels)
        after = calibration.ece(scaled, data.labels)
        artifact("reliability_after.csv", _reliability_csv(rows_t))
        artifact("reliability_after.svg",
                 reliability_svg(rows_t, after,
                                 f"reliability (T={temperature:.3f})"))

    with open(os.path.join(args.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(manifest['artifacts'])} artifacts -> {args.out_dir}")
    return 0


def _reliability_csv(rows) -> str:
    lines = ["bin_low,bin_high,mean_confidence,accuracy,count"]
    for r in rows:
        lines.append(f"{r.low!r},{r.high!r},{r.mean_confidence!r},"
                     f"{r.accuracy!r},{r.count}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planemix",
        description="Mixture-of-planes classifier: train, evaluate, inspect.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    p.add_argument("--dataset", required=True, choices=workflow.GENERATORS)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--radius-ratio", type=float, default=0.5)
    p.add_argument("--turns", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("fit", help="train a model on a 60/20/20 split")
    _add_dataset_args(p)
    _add_fit_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="model.json")
    p.set_defaults(fn=cmd_fit)

    for name, fn, help_text in (
            ("predict", cmd_predict, "predict labels and probabilities"),
            ("evaluate", cmd_evaluate, "report accuracy, F1, NLL, and ece")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True)
        _add_dataset_args(p)
        p.add_argument("--split", choices=("all", "train", "val", "test"),
                       default=None,
                       help="which protocol split to use (default: test for "
                            "named datasets, all for CSV)")
        p.add_argument("--alpha", type=float, default=None,
                       help="override the stored pooling sharpness")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(fn=fn)

    p = sub.add_parser("calibrate", help="fit the temperature on given data")
    p.add_argument("--model", required=True)
    _add_dataset_args(p)
    p.add_argument("--split", choices=("all", "train", "val", "test"),
                   default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None,
                   help="output model path (default: overwrite input)")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("bench", help="run the benchmark suite")
    p.add_argument("--datasets", default=",".join(workflow.GENERATORS))
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--lift", choices=("linear", "rff", "auto"), default="auto")
    p.add_argument("--skip-latency", action="store_true")
    p.add_argument("--skip-scaling", action="store_true")
    p.add_argument("--out-dir", default="bench_out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("inspect", help="write an interpretability report")
    p.add_argument("--model", required=True)
    _add_dataset_args(p)
    p.add_argument("--split", choices=("all", "train", "val", "test"),
                   default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--grid-resolution", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="inspect_out")
    p.set_defaults(fn=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
