"""Command-line interface: synth, prepare, train, calibrate, eval, report.

All subcommands operate on a workspace directory (``--out``): the dataset
manifest, splits.json, models/ and rows/ live there. A flat key=value config
file can set any knob; explicit flags override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness

logger = logging.getLogger("texcascade")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key=value config file")
    parser.add_argument("--out", type=Path, default=None, help="workspace directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def _add_protocol(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, default=None, help="dataset directory (default: workspace)")
    parser.add_argument("--features", default=None, help="comma list, e.g. lbp,lpq")
    parser.add_argument("--lmax", type=int, default=None)
    parser.add_argument("--scale", type=float, default=None)
    parser.add_argument("--fusion", choices=("mean", "product", "max"), default=None)
    parser.add_argument("--grid-c", default=None, help="comma list of penalty values")
    parser.add_argument("--grid-gamma", default=None, help="comma list of kernel widths")
    parser.add_argument("--grid-steps", type=int, default=None)
    parser.add_argument("--replications", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texcascade",
        description="Cost-instrumented texture classification experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic grating dataset")
    _add_common(p_synth)
    p_synth.add_argument("--classes", type=int, default=None)
    p_synth.add_argument("--per-class", type=int, default=None)
    p_synth.add_argument("--size", type=int, default=None)

    p_prepare = sub.add_parser("prepare", help="build the manifest and split plans")
    _add_common(p_prepare)
    p_prepare.add_argument("--data", type=Path, default=None)
    p_prepare.add_argument("--replications", type=int, default=None)

    p_train = sub.add_parser("train", help="grid-search and fit train-only classifiers")
    _add_common(p_train)
    _add_protocol(p_train)

    p_cal = sub.add_parser("calibrate", help="calibrate thresholds and refit on train+val")
    _add_common(p_cal)
    _add_protocol(p_cal)

    p_eval = sub.add_parser("eval", help="classify the test split and record rows")
    _add_common(p_eval)
    _add_protocol(p_eval)
    p_eval.add_argument("--mode", choices=("slf", "amlf"), required=True)
    p_eval.add_argument("--level", type=int, default=None, help="grid level (slf mode)")

    p_report = sub.add_parser("report", help="merge recorded rows into a report")
    _add_common(p_report)
    p_report.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _config_from_args(args: argparse.Namespace) -> harness.ExperimentConfig:
    overrides = {
        "out_dir": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
        "data_dir": getattr(args, "data", None),
        "level_max": getattr(args, "lmax", None),
        "scale": getattr(args, "scale", None),
        "fusion": getattr(args, "fusion", None),
        "grid_steps": getattr(args, "grid_steps", None),
        "replications": getattr(args, "replications", None),
        "synth_classes": getattr(args, "classes", None),
        "synth_per_class": getattr(args, "per_class", None),
        "synth_size": getattr(args, "size", None),
    }
    features = getattr(args, "features", None)
    if features is not None:
        overrides["features"] = tuple(f.strip() for f in features.split(",") if f.strip())
    grid_c = getattr(args, "grid_c", None)
    if grid_c is not None:
        overrides["grid_penalty"] = tuple(float(v) for v in grid_c.split(","))
    grid_gamma = getattr(args, "grid_gamma", None)
    if grid_gamma is not None:
        overrides["grid_kernel_gamma"] = tuple(float(v) for v in grid_gamma.split(","))
    config = harness.build_config(args.config, **overrides)
    if config.data_dir is None:
        config = harness.build_config(args.config, **{**overrides, "data_dir": config.out_dir})
    return config


def _workspace_paths(config: harness.ExperimentConfig):
    out = Path(config.out_dir)
    return {
        "out": out,
        "splits": out / "splits.json",
        "models": out / "models",
        "rows": out / "rows",
    }


def _cmd_synth(config: harness.ExperimentConfig) -> None:
    manifest = harness.synth_dataset(
        config.synth_classes,
        config.synth_per_class,
        config.synth_size,
        config.seed,
        config.out_dir,
    )
    logger.info("wrote %d images and %s", len(manifest.entries), manifest.root / harness.MANIFEST_NAME)


def _cmd_prepare(config: harness.ExperimentConfig) -> None:
    paths = _workspace_paths(config)
    data_dir = Path(config.data_dir)
    try:
        manifest = harness.DatasetManifest.load(data_dir)
    except FileNotFoundError:
        manifest = harness.scan_dataset_dir(data_dir)
        manifest.save()
        logger.info("scanned %s into %s", data_dir, data_dir / harness.MANIFEST_NAME)
    plans = harness.make_splits(manifest, config.seed, config.replications)
    paths["out"].mkdir(parents=True, exist_ok=True)
    harness.save_splits(paths["splits"], plans)
    logger.info("wrote %s (%d replications)", paths["splits"], len(plans))


def _load_workspace(config: harness.ExperimentConfig):
    paths = _workspace_paths(config)
    manifest = harness.DatasetManifest.load(Path(config.data_dir))
    plans = harness.load_splits(paths["splits"])
    return paths, manifest, plans


def _cmd_train(config: harness.ExperimentConfig) -> None:
    paths, manifest, plans = _load_workspace(config)
    paths["models"].mkdir(parents=True, exist_ok=True)
    for plan in plans:
        stage = harness.train_stage(config, plan, manifest)
        target = paths["models"] / f"r{plan.replication:02d}.trained.json"
        harness.save_trained_stage(target, stage)
        logger.info("wrote %s", target)


def _cmd_calibrate(config: harness.ExperimentConfig) -> None:
    paths, manifest, plans = _load_workspace(config)
    for plan in plans:
        source = paths["models"] / f"r{plan.replication:02d}.trained.json"
        stage = harness.load_trained_stage(source)
        model = harness.calibrate_stage(config, plan, manifest, stage)
        target = paths["models"] / f"r{plan.replication:02d}.final.json"
        harness.save_model(target, model)
        logger.info("wrote %s", target)


def _cmd_eval(config: harness.ExperimentConfig, mode: str, level: int | None) -> None:
    paths, manifest, plans = _load_workspace(config)
    paths["rows"].mkdir(parents=True, exist_ok=True)
    rows = []
    for plan in plans:
        model = harness.load_model(paths["models"] / f"r{plan.replication:02d}.final.json")
        rows.append(harness.evaluate(config, model, plan, mode, level, manifest))
    name = f"slf_l{level}.json" if mode == "slf" else "amlf.json"
    level_max = harness._row_level_max(rows)
    columns = harness._report_columns(level_max)
    payload = {
        "format": "texcascade-rows",
        "version": 1,
        "feature_sets": harness.describe_feature_sets(config.descriptors),
        "columns": columns,
        "rows": [dict(zip(columns, harness._row_values(r, level_max))) for r in rows],
    }
    target = paths["rows"] / name
    target.write_text(json.dumps(payload, indent=2) + "\n")
    logger.info("wrote %s", target)


def _rows_from_payload(payload: dict) -> list[harness.ReportRow]:
    rows = []
    for record in payload["rows"]:
        exits = [record[c] for c in payload["columns"] if c.startswith("exit")]
        filled = tuple(int(v) for v in exits if v is not None)
        rows.append(
            harness.ReportRow(
                system_id=record["systemId"],
                replication=int(record["replication"]),
                accuracy=float(record["accuracy"]),
                measured_cost=int(record["measuredCost"]),
                analytic_cost=float(record["analyticCost"]),
                exit_counts=filled if any(v is not None for v in exits) else None,
            )
        )
    return rows


def _cmd_report(config: harness.ExperimentConfig, fmt: str) -> None:
    paths = _workspace_paths(config)
    row_files = sorted(paths["rows"].glob("*.json"))
    if not row_files:
        raise FileNotFoundError(f"no row files under {paths['rows']}; run eval first")
    rows: list[harness.ReportRow] = []
    feature_sets: dict[str, dict] = {}
    for row_file in row_files:
        payload = json.loads(row_file.read_text())
        rows.extend(_rows_from_payload(payload))
        for entry in payload.get("feature_sets", []):
            feature_sets[entry["set_id"]] = entry
    target = paths["out"] / f"report.{fmt}"
    merged = [feature_sets[k] for k in sorted(feature_sets)] or None
    harness.emit_report(rows, fmt, target, feature_sets=merged)
    logger.info("wrote %s", target)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = _config_from_args(args)
        if args.command == "synth":
            _cmd_synth(config)
        elif args.command == "prepare":
            _cmd_prepare(config)
        elif args.command == "train":
            _cmd_train(config)
        elif args.command == "calibrate":
            _cmd_calibrate(config)
        elif args.command == "eval":
            _cmd_eval(config, args.mode, args.level)
        elif args.command == "report":
            _cmd_report(config, args.format)
        else:  # pragma: no cover - argparse enforces the choices
            raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:
        print(f"texcascade: error: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint() -> None:  # pragma: no cover - thin wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entrypoint()
