"""Experiment orchestration: manifests, seeded split replications, synthetic
textures, the train/calibrate/evaluate pipeline, and report emission."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .amlf import (
    AmlfModel,
    MarginRange,
    amlf_classify,
    calibrate_thresholds,
)
from .classifier import KernelClassifier, fit_svm, grid_search
from .cost import CostLedger, CostParams, global_amlf, global_slf
from .features import FEATURE_SETS, FeatureSetDescriptor, extract
from .imaging import GrayImage, load_image, rescale, split_patches, write_pgm
from .slf import SlfLevelModel, slf_classify

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
_IMAGE_SUFFIXES = (".pgm", ".png")

# Classic coarse hyperparameter grids; override in the config for desk-scale runs.
DEFAULT_GRID_PENALTY = tuple(2.0 ** e for e in range(-5, 16, 2))
DEFAULT_GRID_KERNEL_GAMMA = tuple(2.0 ** e for e in range(-15, 4, 2))


# ---------------------------------------------------------------------------
# Dataset manifest and splits


@dataclass(frozen=True)
class DatasetManifest:
    """Image paths with class labels; labels are indexed alphabetically."""

    root: Path
    entries: tuple[tuple[str, str], ...]  # (relative path, label), sorted by path
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        counts: dict[str, int] = {}
        for _, label in self.entries:
            counts[label] = counts.get(label, 0) + 1
        if sorted(counts) != list(self.labels):
            raise ValueError("labels must be the sorted distinct entry labels")
        if len(self.labels) < 2:
            raise ValueError("a dataset needs at least two classes")
        for label, n in counts.items():
            if n < 4:
                raise ValueError(f"class {label!r} has {n} samples; at least 4 required")

    @property
    def class_count(self) -> int:
        return len(self.labels)

    def label_id(self, label: str) -> int:
        return self.labels.index(label)

    def class_ids(self) -> np.ndarray:
        index = {label: i for i, label in enumerate(self.labels)}
        return np.asarray([index[label] for _, label in self.entries])

    def image_path(self, entry_index: int) -> Path:
        return self.root / self.entries[entry_index][0]

    @classmethod
    def from_mapping(cls, root: Path, mapping: Mapping[str, str]) -> "DatasetManifest":
        entries = tuple(sorted((str(p), str(label)) for p, label in mapping.items()))
        labels = tuple(sorted({label for _, label in entries}))
        return cls(root=Path(root), entries=entries, labels=labels)

    @classmethod
    def load(cls, data_dir: Path) -> "DatasetManifest":
        data_dir = Path(data_dir)
        manifest_path = data_dir / MANIFEST_NAME
        if not manifest_path.is_file():
            raise FileNotFoundError(f"no {MANIFEST_NAME} in {data_dir}")
        mapping = json.loads(manifest_path.read_text())
        if not isinstance(mapping, dict):
            raise ValueError(f"{manifest_path} must hold a path -> label mapping")
        return cls.from_mapping(data_dir, mapping)

    def save(self) -> Path:
        path = self.root / MANIFEST_NAME
        path.write_text(json.dumps(dict(self.entries), indent=2, sort_keys=True) + "\n")
        return path


def scan_dataset_dir(data_dir: Path) -> DatasetManifest:
    """Build a manifest from a directory laid out as <label>/<image>."""
    data_dir = Path(data_dir)
    mapping: dict[str, str] = {}
    for label_dir in sorted(p for p in data_dir.iterdir() if p.is_dir()):
        for image_path in sorted(label_dir.iterdir()):
            if image_path.suffix.lower() in _IMAGE_SUFFIXES:
                mapping[f"{label_dir.name}/{image_path.name}"] = label_dir.name
    if not mapping:
        raise ValueError(f"no {'/'.join(_IMAGE_SUFFIXES)} images found under {data_dir}")
    return DatasetManifest.from_mapping(data_dir, mapping)


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint train/validation/test entry indices for one replication."""

    replication: int
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self) -> None:
        pools = (set(self.train), set(self.val), set(self.test))
        total = len(self.train) + len(self.val) + len(self.test)
        if len(pools[0] | pools[1] | pools[2]) != total:
            raise ValueError("split subsets must be disjoint")
        if not (pools[0] and pools[1] and pools[2]):
            raise ValueError("every split subset must be non-empty")


def make_splits(manifest: DatasetManifest, seed: int, replications: int) -> list[SplitPlan]:
    """Stratified 50/20/30 splits, floor-rounded per class, seeded per replication.

    Rounding is floor(n/2) train and floor(n/5) validation with the remainder
    as test; a class of exactly 4 samples gets its validation share bumped to
    one sample so every subset stays non-empty.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    class_ids = manifest.class_ids()
    plans = []
    for replication in range(1, replications + 1):
        rng = np.random.default_rng((seed, replication))
        train: list[int] = []
        val: list[int] = []
        test: list[int] = []
        for class_id in range(manifest.class_count):
            indices = np.flatnonzero(class_ids == class_id)
            order = indices[rng.permutation(indices.size)]
            n = indices.size
            n_train = n // 2
            n_val = max(1, n // 5)
            train.extend(int(i) for i in order[:n_train])
            val.extend(int(i) for i in order[n_train : n_train + n_val])
            test.extend(int(i) for i in order[n_train + n_val :])
        plans.append(
            SplitPlan(
                replication=replication,
                train=tuple(sorted(train)),
                val=tuple(sorted(val)),
                test=tuple(sorted(test)),
                seed=seed,
            )
        )
    return plans


def save_splits(path: Path, plans: Sequence[SplitPlan]) -> None:
    payload = {
        "format": "texcascade-splits",
        "version": 1,
        "seed": plans[0].seed,
        "replications": len(plans),
        "plans": [
            {
                "replication": p.replication,
                "train": list(p.train),
                "val": list(p.val),
                "test": list(p.test),
            }
            for p in plans
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_splits(path: Path) -> list[SplitPlan]:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != "texcascade-splits":
        raise ValueError(f"{path} is not a splits file")
    seed = int(payload["seed"])
    return [
        SplitPlan(
            replication=int(p["replication"]),
            train=tuple(int(i) for i in p["train"]),
            val=tuple(int(i) for i in p["val"]),
            test=tuple(int(i) for i in p["test"]),
            seed=seed,
        )
        for p in payload["plans"]
    ]


# ---------------------------------------------------------------------------
# Synthetic dataset


def synth_dataset(
    class_count: int,
    per_class: int,
    size: int,
    seed: int,
    out_dir: Path,
) -> DatasetManifest:
    """Generate a desk-scale texture dataset of oriented sinusoidal gratings.

    Class k is a grating at orientation k*pi/class_count with a class-specific
    spatial frequency; each image gets a random phase, a small frequency
    jitter, and Gaussian noise (sigma = 20 intensity levels). Deterministic
    per seed, byte for byte.
    """
    if class_count < 2:
        raise ValueError("class_count must be >= 2")
    if per_class < 4:
        raise ValueError("per_class must be >= 4")
    if size < 32:
        raise ValueError("size must be >= 32")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    mapping: dict[str, str] = {}
    for k in range(class_count):
        angle = np.pi * k / class_count
        axis = cols * np.cos(angle) + rows * np.sin(angle)
        base_freq = (4.0 + 3.0 * k) / 64.0  # cycles per pixel
        label = f"class{k:02d}"
        for i in range(per_class):
            phase = rng.uniform(0.0, 2.0 * np.pi)
            freq = base_freq * rng.uniform(0.95, 1.05)
            noise = rng.normal(0.0, 20.0, (size, size))
            wave = 127.5 + 80.0 * np.sin(2.0 * np.pi * freq * axis + phase)
            values = np.clip(np.floor(wave + noise + 0.5), 0, 255).astype(np.uint8)
            name = f"{label}_{i:03d}.pgm"
            write_pgm(GrayImage(values), out_dir / name)
            mapping[name] = label
    manifest = DatasetManifest.from_mapping(out_dir, mapping)
    manifest.save()
    return manifest


# ---------------------------------------------------------------------------
# Experiment configuration


_CONFIG_INT_KEYS = {
    "lmax",
    "grid_steps",
    "replications",
    "seed",
    "synth_classes",
    "synth_per_class",
    "synth_size",
}
_CONFIG_FLOAT_KEYS = {"scale"}
_CONFIG_LIST_KEYS = {"features", "grid_c", "grid_gamma"}
_CONFIG_STR_KEYS = {"data_dir", "out_dir", "fusion"}


@dataclass(frozen=True)
class ExperimentConfig:
    """All protocol knobs of one experiment."""

    data_dir: Path | None = None
    out_dir: Path = Path(".")
    features: tuple[str, ...] = ("lbp",)
    level_max: int = 3
    scale: float = 1.0
    fusion: str = "mean"
    grid_penalty: tuple[float, ...] = DEFAULT_GRID_PENALTY
    grid_kernel_gamma: tuple[float, ...] = DEFAULT_GRID_KERNEL_GAMMA
    grid_steps: int = 10
    replications: int = 10
    seed: int = 0
    synth_classes: int = 5
    synth_per_class: int = 20
    synth_size: int = 64

    def __post_init__(self) -> None:
        if self.level_max < 1:
            raise ValueError("lmax must be >= 1")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError("scale must lie in (0, 1]")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.grid_steps < 2:
            raise ValueError("grid_steps must be >= 2")
        for set_id in self.features:
            if set_id not in FEATURE_SETS:
                raise ValueError(
                    f"unknown feature set {set_id!r}; known: {sorted(FEATURE_SETS)}"
                )
        if len(set(self.features)) != len(self.features) or not self.features:
            raise ValueError("features must be a non-empty list without duplicates")
        if self.fusion not in ("mean", "product", "max"):
            raise ValueError(f"unknown fusion rule {self.fusion!r}")

    @property
    def descriptors(self) -> tuple[FeatureSetDescriptor, ...]:
        return tuple(FEATURE_SETS[set_id] for set_id in self.features)

    def system_id(self, mode: str, level: int | None = None) -> str:
        prefix = "".join({"lbp": "B", "lpq": "P"}.get(f, f[:1].upper()) for f in self.features)
        if mode == "amlf":
            return f"{prefix}*"
        if mode == "slf":
            if level is None:
                raise ValueError("slf mode requires a level")
            return f"{prefix}{level}"
        raise ValueError(f"unknown mode {mode!r}")


def _parse_config_value(key: str, raw: str):
    if key in _CONFIG_INT_KEYS:
        return int(raw)
    if key in _CONFIG_FLOAT_KEYS:
        return float(raw)
    if key in _CONFIG_LIST_KEYS:
        items = [item.strip() for item in raw.split(",") if item.strip()]
        if key == "features":
            return tuple(items)
        return tuple(float(item) for item in items)
    if key in _CONFIG_STR_KEYS:
        return raw
    raise ValueError(f"unknown config key {key!r}")


_CONFIG_FIELD_OF_KEY = {
    "data_dir": "data_dir",
    "out_dir": "out_dir",
    "features": "features",
    "lmax": "level_max",
    "scale": "scale",
    "fusion": "fusion",
    "grid_c": "grid_penalty",
    "grid_gamma": "grid_kernel_gamma",
    "grid_steps": "grid_steps",
    "replications": "replications",
    "seed": "seed",
    "synth_classes": "synth_classes",
    "synth_per_class": "synth_per_class",
    "synth_size": "synth_size",
}


def load_config(path: Path) -> dict:
    """Parse a flat key=value config file into constructor keyword arguments.

    Blank lines and lines starting with '#' are ignored. List values are
    comma-separated. Keys are documented in the README.
    """
    overrides: dict = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        value = _parse_config_value(key, raw)
        field_name = _CONFIG_FIELD_OF_KEY[key]
        if field_name in ("data_dir", "out_dir"):
            value = Path(value)
        overrides[field_name] = value
    return overrides


def build_config(config_file: Path | None = None, **cli_overrides) -> ExperimentConfig:
    """Defaults, then config file values, then explicit CLI overrides."""
    values: dict = {}
    if config_file is not None:
        values.update(load_config(config_file))
    values.update({k: v for k, v in cli_overrides.items() if v is not None})
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# Sample loading with split provenance tags


@dataclass(frozen=True)
class TaggedSample:
    """One dataset image with its split role attached.

    Training and calibration code refuses samples whose role is not allowed,
    so no test sample can leak into model fitting.
    """

    index: int
    role: str
    class_id: int
    image: GrayImage
    source_pixels: int


def ensure_roles(samples: Sequence[TaggedSample], allowed: set[str]) -> None:
    for sample in samples:
        if sample.role not in allowed:
            raise RuntimeError(
                f"split violation: sample {sample.index} tagged {sample.role!r} "
                f"reached a code path restricted to {sorted(allowed)}"
            )


def _select(
    samples: Sequence[TaggedSample], indices: Sequence[int], role: str
) -> list[TaggedSample]:
    """Pick the plan's samples by index and verify their provenance tags."""
    by_index = {s.index: s for s in samples}
    selected = [by_index[i] for i in indices if i in by_index]
    if not selected:
        raise ValueError(f"the {role} split is empty")
    ensure_roles(selected, {role})
    return selected


def load_samples(
    manifest: DatasetManifest, plan: SplitPlan, scale: float
) -> list[TaggedSample]:
    """Load and rescale every image of a replication, tagged with its role."""
    class_ids = manifest.class_ids()
    samples = []
    for role, indices in (("train", plan.train), ("val", plan.val), ("test", plan.test)):
        for index in indices:
            original = load_image(manifest.image_path(index))
            samples.append(
                TaggedSample(
                    index=index,
                    role=role,
                    class_id=int(class_ids[index]),
                    image=rescale(original, scale),
                    source_pixels=original.pixel_count,
                )
            )
    return samples


def _patch_feature_matrix(
    samples: Sequence[TaggedSample], level: int, descriptor: FeatureSetDescriptor
) -> tuple[np.ndarray, np.ndarray]:
    """One row per patch of every sample, labeled with the sample's class."""
    rows = []
    labels = []
    for sample in samples:
        for patch in split_patches(sample.image, level).patches:
            rows.append(extract(patch, descriptor.set_id).values)
            labels.append(sample.class_id)
    return np.vstack(rows), np.asarray(labels, dtype=np.int64)


# ---------------------------------------------------------------------------
# Training pipeline


@dataclass(frozen=True)
class ChosenCell:
    level: int
    set_id: str
    penalty: float
    kernel_gamma: float
    val_accuracy: float


@dataclass(frozen=True)
class TrainedStage:
    """Classifiers fit on the training split only, plus the selected grid cells."""

    levels: tuple[SlfLevelModel, ...]
    chosen: tuple[ChosenCell, ...]

    def cell(self, level: int, set_id: str) -> ChosenCell:
        for cell in self.chosen:
            if cell.level == level and cell.set_id == set_id:
                return cell
        raise KeyError(f"no chosen cell for level {level}, set {set_id}")


def train_stage(
    config: ExperimentConfig,
    plan: SplitPlan,
    manifest: DatasetManifest,
    samples: Sequence[TaggedSample] | None = None,
) -> TrainedStage:
    """Grid-search every (level, feature set) cell and fit train-only models."""
    if samples is None:
        samples = load_samples(manifest, plan, config.scale)
    train_samples = _select(samples, plan.train, "train")
    val_samples = _select(samples, plan.val, "val")
    levels = []
    chosen = []
    for level in range(1, config.level_max + 1):
        classifiers = []
        for descriptor in config.descriptors:
            train_x, train_y = _patch_feature_matrix(train_samples, level, descriptor)
            val_x, val_y = _patch_feature_matrix(val_samples, level, descriptor)
            result = grid_search(
                train_x,
                train_y,
                val_x,
                val_y,
                config.grid_penalty,
                config.grid_kernel_gamma,
                config.seed,
            )
            logger.info(
                "replication %d level %d %s: penalty=%g kernel_gamma=%g val_acc=%.4f",
                plan.replication,
                level,
                descriptor.set_id,
                result.penalty,
                result.kernel_gamma,
                result.accuracy,
            )
            classifiers.append(
                fit_svm(train_x, train_y, result.penalty, result.kernel_gamma, config.seed)
            )
            chosen.append(
                ChosenCell(level, descriptor.set_id, result.penalty, result.kernel_gamma, result.accuracy)
            )
        levels.append(
            SlfLevelModel(level=level, feature_sets=config.descriptors, classifiers=tuple(classifiers))
        )
    return TrainedStage(levels=tuple(levels), chosen=tuple(chosen))


def calibrate_stage(
    config: ExperimentConfig,
    plan: SplitPlan,
    manifest: DatasetManifest,
    stage: TrainedStage,
    samples: Sequence[TaggedSample] | None = None,
) -> AmlfModel:
    """Calibrate thresholds with the train-only models, then refit on train+val."""
    if samples is None:
        samples = load_samples(manifest, plan, config.scale)
    train_samples = _select(samples, plan.train, "train")
    val_samples = _select(samples, plan.val, "val")
    provisional = AmlfModel(
        levels=stage.levels, thresholds=(0.0,) * (config.level_max - 1)
    )
    calibration = calibrate_thresholds(
        [(s.image, s.class_id) for s in val_samples],
        provisional,
        config.grid_steps,
        config.fusion,
    )
    logger.info(
        "replication %d thresholds=%s val_acc=%.4f",
        plan.replication,
        calibration.thresholds,
        calibration.accuracy,
    )
    fit_pool = train_samples + val_samples
    levels = []
    for level in range(1, config.level_max + 1):
        classifiers = []
        for descriptor in config.descriptors:
            cell = stage.cell(level, descriptor.set_id)
            x, y = _patch_feature_matrix(fit_pool, level, descriptor)
            classifiers.append(fit_svm(x, y, cell.penalty, cell.kernel_gamma, config.seed))
        levels.append(
            SlfLevelModel(level=level, feature_sets=config.descriptors, classifiers=tuple(classifiers))
        )
    return AmlfModel(
        levels=tuple(levels),
        thresholds=calibration.thresholds,
        margin_ranges=calibration.margin_ranges,
    )


def train_pipeline(
    config: ExperimentConfig,
    plan: SplitPlan,
    manifest: DatasetManifest | None = None,
) -> AmlfModel:
    """The full protocol for one replication: grid search with hold-out
    validation, threshold calibration with train-only classifiers, then a
    refit of every classifier on train plus validation."""
    if manifest is None:
        if config.data_dir is None:
            raise ValueError("config.data_dir is required when no manifest is given")
        manifest = DatasetManifest.load(config.data_dir)
    samples = load_samples(manifest, plan, config.scale)
    stage = train_stage(config, plan, manifest, samples)
    return calibrate_stage(config, plan, manifest, stage, samples)


# ---------------------------------------------------------------------------
# Evaluation and reports


@dataclass(frozen=True)
class ReportRow:
    system_id: str
    replication: int
    accuracy: float
    measured_cost: int
    analytic_cost: float
    exit_counts: tuple[int, ...] | None = None


def _cost_params_for(
    model: AmlfModel, config: ExperimentConfig, pixels: int
) -> CostParams:
    gammas = {
        index + 1: tuple(clf.gamma_cost for clf in level_model.classifiers)
        for index, level_model in enumerate(model.levels)
    }
    return CostParams.for_feature_sets(config.descriptors, gammas, pixels, config.scale)


def evaluate(
    config: ExperimentConfig,
    model: AmlfModel,
    plan: SplitPlan,
    mode: str,
    level: int | None = None,
    manifest: DatasetManifest | None = None,
    samples: Sequence[TaggedSample] | None = None,
) -> ReportRow:
    """Classify every test sample of one replication and assemble a report row.

    The measured cost is the ledger's global operation count (pixel-filter
    operations plus dimension-weighted classifier operations); the analytic
    cost evaluates the global cost formulas with the run's own exit counts.
    """
    if mode not in ("slf", "amlf"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "slf":
        if level is None or not 1 <= level <= model.level_max:
            raise ValueError("slf mode requires a level within the model")
    if samples is None:
        if manifest is None:
            if config.data_dir is None:
                raise ValueError("manifest or config.data_dir is required")
            manifest = DatasetManifest.load(config.data_dir)
        samples = load_samples(manifest, plan, config.scale)
    test_samples = _select(samples, plan.test, "test")

    ledger = CostLedger()
    correct = 0
    analytic = 0.0
    for sample in test_samples:
        params = _cost_params_for(model, config, sample.source_pixels)
        if mode == "slf":
            probs = slf_classify(sample.image, model.levels[level - 1], config.fusion, ledger)
            prediction = int(np.argmax(probs))
            ledger.record_sample()
            analytic += global_slf(1, level, params)
        else:
            result = amlf_classify(sample.image, model, config.fusion, ledger)
            prediction = result.decision
            analytic += global_amlf({result.exit_level: 1}, params)
        correct += int(prediction == sample.class_id)
    exits = None
    if mode == "amlf":
        exits = tuple(ledger.exit_counts.get(l, 0) for l in range(1, model.level_max + 1))
    return ReportRow(
        system_id=config.system_id(mode, level),
        replication=plan.replication,
        accuracy=correct / len(test_samples),
        measured_cost=ledger.feature_ops + ledger.classifier_dim_ops,
        analytic_cost=analytic,
        exit_counts=exits,
    )


def _report_columns(level_max: int) -> list[str]:
    return [
        "systemId",
        "replication",
        "accuracy",
        "measuredCost",
        "analyticCost",
        *[f"exit{l}" for l in range(1, level_max + 1)],
    ]


def _row_level_max(rows: Sequence[ReportRow]) -> int:
    return max((len(r.exit_counts) for r in rows if r.exit_counts is not None), default=0)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_values(row: ReportRow, level_max: int) -> list:
    exits: list[int | None]
    if row.exit_counts is None:
        exits = [None] * level_max
    else:
        exits = list(row.exit_counts) + [None] * (level_max - len(row.exit_counts))
    return [
        row.system_id,
        row.replication,
        row.accuracy,
        row.measured_cost,
        row.analytic_cost,
        *exits,
    ]


def summarize(rows: Sequence[ReportRow]) -> dict:
    """Per-system mean/stddev of accuracy and costs (population stddev)."""
    summary: dict[str, dict] = {}
    for system_id in sorted({r.system_id for r in rows}):
        group = [r for r in rows if r.system_id == system_id]
        accuracy = np.asarray([r.accuracy for r in group], dtype=np.float64)
        measured = np.asarray([r.measured_cost for r in group], dtype=np.float64)
        analytic = np.asarray([r.analytic_cost for r in group], dtype=np.float64)
        entry = {
            "replications": len(group),
            "accuracy_mean": float(accuracy.mean()),
            "accuracy_stddev": float(accuracy.std()),
            "measured_cost_mean": float(measured.mean()),
            "measured_cost_stddev": float(measured.std()),
            "analytic_cost_mean": float(analytic.mean()),
            "analytic_cost_stddev": float(analytic.std()),
            "measured_to_analytic_ratio": float(measured.sum() / analytic.sum()),
        }
        if all(r.exit_counts is not None for r in group):
            totals = np.sum([r.exit_counts for r in group], axis=0)
            entry["exit_fractions"] = [float(v) for v in totals / totals.sum()]
        summary[system_id] = entry
    return summary


def describe_feature_sets(descriptors: Sequence[FeatureSetDescriptor]) -> list[dict]:
    """Descriptor identity and cost metadata as report-ready records."""
    return [
        {"set_id": d.set_id, "dim": d.dim, "window": d.window} for d in descriptors
    ]


def emit_report(
    rows: Sequence[ReportRow],
    fmt: str,
    path: Path,
    feature_sets: Sequence[dict] | None = None,
) -> Path:
    """Write rows as CSV or JSON with a stable column order.

    The JSON report mirrors the CSV rows losslessly and adds a per-system
    summary block plus the descriptor metadata when given.
    """
    if not rows:
        raise ValueError("cannot emit an empty report")
    rows = sorted(rows, key=lambda r: (r.system_id, r.replication))
    level_max = _row_level_max(rows)
    columns = _report_columns(level_max)
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_format_cell(v) for v in _row_values(row, level_max)))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "format": "texcascade-report",
            "version": 1,
            "columns": columns,
            "rows": [dict(zip(columns, _row_values(row, level_max))) for row in rows],
            "summary": summarize(rows),
        }
        if feature_sets:
            payload["feature_sets"] = list(feature_sets)
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}; expected csv or json")
    return path


def read_report_csv(path: Path) -> list[ReportRow]:
    """Parse a CSV report back into rows (exact float round trip)."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"empty report file {path}")
    header = lines[0].split(",")
    exit_columns = [c for c in header if c.startswith("exit")]
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        record = dict(zip(header, cells))
        exits_raw = [record[c] for c in exit_columns]
        exits = tuple(int(v) for v in exits_raw if v != "")
        rows.append(
            ReportRow(
                system_id=record["systemId"],
                replication=int(record["replication"]),
                accuracy=float(record["accuracy"]),
                measured_cost=int(record["measuredCost"]),
                analytic_cost=float(record["analyticCost"]),
                exit_counts=exits if any(v != "" for v in exits_raw) else None,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Model files


_MODEL_FORMAT = "texcascade-model"


def _levels_to_dict(levels: Sequence[SlfLevelModel]) -> list[dict]:
    return [
        {
            "level": level_model.level,
            "feature_sets": [d.set_id for d in level_model.feature_sets],
            "classifiers": [clf.to_dict() for clf in level_model.classifiers],
        }
        for level_model in levels
    ]


def _levels_from_dict(data: Sequence[dict]) -> tuple[SlfLevelModel, ...]:
    levels = []
    for entry in data:
        descriptors = tuple(FEATURE_SETS[set_id] for set_id in entry["feature_sets"])
        classifiers = tuple(KernelClassifier.from_dict(c) for c in entry["classifiers"])
        levels.append(
            SlfLevelModel(
                level=int(entry["level"]),
                feature_sets=descriptors,
                classifiers=classifiers,
            )
        )
    return tuple(levels)


def save_trained_stage(path: Path, stage: TrainedStage) -> None:
    payload = {
        "format": _MODEL_FORMAT,
        "version": 1,
        "stage": "trained",
        "levels": _levels_to_dict(stage.levels),
        "chosen": [
            {
                "level": c.level,
                "set_id": c.set_id,
                "penalty": c.penalty,
                "kernel_gamma": c.kernel_gamma,
                "val_accuracy": c.val_accuracy,
            }
            for c in stage.chosen
        ],
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def load_trained_stage(path: Path) -> TrainedStage:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != _MODEL_FORMAT or payload.get("stage") != "trained":
        raise ValueError(f"{path} is not a trained-stage model file")
    chosen = tuple(
        ChosenCell(
            level=int(c["level"]),
            set_id=c["set_id"],
            penalty=float(c["penalty"]),
            kernel_gamma=float(c["kernel_gamma"]),
            val_accuracy=float(c["val_accuracy"]),
        )
        for c in payload["chosen"]
    )
    return TrainedStage(levels=_levels_from_dict(payload["levels"]), chosen=chosen)


def save_model(path: Path, model: AmlfModel) -> None:
    payload = {
        "format": _MODEL_FORMAT,
        "version": 1,
        "stage": "final",
        "levels": _levels_to_dict(model.levels),
        "thresholds": [float(t) for t in model.thresholds],
        "margin_ranges": [
            {"level": r.level, "low": r.low, "high": r.high} for r in model.margin_ranges
        ],
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def load_model(path: Path) -> AmlfModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != _MODEL_FORMAT or payload.get("stage") != "final":
        raise ValueError(f"{path} is not a final model file")
    ranges = tuple(
        MarginRange(level=int(r["level"]), low=float(r["low"]), high=float(r["high"]))
        for r in payload["margin_ranges"]
    )
    return AmlfModel(
        levels=_levels_from_dict(payload["levels"]),
        thresholds=tuple(float(t) for t in payload["thresholds"]),
        margin_ranges=ranges,
    )
