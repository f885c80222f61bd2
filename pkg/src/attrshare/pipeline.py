"""End-to-end multi-phase runs: fit, binarize, merge, adapt, refine, and
evaluate per task, with checkpoint persistence and a JSON report.

Reports are byte-deterministic for a fixed config and seed except for the
wall-clock fields; `strip_timing` removes exactly those so two reports can
be compared bytewise.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .adapter import adapt_attributes, class_visual_means
from .base import AttributeBase, save_base
from .errors import AttrShareError, ConfigError, FormatError, StateError, VersionError
from .filtering import (
    AttributeIndexMap,
    TaskState,
    binarize_topk,
    binarize_topk_per_class,
    merge_assignment,
    sharing_stats,
)
from .inference import MetricsReport, evaluate
from .learner import AssignmentMatrix, TrainConfig, fit_assignment
from .refiner import refine_attributes
from .tasks import ClassRegistry, ScenarioConfig, TaskDataset, generate_scenario, load_task

REPORT_SCHEMA_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class AdaptConfig:
    lambda1: float = 1.0
    learning_rate: float = 2.0
    epochs: int = 500
    samples_per_class: int = 100
    combine: str = "mean"  # "mean": match the average of selected rows; "sum": raw A^T E

    def __post_init__(self):
        if self.lambda1 < 0 or self.learning_rate <= 0 or self.epochs < 0:
            raise ConfigError("invalid adaptation settings")
        if self.samples_per_class < 1:
            raise ConfigError("samples_per_class must be >= 1")
        if self.combine not in ("mean", "sum"):
            raise ConfigError(f"adapt combine must be 'mean' or 'sum', got {self.combine!r}")


@dataclass(frozen=True)
class RefineConfig:
    lambda2: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 100

    def __post_init__(self):
        if self.lambda2 < 0 or self.learning_rate <= 0 or self.epochs < 0:
            raise ConfigError("invalid refinement settings")


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    train: TrainConfig = TrainConfig()
    adapt: AdaptConfig = AdaptConfig()
    refine: RefineConfig = RefineConfig()
    h_a: int | None = None  # None: use scenario.h
    tau: float = 0.5
    per_class_topk: bool = False
    background_negatives: bool = False

    def __post_init__(self):
        if self.h_a is not None and self.h_a < 1:
            raise ConfigError("h_a must be >= 1 when given")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must lie in (0, 1)")

    @property
    def effective_h_a(self) -> int:
        return self.scenario.h if self.h_a is None else self.h_a

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {
            "scenario",
            "train",
            "adapt",
            "refine",
            "h_a",
            "tau",
            "per_class_topk",
            "background_negatives",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "scenario" not in raw:
            raise ConfigError("config needs a 'scenario' section")
        try:
            scenario = ScenarioConfig(**raw["scenario"])
            train = TrainConfig(**raw.get("train", {}))
            adapt = AdaptConfig(**raw.get("adapt", {}))
            refine = RefineConfig(**raw.get("refine", {}))
        except TypeError as exc:
            raise ConfigError(f"bad config section: {exc}") from exc
        return cls(
            scenario=scenario,
            train=train,
            adapt=adapt,
            refine=refine,
            h_a=raw.get("h_a"),
            tau=raw.get("tau", 0.5),
            per_class_topk=bool(raw.get("per_class_topk", False)),
            background_negatives=bool(raw.get("background_negatives", False)),
        )

    def to_dict(self) -> dict:
        return {
            "scenario": {
                "dim": self.scenario.dim,
                "partitions": list(self.scenario.partitions),
                "h": self.scenario.h,
                "attribute_overlap": self.scenario.attribute_overlap,
                "samples_per_class_train": self.scenario.samples_per_class_train,
                "samples_per_class_eval": self.scenario.samples_per_class_eval,
                "noise_sigma": self.scenario.noise_sigma,
                "n_distractor_attributes": self.scenario.n_distractor_attributes,
                "n_background_samples": self.scenario.n_background_samples,
                "seed": self.scenario.seed,
            },
            "train": {
                "lambda_l1": self.train.lambda_l1,
                "learning_rate": self.train.learning_rate,
                "epochs": self.train.epochs,
            },
            "adapt": {
                "lambda1": self.adapt.lambda1,
                "learning_rate": self.adapt.learning_rate,
                "epochs": self.adapt.epochs,
                "samples_per_class": self.adapt.samples_per_class,
                "combine": self.adapt.combine,
            },
            "refine": {
                "lambda2": self.refine.lambda2,
                "learning_rate": self.refine.learning_rate,
                "epochs": self.refine.epochs,
            },
            "h_a": self.effective_h_a,
            "tau": self.tau,
            "per_class_topk": self.per_class_topk,
            "background_negatives": self.background_negatives,
        }

    def fingerprint(self) -> dict:
        digest = hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()
        return {"seed": self.scenario.seed, "config_sha256": digest}


def load_run_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(raw)


def _quantized(state: TaskState) -> TaskState:
    """Truncate embeddings to the float32 grid used by checkpoints, so the
    in-memory state and its persisted form classify identically."""
    return TaskState(
        task_index=state.task_index,
        index_map=state.index_map,
        A=state.A,
        E_hat=state.E_hat.astype(np.float32).astype(np.float64),
        registry=state.registry,
        hyperparams=state.hyperparams,
    )


def run_task(
    config: RunConfig,
    base: AttributeBase,
    dataset: TaskDataset,
    registry: ClassRegistry,
    prev: TaskState | None,
) -> tuple[TaskState, dict]:
    """One incremental phase: fit over the full base, binarize, merge,
    adapt, refine. Returns the quantized state and its loss trajectories."""
    t = dataset.task_index
    train_cfg = TrainConfig(
        lambda_l1=config.train.lambda_l1,
        learning_rate=config.train.learning_rate,
        epochs=config.train.epochs,
        seed=config.scenario.seed + t,
    )
    a_real, fit_traj = fit_assignment(
        base.embeddings, dataset, train_cfg, background_negatives=config.background_negatives
    )
    binarize = binarize_topk_per_class if config.per_class_topk else binarize_topk
    a_bin = binarize(a_real.values, config.effective_h_a)
    state = merge_assignment(
        prev,
        a_bin,
        base,
        new_class_ids=dataset.class_ids,
        task_index=t,
        registry=registry.up_to_task(t),
        hyperparams=config.to_dict(),
    )

    e_prev = (
        prev.E_hat if prev is not None else np.zeros((0, base.dim), dtype=np.float64)
    )
    means = class_visual_means(dataset, config.adapt.samples_per_class)
    state, adapt_traj = adapt_attributes(
        state,
        means,
        e_prev,
        config.adapt.lambda1,
        config.adapt.learning_rate,
        config.adapt.epochs,
        combine=config.adapt.combine,
    )
    state, refine_traj = refine_attributes(
        state, dataset, e_prev, config.refine.lambda2, config.refine.learning_rate,
        config.refine.epochs,
    )
    state = _quantized(state)
    trajectories = {
        "fit": fit_traj,
        "adapt": adapt_traj,
        "refine": refine_traj,
        "train_seed": train_cfg.seed,
    }
    return state, trajectories


def run_pipeline(config: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Run every phase of the configured scenario.

    When `out_dir` is given, a checkpoint directory is written after every
    task and the report lands in `report.json`; a stage failure still
    writes the partial report, flagged incomplete, before re-raising.
    """
    started = time.perf_counter()
    out_path = Path(out_dir) if out_dir is not None else None
    report: dict = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": config.to_dict(),
        "fingerprint": config.fingerprint(),
        "tasks": [],
        "baseline_old_accuracy": None,
        "incomplete": False,
        "timing": {"total_seconds": 0.0},
    }
    try:
        base, ground_truth, datasets, registry = generate_scenario(config.scenario)
        prev: TaskState | None = None
        baseline: float | None = None
        for dataset in datasets:
            task_started = time.perf_counter()
            state, trajectories = run_task(config, base, dataset, registry, prev)
            metrics = evaluate(
                state,
                [d for d in datasets if d.task_index <= state.task_index],
                baseline_old_accuracy=baseline,
                tau=config.tau,
            )
            if state.task_index == 1:
                baseline = metrics.per_task_accuracy[1]
                report["baseline_old_accuracy"] = baseline
            entry = {
                "task_index": state.task_index,
                "train_seed": trajectories.pop("train_seed"),
                "n_active_attributes": len(state.index_map),
                "metrics": metrics.to_dict(),
                "sharing": sharing_stats(prev, state),
                "loss_trajectories": trajectories,
                "timing": {"seconds": time.perf_counter() - task_started},
            }
            report["tasks"].append(entry)
            if out_path is not None:
                save_checkpoint(
                    state,
                    out_path / "checkpoints" / f"task_{state.task_index:02d}",
                    fingerprint=config.fingerprint(),
                )
            prev = state
    except Exception:
        report["incomplete"] = True
        raise
    finally:
        report["timing"]["total_seconds"] = time.perf_counter() - started
        if out_path is not None:
            out_path.mkdir(parents=True, exist_ok=True)
            io.atomic_write_bytes(out_path / "report.json", _report_bytes(report))
    return report


def _report_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode()


def strip_timing(report: dict) -> dict:
    """Report without its wall-clock fields; byte-deterministic for a
    fixed config."""

    def strip(node):
        if isinstance(node, dict):
            return {k: strip(v) for k, v in node.items() if k != "timing"}
        if isinstance(node, list):
            return [strip(v) for v in node]
        return node

    return strip(report)


# -- checkpoints --------------------------------------------------------


def save_checkpoint(state: TaskState, directory: str | Path, fingerprint: dict | None = None) -> None:
    """Persist a task state. The directory is assembled under a temp name
    and swapped in, so a killed run never leaves a half-written
    checkpoint in place."""
    final = Path(directory)
    tmp = final.with_name(final.name + ".tmp")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)

    io.write_ceb1(tmp / "ehat.ceb1", state.E_hat)
    columns = []
    for j, cid in enumerate(state.A.column_class_ids):
        rows = np.flatnonzero(state.A.values[:, j]).tolist()
        columns.append({"class_id": int(cid), "rows": rows})
    (tmp / "assignment.json").write_text(
        json.dumps({"columns": columns}, indent=2, sort_keys=True) + "\n"
    )
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "task_index": state.task_index,
        "indices": list(state.index_map.indices),
        "added_at": list(state.index_map.added_at),
        "registry": state.registry.to_dicts(),
        "hyperparams": state.hyperparams,
        "fingerprint": fingerprint or {},
    }
    (tmp / "state.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    if final.exists():
        shutil.rmtree(final)
    tmp.rename(final)


def load_checkpoint(directory: str | Path) -> TaskState:
    directory = Path(directory)
    state_path = directory / "state.json"
    if not state_path.exists():
        raise FormatError(f"{directory}: not a checkpoint (missing state.json)")
    try:
        meta = json.loads(state_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{state_path}: corrupt checkpoint metadata ({exc})") from exc
    version = meta.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise VersionError(
            f"{directory}: checkpoint format version {version!r} is not supported "
            f"(this build reads version {CHECKPOINT_FORMAT_VERSION})"
        )

    try:
        registry = ClassRegistry.from_dicts(meta["registry"])
        index_map = AttributeIndexMap(
            indices=tuple(int(i) for i in meta["indices"]),
            added_at=tuple(int(a) for a in meta["added_at"]),
        )
        task_index = int(meta["task_index"])
        hyperparams = meta.get("hyperparams", {})
        assignment_doc = json.loads((directory / "assignment.json").read_text())
        columns = assignment_doc["columns"]
    except (KeyError, TypeError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{directory}: corrupt checkpoint payload ({exc})") from exc

    e_hat = io.read_ceb1(directory / "ehat.ceb1")
    n_rows = len(index_map)
    if [c["class_id"] for c in columns] != list(registry.class_ids()):
        raise StateError(f"{directory}: assignment columns disagree with the registry")
    values = np.zeros((n_rows, len(columns)), dtype=np.float64)
    for j, col in enumerate(columns):
        rows = col["rows"]
        if any(not 0 <= r < n_rows for r in rows):
            raise StateError(f"{directory}: assignment row position out of range")
        values[rows, j] = 1.0

    return TaskState(
        task_index=task_index,
        index_map=index_map,
        A=AssignmentMatrix(values=values, stage="binary", column_class_ids=registry.class_ids()),
        E_hat=e_hat,
        registry=registry,
        hyperparams=hyperparams,
    )


# -- scenario export and file-based evaluation --------------------------


def write_scenario_files(cfg: ScenarioConfig, out_dir: str | Path) -> dict:
    """Materialize a synthetic scenario as CEB1 + manifest files (the same
    layout `eval --data` consumes), plus the ground truth for inspection."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base, ground_truth, datasets, registry = generate_scenario(cfg)

    save_base(base, out / "base.ceb1", out / "base.manifest.json")
    for dataset in datasets:
        t = dataset.task_index
        for split, visual, labels in (
            ("train", dataset.train_visual, dataset.train_labels),
            ("eval", dataset.eval_visual, dataset.eval_labels),
        ):
            stem = f"task_{t:02d}_{split}"
            io.write_ceb1(out / f"{stem}.ceb1", visual)
            io.write_manifest(
                out / f"{stem}.manifest.json",
                {
                    "kind": "visual",
                    "task_index": t,
                    "class_ids": [int(l) for l in labels],
                    "labels": [registry.name_of(int(l)) for l in labels],
                },
            )
    truth_doc = {
        "class_attributes": {
            str(c): sorted(rows) for c, rows in ground_truth.class_attributes.items()
        },
        "distractor_indices": sorted(ground_truth.distractor_indices),
    }
    (out / "ground_truth.json").write_text(json.dumps(truth_doc, indent=2, sort_keys=True) + "\n")
    return {
        "n_attributes": base.n_attributes,
        "tasks": [d.task_index for d in datasets],
        "classes": len(registry),
    }


def evaluate_checkpoint(
    checkpoint_dir: str | Path, data_dir: str | Path, tau: float = 0.5
) -> MetricsReport:
    """Evaluate a persisted state on exported eval files (task_*_eval.*).

    Files for tasks the checkpoint has not learned yet are ignored; the
    class ids of each loaded task must match the checkpoint's registry.
    """
    state = load_checkpoint(checkpoint_dir)
    data = Path(data_dir)
    registry = ClassRegistry()
    datasets = []
    for ceb_path in sorted(data.glob("task_*_eval.ceb1")):
        manifest_path = ceb_path.with_name(ceb_path.name.replace(".ceb1", ".manifest.json"))
        manifest = io.read_manifest(manifest_path, expect_kind="visual")
        t = manifest["task_index"]
        if t > state.task_index:
            continue
        datasets.append(load_task(ceb_path, manifest_path, t, registry))
    if not datasets:
        raise AttrShareError(f"no evaluable task files found in {data}")
    for dataset in datasets:
        expected = state.registry.ids_for_task(dataset.task_index)
        if tuple(dataset.class_ids) != expected:
            raise StateError(
                f"task {dataset.task_index} classes {dataset.class_ids} do not match "
                f"checkpoint classes {expected}"
            )
    return evaluate(state, datasets, baseline_old_accuracy=None, tau=tau)


def export_scores(checkpoint_dir: str | Path) -> dict:
    """Dump the binary attribute-to-class structure of a checkpoint as a
    JSON-ready dict (which base attributes each class selected)."""
    state = load_checkpoint(checkpoint_dir)
    classes = []
    for j, cid in enumerate(state.A.column_class_ids):
        rows = np.flatnonzero(state.A.values[:, j]).tolist()
        classes.append(
            {
                "class_id": int(cid),
                "name": state.registry.name_of(cid),
                "task_index": state.registry.task_of(cid),
                "attribute_rows": rows,
                "attribute_base_indices": [state.index_map.indices[r] for r in rows],
            }
        )
    return {
        "task_index": state.task_index,
        "active_attributes": {
            "base_indices": list(state.index_map.indices),
            "added_at": list(state.index_map.added_at),
        },
        "classes": classes,
    }
