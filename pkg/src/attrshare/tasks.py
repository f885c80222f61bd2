"""Incremental task streams: synthetic scenario generation with known
ground truth, and ingestion of externally exported task embeddings.

A scenario is a sequence of phases; each phase introduces a disjoint set
of new classes. Synthetic classes are built as combinations of shared
attributes: the class prototype is the normalized mean of its true
attribute embeddings, and samples are noisy copies of the prototype.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .base import AttributeBase, SyntheticGroundTruth, assert_class_agnostic, synth_base
from .errors import ConfigError, DataError, ScenarioError
from .numerics import Rng, unit

# Background samples must stay at least this far (in cosine) from every
# class prototype.
BACKGROUND_COSINE_LIMIT = 0.5

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioConfig:
    dim: int
    partitions: tuple[int, ...]
    h: int
    attribute_overlap: float
    samples_per_class_train: int
    samples_per_class_eval: int
    noise_sigma: float
    n_distractor_attributes: int = 0
    n_background_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "partitions", tuple(int(p) for p in self.partitions))
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if not self.partitions or any(p < 1 for p in self.partitions):
            raise ConfigError("partitions must be a non-empty list of positive integers")
        if self.h < 1:
            raise ConfigError("h must be >= 1")
        if not 0.0 <= self.attribute_overlap <= 1.0:
            raise ConfigError("attribute_overlap must lie in [0, 1]")
        if self.samples_per_class_train < 1 or self.samples_per_class_eval < 1:
            raise ConfigError("samples per class must be positive")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.n_distractor_attributes < 0 or self.n_background_samples < 0:
            raise ConfigError("counts must be >= 0")

    @property
    def total_classes(self) -> int:
        return sum(self.partitions)

    def true_pool_size(self) -> int:
        """Number of true attribute rows generated for this scenario.

        Overlapping picks need fewer fresh attributes, so the pool shrinks
        with attribute_overlap; the extra h rows keep the first class's
        draws feasible in every configuration.
        """
        need = self.h * self.total_classes
        return math.ceil(need * (1.0 - self.attribute_overlap / 2.0)) + self.h


@dataclass
class TaskDataset:
    """Embedding-level data for one incremental phase."""

    task_index: int
    class_ids: tuple[int, ...]
    train_visual: np.ndarray
    train_labels: np.ndarray
    eval_visual: np.ndarray
    eval_labels: np.ndarray
    background_eval: np.ndarray

    def __post_init__(self):
        self.class_ids = tuple(int(c) for c in self.class_ids)
        ids = set(self.class_ids)
        if len(ids) != len(self.class_ids):
            raise ScenarioError("duplicate class ids within a task")
        for labels, visual, what in (
            (self.train_labels, self.train_visual, "train"),
            (self.eval_labels, self.eval_visual, "eval"),
        ):
            if visual.shape[0] != labels.shape[0]:
                raise DataError(f"{what} labels do not align with rows")
            if not set(int(l) for l in labels) <= ids:
                raise ScenarioError(f"{what} labels outside this task's class ids")
        for visual in (self.train_visual, self.eval_visual, self.background_eval):
            if visual.size and np.abs(np.linalg.norm(visual, axis=1) - 1.0).max() > _UNIT_TOL:
                raise DataError("visual rows must be unit-norm")
            visual.setflags(write=False)


class ClassRegistry:
    """Global class bookkeeping: ids, introduction task, display names.

    Registration order defines the column order of every assignment
    matrix, so it is never reordered.
    """

    def __init__(self):
        self._entries: list[tuple[int, int, str]] = []
        self._by_id: dict[int, int] = {}

    def add(self, class_id: int, task_index: int, name: str) -> None:
        if class_id in self._by_id:
            raise ScenarioError(f"class id {class_id} already registered")
        self._by_id[class_id] = len(self._entries)
        self._entries.append((class_id, task_index, name))

    def class_ids(self) -> tuple[int, ...]:
        return tuple(e[0] for e in self._entries)

    def ids_for_task(self, task_index: int) -> tuple[int, ...]:
        return tuple(e[0] for e in self._entries if e[1] == task_index)

    def task_of(self, class_id: int) -> int:
        return self._entries[self._by_id[class_id]][1]

    def name_of(self, class_id: int) -> str:
        return self._entries[self._by_id[class_id]][2]

    def __contains__(self, class_id: int) -> bool:
        return class_id in self._by_id

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple[tuple[int, int, str], ...]:
        return tuple(self._entries)

    def up_to_task(self, task_index: int) -> "ClassRegistry":
        """Snapshot containing only classes introduced at or before
        `task_index` (the registry a state at that task should carry)."""
        reg = ClassRegistry()
        for cid, t, name in self._entries:
            if t <= task_index:
                reg.add(cid, t, name)
        return reg

    def to_dicts(self) -> list[dict]:
        return [
            {"class_id": c, "task_index": t, "name": n} for c, t, n in self._entries
        ]

    @classmethod
    def from_dicts(cls, rows: list[dict]) -> "ClassRegistry":
        reg = cls()
        for row in rows:
            reg.add(int(row["class_id"]), int(row["task_index"]), str(row["name"]))
        return reg


def _pick_class_attributes(
    rng: Rng,
    cfg: ScenarioConfig,
    used: list[int],
    unused: list[int],
    prior_sets: tuple[frozenset[int], ...] = (),
) -> list[int]:
    """Pick h attribute indices for one class, reusing already-assigned
    attributes with probability attribute_overlap.

    The final pick refuses any candidate that would make this class's set
    identical to an earlier class's set: two classes with the same
    attributes would be the same concept under two ids.
    """
    chosen: list[int] = []
    for pick_index in range(cfg.h):
        reuse_candidates = [i for i in used if i not in chosen]
        if pick_index == cfg.h - 1:
            reuse_candidates = [
                i for i in reuse_candidates if frozenset(chosen + [i]) not in prior_sets
            ]
        want_reuse = rng.uniform(0.0, 1.0) < cfg.attribute_overlap
        if want_reuse and reuse_candidates:
            pick = reuse_candidates[rng.next_u64() % len(reuse_candidates)]
        elif unused:
            pick = unused[rng.next_u64() % len(unused)]
            unused.remove(pick)
            used.append(pick)
        elif reuse_candidates:
            pick = reuse_candidates[rng.next_u64() % len(reuse_candidates)]
        else:
            raise ConfigError("attribute pool exhausted; h is infeasible for this scenario")
        chosen.append(pick)
    return chosen


def generate_scenario(
    cfg: ScenarioConfig,
) -> tuple[AttributeBase, SyntheticGroundTruth, list[TaskDataset], ClassRegistry]:
    """Build a full synthetic scenario: base, ground truth, one dataset per
    phase, and the class registry."""
    rng = Rng(cfg.seed)
    base, true_indices, distractor_indices = synth_base(
        rng, cfg.true_pool_size(), cfg.n_distractor_attributes, cfg.dim
    )

    used: list[int] = []
    unused = list(true_indices)
    class_attrs: dict[int, frozenset[int]] = {}
    for class_id in range(cfg.total_classes):
        class_attrs[class_id] = frozenset(
            _pick_class_attributes(
                rng, cfg, used, unused, prior_sets=tuple(class_attrs.values())
            )
        )
    ground_truth = SyntheticGroundTruth(
        class_attributes=class_attrs, distractor_indices=frozenset(distractor_indices)
    )

    prototypes = {
        c: unit(base.embeddings[sorted(rows)].mean(axis=0)) for c, rows in class_attrs.items()
    }
    proto_matrix = np.stack([prototypes[c] for c in range(cfg.total_classes)])

    registry = ClassRegistry()
    datasets: list[TaskDataset] = []
    next_id = 0
    for t, n_classes in enumerate(cfg.partitions, start=1):
        ids = tuple(range(next_id, next_id + n_classes))
        next_id += n_classes
        for cid in ids:
            registry.add(cid, t, f"class_{cid:02d}")

        train_rows, train_labels, eval_rows, eval_labels = [], [], [], []
        for cid in ids:
            p = prototypes[cid]
            for _ in range(cfg.samples_per_class_train):
                g = rng.gaussians(cfg.dim)
                train_rows.append(p.copy() if cfg.noise_sigma == 0.0 else unit(p + cfg.noise_sigma * g))
                train_labels.append(cid)
            for _ in range(cfg.samples_per_class_eval):
                g = rng.gaussians(cfg.dim)
                eval_rows.append(p.copy() if cfg.noise_sigma == 0.0 else unit(p + cfg.noise_sigma * g))
                eval_labels.append(cid)

        backgrounds = []
        for _ in range(cfg.n_background_samples):
            while True:
                v = unit(rng.gaussians(cfg.dim))
                if float(np.max(proto_matrix @ v)) < BACKGROUND_COSINE_LIMIT:
                    backgrounds.append(v)
                    break
        background = (
            np.stack(backgrounds) if backgrounds else np.zeros((0, cfg.dim), dtype=np.float64)
        )
        if background.size:
            assert float(np.max(proto_matrix @ background.T)) < BACKGROUND_COSINE_LIMIT

        datasets.append(
            TaskDataset(
                task_index=t,
                class_ids=ids,
                train_visual=np.stack(train_rows),
                train_labels=np.array(train_labels, dtype=np.int64),
                eval_visual=np.stack(eval_rows),
                eval_labels=np.array(eval_labels, dtype=np.int64),
                background_eval=background,
            )
        )

    assert_class_agnostic(base, (registry.name_of(c) for c in registry.class_ids()))
    return base, ground_truth, datasets, registry


def load_task(
    embedding_path: str | Path,
    manifest_path: str | Path,
    task_index: int,
    registry: ClassRegistry,
) -> TaskDataset:
    """Ingest one exported task. Rows are L2-normalized here; the loaded
    rows serve as both train and eval split. New classes are registered
    in first-appearance order."""
    rows = io.read_ceb1(embedding_path)
    manifest = io.read_manifest(manifest_path, expect_kind="visual")
    class_ids = manifest["class_ids"]
    if len(class_ids) != rows.shape[0]:
        raise ScenarioError(
            f"manifest lists {len(class_ids)} class ids but file has {rows.shape[0]} rows"
        )
    if manifest["task_index"] != task_index:
        raise ScenarioError(
            f"manifest task_index {manifest['task_index']} does not match requested {task_index}"
        )

    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0.0):
        raise DataError(f"{embedding_path}: zero-norm visual row")
    rows = rows / norms[:, None]

    labels = manifest.get("labels")
    new_ids: list[int] = []
    for pos, cid in enumerate(class_ids):
        if cid in new_ids:
            continue
        if cid in registry:
            raise ScenarioError(f"class id {cid} already belongs to an earlier task")
        new_ids.append(cid)
        name = labels[pos] if labels is not None else f"class_{cid}"
        registry.add(cid, task_index, name)

    label_arr = np.array(class_ids, dtype=np.int64)
    return TaskDataset(
        task_index=task_index,
        class_ids=tuple(new_ids),
        train_visual=rows,
        train_labels=label_arr,
        eval_visual=rows,
        eval_labels=label_arr.copy(),
        background_eval=np.zeros((0, rows.shape[1]), dtype=np.float64),
    )
