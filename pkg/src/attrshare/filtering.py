"""Binarization of learned scores and the incremental merge that carries
state from task to task.

The merge is the heart of the no-forgetting guarantee: previous columns
are copied bit-for-bit, previously active attribute rows keep their order
(the index map only ever appends), and appended rows are zero in every
old column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .base import AttributeBase
from .errors import ConfigError, DataError, ShapeError, StateError
from .learner import AssignmentMatrix
from .tasks import ClassRegistry


@dataclass(frozen=True)
class AttributeIndexMap:
    """Ordered base indices of the currently active attributes, with the
    task at which each one was first selected."""

    indices: tuple[int, ...]
    added_at: tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) != len(self.added_at):
            raise StateError("index map fields have different lengths")
        if len(set(self.indices)) != len(self.indices):
            raise StateError("index map contains duplicate base indices")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class TaskState:
    """Everything inference needs after task `task_index`: the active-row
    index map, the binary assignment matrix over all classes so far, and
    the adapted attribute embeddings (one row per active attribute)."""

    task_index: int
    index_map: AttributeIndexMap
    A: AssignmentMatrix
    E_hat: np.ndarray
    registry: ClassRegistry
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.A.stage != "binary":
            raise StateError("task state requires a binary assignment matrix")
        n = len(self.index_map)
        if self.A.n_rows != n or self.E_hat.shape[0] != n:
            raise StateError(
                f"row mismatch: index map {n}, assignment {self.A.n_rows}, "
                f"embeddings {self.E_hat.shape[0]}"
            )
        if np.any(~self.A.values.any(axis=1)):
            raise StateError("assignment matrix has an all-zero row")
        if self.A.column_class_ids != self.registry.class_ids():
            raise StateError("assignment columns do not match the registry order")
        self.E_hat = np.asarray(self.E_hat, dtype=np.float64)
        self.A.values.setflags(write=False)
        self.E_hat.setflags(write=False)

    def new_class_columns(self) -> np.ndarray:
        """Column positions belonging to this state's own task."""
        return np.array(
            [
                j
                for j, cid in enumerate(self.A.column_class_ids)
                if self.registry.task_of(cid) == self.task_index
            ],
            dtype=np.int64,
        )


def binarize_topk(a_real: np.ndarray, h_a: int) -> np.ndarray:
    """Keep the C*H_a globally largest entries of the flattened matrix as
    ones, everything else zero. Ties break toward the smaller row-major
    flat index, which makes the output platform-independent."""
    a_real = np.asarray(a_real, dtype=np.float64)
    if a_real.ndim != 2:
        raise ShapeError(f"expected a 2-D score matrix, got shape {a_real.shape}")
    if h_a <= 0:
        raise ConfigError("H_a must be a positive integer")
    n_attrs, n_classes = a_real.shape
    k = n_classes * h_a
    if h_a > n_attrs:
        raise ConfigError(f"H_a={h_a} exceeds the {n_attrs} available attributes")
    flat = a_real.ravel()
    order = np.argsort(-flat, kind="stable")
    out = np.zeros_like(flat)
    out[order[:k]] = 1.0
    return out.reshape(a_real.shape)


def binarize_topk_per_class(a_real: np.ndarray, h_a: int) -> np.ndarray:
    """Variant selecting the top H_a entries within each class column
    (ties toward the smaller row index)."""
    a_real = np.asarray(a_real, dtype=np.float64)
    if a_real.ndim != 2:
        raise ShapeError(f"expected a 2-D score matrix, got shape {a_real.shape}")
    if h_a <= 0:
        raise ConfigError("H_a must be a positive integer")
    if h_a > a_real.shape[0]:
        raise ConfigError(f"H_a={h_a} exceeds the {a_real.shape[0]} available attributes")
    out = np.zeros_like(a_real)
    for col in range(a_real.shape[1]):
        order = np.argsort(-a_real[:, col], kind="stable")
        out[order[:h_a], col] = 1.0
    return out


def merge_assignment(
    prev: TaskState | None,
    a_bin_fullbase: np.ndarray,
    base: AttributeBase,
    new_class_ids: Sequence[int],
    task_index: int,
    registry: ClassRegistry,
    hyperparams: dict | None = None,
) -> TaskState:
    """Fold a freshly binarized full-base matrix into the running state.

    Active-row bookkeeping: previously active indices keep their order;
    newly selected base indices are appended in ascending order. Old
    columns are copied from `prev` unchanged (zero on appended rows); new
    columns are the binarized matrix restricted to the active rows. Rows
    that end up all-zero across every column are dropped. Embedding rows
    for retained indices keep their adapted values; appended indices start
    from the frozen base.
    """
    a_bin_fullbase = np.asarray(a_bin_fullbase, dtype=np.float64)
    if a_bin_fullbase.shape[0] != base.n_attributes:
        raise ShapeError(
            f"binarized matrix has {a_bin_fullbase.shape[0]} rows, base has {base.n_attributes}"
        )
    if not np.all(np.isin(a_bin_fullbase, (0.0, 1.0))):
        raise DataError("merge expects a binary matrix over the full base")
    new_class_ids = tuple(int(c) for c in new_class_ids)
    if a_bin_fullbase.shape[1] != len(new_class_ids):
        raise ShapeError("one column per new class required")

    if prev is not None:
        prev_ids = prev.registry.class_ids()
        if registry.class_ids()[: len(prev_ids)] != prev_ids:
            raise StateError("registry is not an extension of the previous task's registry")
        if prev.task_index >= task_index:
            raise StateError(
                f"previous state is task {prev.task_index}, cannot merge into task {task_index}"
            )
    if registry.class_ids() != (
        (prev.registry.class_ids() if prev is not None else ()) + new_class_ids
    ):
        raise StateError("new class ids do not extend the registry in order")

    selected = set(np.flatnonzero(a_bin_fullbase.any(axis=1)).tolist())
    retained = list(prev.index_map.indices) if prev is not None else []
    appended = sorted(selected.difference(retained))
    indices = retained + appended
    added_at = list(prev.index_map.added_at if prev is not None else ()) + [
        task_index
    ] * len(appended)

    n_old_cols = prev.A.n_classes if prev is not None else 0
    merged = np.zeros((len(indices), n_old_cols + len(new_class_ids)), dtype=np.float64)
    if prev is not None:
        merged[: len(retained), :n_old_cols] = prev.A.values
    merged[:, n_old_cols:] = a_bin_fullbase[np.array(indices, dtype=np.int64), :]

    e_hat = np.zeros((len(indices), base.dim), dtype=np.float64)
    if prev is not None:
        e_hat[: len(retained)] = prev.E_hat
    if appended:
        e_hat[len(retained):] = base.embeddings[np.array(appended, dtype=np.int64)]

    keep = merged.any(axis=1)
    if not keep.all():
        merged = merged[keep]
        e_hat = e_hat[keep]
        indices = [i for i, k in zip(indices, keep) if k]
        added_at = [a for a, k in zip(added_at, keep) if k]

    return TaskState(
        task_index=task_index,
        index_map=AttributeIndexMap(indices=tuple(indices), added_at=tuple(added_at)),
        A=AssignmentMatrix(
            values=merged,
            stage="binary",
            column_class_ids=registry.class_ids(),
        ),
        E_hat=e_hat,
        registry=registry,
        hyperparams=dict(hyperparams or {}),
    )


def sharing_stats(prev: TaskState | None, current: TaskState) -> dict:
    """How much the current task reused: total active rows, retained rows
    that serve some new class, and rows newly appended this task."""
    prev_count = len(prev.index_map) if prev is not None else 0
    newly_added = len(current.index_map) - prev_count
    reused = 0
    if prev is not None:
        new_cols = current.new_class_columns()
        head = current.A.values[:prev_count][:, new_cols]
        reused = int(head.any(axis=1).sum())
    return {
        "active_total": len(current.index_map),
        "reused_from_prev": reused,
        "newly_added": newly_added,
    }
