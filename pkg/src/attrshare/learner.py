"""Learning the real-valued attribute-to-class assignment matrix.

For each new task the full attribute base is rescored: per-sample cosine
similarities against the frozen base are precomputed once, then plain
full-batch gradient descent minimizes

    mean BCE(sigmoid(A^T s), y)                       (classification)
  + mean over classes of |A_c^T E - mean_visual_c|^2  (alignment)
  + lambda_l1 * sum |A|                               (sparsity)

over the new classes' columns. The alignment term asks each class's
attribute combination to reconstruct its visual mean from the frozen
base; it is what ties the selection to attribute relevance (the BCE term
alone converges to a minimal discriminative basis at this scale, which
neither recovers a class's full attribute set nor shares attributes
across similar classes). The L1 term prunes everything else, so top-k
binarization lands on the supported entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DegenerateVectorError, ShapeError
from .numerics import Rng, sigmoid
from .tasks import TaskDataset

_P_CLAMP = 1e-12


@dataclass
class AssignmentMatrix:
    """Attribute-to-class scores; real-valued while training, strictly
    {0,1} after binarization. Column order follows the class registry."""

    values: np.ndarray
    stage: str  # "real" | "binary"
    column_class_ids: tuple[int, ...]

    def __post_init__(self):
        self.column_class_ids = tuple(int(c) for c in self.column_class_ids)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.column_class_ids):
            raise ShapeError(
                f"assignment values {self.values.shape} do not match "
                f"{len(self.column_class_ids)} class columns"
            )
        if self.stage not in ("real", "binary"):
            raise DataError(f"unknown assignment stage {self.stage!r}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("assignment matrix has non-finite entries")
        if self.stage == "binary" and not np.all(np.isin(self.values, (0.0, 1.0))):
            raise DataError("binary assignment matrix has entries outside {0, 1}")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    lambda_l1: float = 0.01
    learning_rate: float = 0.2
    epochs: int = 1200
    seed: int = 0

    def __post_init__(self):
        if self.lambda_l1 < 0.0:
            raise ConfigError("lambda_l1 must be >= 0")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")


def attribute_similarity(embeddings: np.ndarray, visual: np.ndarray) -> np.ndarray:
    """Cosine of each embedding row against one visual vector."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    visual = np.asarray(visual, dtype=np.float64)
    if embeddings.ndim != 2 or visual.ndim != 1 or embeddings.shape[1] != visual.shape[0]:
        raise ShapeError(
            f"cannot score rows of {embeddings.shape} against vector of {visual.shape}"
        )
    row_norms = np.linalg.norm(embeddings, axis=1)
    v_norm = float(np.linalg.norm(visual))
    if v_norm == 0.0 or np.any(row_norms == 0.0):
        raise DegenerateVectorError("similarity needs nonzero-norm inputs")
    return (embeddings @ visual) / (row_norms * v_norm)


def similarity_matrix(visual_rows: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    """(B, N) cosines between each visual row and each embedding row."""
    visual_rows = np.asarray(visual_rows, dtype=np.float64)
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if visual_rows.shape[1] != embeddings.shape[1]:
        raise ShapeError(
            f"visual rows {visual_rows.shape} and embeddings {embeddings.shape} disagree on D"
        )
    v_norms = np.linalg.norm(visual_rows, axis=1)
    e_norms = np.linalg.norm(embeddings, axis=1)
    if np.any(v_norms == 0.0) or np.any(e_norms == 0.0):
        raise DegenerateVectorError("similarity needs nonzero-norm inputs")
    return (visual_rows @ embeddings.T) / np.outer(v_norms, e_norms)


def class_probabilities(assignment: AssignmentMatrix, similarities: np.ndarray) -> np.ndarray:
    """sigmoid(A^T s): per-class probabilities for one similarity vector."""
    similarities = np.asarray(similarities, dtype=np.float64)
    if assignment.n_rows != similarities.shape[0]:
        raise ShapeError(
            f"assignment has {assignment.n_rows} rows, similarity vector has "
            f"{similarities.shape[0]}"
        )
    return sigmoid(assignment.values.T @ similarities)


def upd_loss_and_grad(
    a: np.ndarray, batch_s: np.ndarray, targets: np.ndarray, lambda_l1: float
) -> tuple[float, np.ndarray]:
    """Mean BCE over samples and classes plus L1 penalty, with the analytic
    gradient wrt the assignment matrix.

    sign(0) counts as 0, so entries sitting exactly at zero feel no
    sparsity pull. Probabilities are clamped only inside the logs.
    """
    a = np.asarray(a, dtype=np.float64)
    batch_s = np.atleast_2d(np.asarray(batch_s, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    n_samples, n_attrs = batch_s.shape
    if n_samples == 0:
        raise DataError("empty training batch")
    if a.shape[0] != n_attrs or targets.shape != (n_samples, a.shape[1]):
        raise ShapeError(
            f"incompatible shapes: A {a.shape}, S {batch_s.shape}, targets {targets.shape}"
        )
    if not np.all(np.isin(targets, (0.0, 1.0))):
        raise DataError("targets must be 0/1")

    n_classes = a.shape[1]
    probs = sigmoid(batch_s @ a)
    clamped = np.clip(probs, _P_CLAMP, 1.0 - _P_CLAMP)
    bce = -(targets * np.log(clamped) + (1.0 - targets) * np.log(1.0 - clamped))
    loss = float(bce.mean()) + lambda_l1 * float(np.abs(a).sum())
    grad = batch_s.T @ (probs - targets) / (n_samples * n_classes) + lambda_l1 * np.sign(a)
    return loss, grad


def fit_loss_and_grad(
    a: np.ndarray,
    batch_s: np.ndarray,
    targets: np.ndarray,
    base_embeddings: np.ndarray,
    class_means: np.ndarray,
    lambda_l1: float,
) -> tuple[float, np.ndarray]:
    """Full fit objective: classification BCE + per-class alignment of the
    attribute combination with the class's visual mean + L1 sparsity."""
    a = np.asarray(a, dtype=np.float64)
    base_embeddings = np.asarray(base_embeddings, dtype=np.float64)
    class_means = np.asarray(class_means, dtype=np.float64)
    n_classes = a.shape[1]
    if class_means.shape != (n_classes, base_embeddings.shape[1]):
        raise ShapeError(
            f"class means {class_means.shape} do not match {n_classes} classes of "
            f"dimension {base_embeddings.shape[1]}"
        )
    bce_loss, bce_grad = upd_loss_and_grad(a, batch_s, targets, 0.0)
    residual = a.T @ base_embeddings - class_means
    loss = (
        bce_loss
        + float((residual**2).sum(axis=1).mean())
        + lambda_l1 * float(np.abs(a).sum())
    )
    grad = bce_grad + (2.0 / n_classes) * (base_embeddings @ residual.T) + lambda_l1 * np.sign(a)
    return loss, grad


def fit_assignment(
    base_embeddings: np.ndarray,
    dataset: TaskDataset,
    cfg: TrainConfig,
    background_negatives: bool = False,
) -> tuple[AssignmentMatrix, list[float]]:
    """Fit the new classes' assignment columns over the full base.

    Initialization is uniform(0,1) per entry from the seeded generator,
    filled row-major. Similarities and per-class visual means are
    precomputed once (the base is frozen during this fit). Returns the
    real-valued matrix and the loss trajectory: one entry per epoch plus
    the final loss.
    """
    if dataset.train_visual.shape[0] == 0:
        raise DataError("dataset has no training samples")
    n_attrs = base_embeddings.shape[0]
    class_ids = dataset.class_ids
    n_classes = len(class_ids)
    col_of = {cid: j for j, cid in enumerate(class_ids)}

    batch_s = similarity_matrix(dataset.train_visual, base_embeddings)
    targets = np.zeros((batch_s.shape[0], n_classes), dtype=np.float64)
    for row, label in enumerate(dataset.train_labels):
        targets[row, col_of[int(label)]] = 1.0
    class_means = np.stack(
        [dataset.train_visual[dataset.train_labels == cid].mean(axis=0) for cid in class_ids]
    )

    if background_negatives and dataset.background_eval.shape[0] > 0:
        bg_s = similarity_matrix(dataset.background_eval, base_embeddings)
        batch_s = np.vstack([batch_s, bg_s])
        targets = np.vstack([targets, np.zeros((bg_s.shape[0], n_classes))])

    rng = Rng(cfg.seed)
    a = rng.uniforms(n_attrs * n_classes).reshape(n_attrs, n_classes)

    trajectory: list[float] = []
    for _ in range(cfg.epochs):
        loss, grad = fit_loss_and_grad(
            a, batch_s, targets, base_embeddings, class_means, cfg.lambda_l1
        )
        trajectory.append(loss)
        a = a - cfg.learning_rate * grad
    if cfg.epochs > 0:
        final_loss, _ = fit_loss_and_grad(
            a, batch_s, targets, base_embeddings, class_means, cfg.lambda_l1
        )
        trajectory.append(final_loss)

    return AssignmentMatrix(values=a, stage="real", column_class_ids=class_ids), trajectory
