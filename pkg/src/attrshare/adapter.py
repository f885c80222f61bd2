"""Adapting active attribute embeddings toward the visual domain.

Text-derived and visual embeddings live in different regions of the
space, so after selection the active embeddings are pulled until the
binary assignment maps them onto per-class visual means:

    loss = MSE(means, A_new^T E)  +  lambda1 * MSE(E[:Q], E_prev)

The second term pins the rows carried over from the previous task (Q of
them), which is what protects old classes while new rows move freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .filtering import TaskState
from .tasks import TaskDataset


@dataclass(frozen=True)
class ClassMeans:
    """Per-class arithmetic means of (up to) the first M train samples,
    rows in the task's class order."""

    means: np.ndarray
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.means.ndim != 2 or self.means.shape[0] != len(self.counts):
            raise ShapeError("one mean row per class required")


def class_visual_means(dataset: TaskDataset, m: int) -> ClassMeans:
    """Average the first min(m, available) train samples of each new class,
    in dataset order."""
    if m < 1:
        raise ConfigError("sample cap m must be >= 1")
    rows, counts = [], []
    for cid in dataset.class_ids:
        mask = dataset.train_labels == cid
        if not mask.any():
            raise DataError(f"class {cid} has no train samples")
        take = dataset.train_visual[mask][:m]
        rows.append(take.mean(axis=0))
        counts.append(take.shape[0])
    return ClassMeans(means=np.stack(rows), counts=tuple(counts))


def adapt_loss_and_grad(
    e_hat: np.ndarray,
    a_new_bin: np.ndarray,
    means: ClassMeans,
    e_prev: np.ndarray,
    lambda1: float,
    combine: str = "sum",
) -> tuple[float, np.ndarray]:
    """Quadratic alignment loss and its gradient wrt the embeddings.

    combine="sum" matches the raw combination A^T E against the means;
    combine="mean" divides each class's combination by its number of
    selected attributes first, which keeps unit-scale embeddings
    comparable to unit-scale means (summed unit rows otherwise overshoot
    a unit-norm target and the rows get crushed to compensate). Both MSE
    terms are means over all their entries; the consistency term vanishes
    entirely when e_prev has zero rows (first task).
    """
    if combine not in ("sum", "mean"):
        raise ConfigError(f"unknown adapt combination {combine!r}")
    e_hat = np.asarray(e_hat, dtype=np.float64)
    a_new_bin = np.asarray(a_new_bin, dtype=np.float64)
    target = means.means
    e_prev = np.asarray(e_prev, dtype=np.float64).reshape(-1, e_hat.shape[1])
    n_rows, dim = e_hat.shape
    n_classes = target.shape[0]
    q = e_prev.shape[0]
    if a_new_bin.shape != (n_rows, n_classes) or target.shape[1] != dim:
        raise ShapeError(
            f"incompatible shapes: E {e_hat.shape}, A {a_new_bin.shape}, means {target.shape}"
        )
    if q > n_rows:
        raise ShapeError(f"{q} pinned rows exceed the {n_rows} available")

    weights = a_new_bin
    if combine == "mean":
        counts = a_new_bin.sum(axis=0)
        if np.any(counts == 0.0):
            raise DataError("a class selected no attributes; cannot form its mean")
        weights = a_new_bin / counts[None, :]

    residual = weights.T @ e_hat - target
    loss = float((residual**2).mean())
    grad = (2.0 / (n_classes * dim)) * (weights @ residual)
    if q > 0:
        drift = e_hat[:q] - e_prev
        loss += lambda1 * float((drift**2).mean())
        grad[:q] += (2.0 * lambda1 / (q * dim)) * drift
    return loss, grad


def adapt_attributes(
    state: TaskState,
    means: ClassMeans,
    e_prev: np.ndarray,
    lambda1: float,
    learning_rate: float,
    epochs: int,
    combine: str = "sum",
) -> tuple[TaskState, list[float]]:
    """Gradient descent on the embeddings only; the assignment matrix is
    untouched. Returns the updated state and the loss trajectory."""
    if learning_rate <= 0.0:
        raise ConfigError("learning_rate must be > 0")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")
    a_new = state.A.values[:, state.new_class_columns()]
    e_hat = state.E_hat.copy()

    trajectory: list[float] = []
    for _ in range(epochs):
        loss, grad = adapt_loss_and_grad(e_hat, a_new, means, e_prev, lambda1, combine)
        trajectory.append(loss)
        e_hat -= learning_rate * grad
    if epochs > 0:
        final_loss, _ = adapt_loss_and_grad(e_hat, a_new, means, e_prev, lambda1, combine)
        trajectory.append(final_loss)

    new_state = TaskState(
        task_index=state.task_index,
        index_map=state.index_map,
        A=state.A,
        E_hat=e_hat,
        registry=state.registry,
        hyperparams=state.hyperparams,
    )
    return new_state, trajectory
