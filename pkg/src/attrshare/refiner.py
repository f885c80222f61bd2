"""Final refinement of the attribute embeddings with the assignment
matrix frozen.

Predictions are re-derived the same way inference will see them (cosine
similarities through the binary matrix, then sigmoid), and the embeddings
are nudged by BCE against per-sample binary targets. The gradient flows
through the cosine:

    d cos(u, v)/du = v / (|u||v|)  -  cos(u, v) * u / |u|^2

plus the same cross-task consistency pin as during adaptation.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DataError, DegenerateVectorError, ShapeError
from .filtering import TaskState
from .numerics import sigmoid
from .tasks import TaskDataset

_P_CLAMP = 1e-12


def refine_loss_and_grad(
    e_hat: np.ndarray,
    a_new_bin: np.ndarray,
    visual_rows: np.ndarray,
    targets: np.ndarray,
    e_prev: np.ndarray,
    lambda2: float,
) -> tuple[float, np.ndarray]:
    """Mean BCE of sigmoid(A^T cos(E, x)) against binary targets, plus the
    consistency MSE on the first Q rows; gradient wrt the embeddings."""
    e_hat = np.asarray(e_hat, dtype=np.float64)
    a_new_bin = np.asarray(a_new_bin, dtype=np.float64)
    visual_rows = np.atleast_2d(np.asarray(visual_rows, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    e_prev = np.asarray(e_prev, dtype=np.float64).reshape(-1, e_hat.shape[1])

    n_rows, dim = e_hat.shape
    n_samples = visual_rows.shape[0]
    n_classes = a_new_bin.shape[1]
    q = e_prev.shape[0]
    if a_new_bin.shape[0] != n_rows or visual_rows.shape[1] != dim:
        raise ShapeError(
            f"incompatible shapes: E {e_hat.shape}, A {a_new_bin.shape}, X {visual_rows.shape}"
        )
    if targets.shape != (n_samples, n_classes):
        raise ShapeError(f"targets {targets.shape} do not match {n_samples}x{n_classes}")
    if not np.all(np.isin(targets, (0.0, 1.0))):
        raise DataError("targets must be 0/1")
    if q > n_rows:
        raise ShapeError(f"{q} pinned rows exceed the {n_rows} available")

    u_norms = np.linalg.norm(e_hat, axis=1)
    v_norms = np.linalg.norm(visual_rows, axis=1)
    if np.any(u_norms == 0.0) or np.any(v_norms == 0.0):
        raise DegenerateVectorError("refinement needs nonzero-norm embeddings and samples")

    # similarities[b, i] = cos(e_hat[i], x_b)
    similarities = (visual_rows @ e_hat.T) / np.outer(v_norms, u_norms)
    probs = sigmoid(similarities @ a_new_bin)
    clamped = np.clip(probs, _P_CLAMP, 1.0 - _P_CLAMP)
    bce = -(targets * np.log(clamped) + (1.0 - targets) * np.log(1.0 - clamped))
    loss = float(bce.mean())

    # Chain rule through the cosine, vectorized over rows and samples.
    d_sim = (probs - targets) @ a_new_bin.T / (n_samples * n_classes)
    unit_x = visual_rows / v_norms[:, None]
    grad = d_sim.T @ unit_x / u_norms[:, None]
    grad -= e_hat * ((d_sim * similarities).sum(axis=0) / u_norms**2)[:, None]

    if q > 0:
        drift = e_hat[:q] - e_prev
        loss += lambda2 * float((drift**2).mean())
        grad[:q] += (2.0 * lambda2 / (q * dim)) * drift
    return loss, grad


def refine_attributes(
    state: TaskState,
    dataset: TaskDataset,
    e_prev: np.ndarray,
    lambda2: float,
    learning_rate: float,
    epochs: int,
) -> tuple[TaskState, list[float]]:
    """Descend on the embeddings with per-sample one-hot targets over the
    task's new classes; the assignment matrix stays bit-identical."""
    if learning_rate <= 0.0:
        raise ConfigError("learning_rate must be > 0")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")
    new_cols = state.new_class_columns()
    a_new = state.A.values[:, new_cols]
    class_ids = [state.A.column_class_ids[j] for j in new_cols]
    col_of = {cid: j for j, cid in enumerate(class_ids)}

    targets = np.zeros((dataset.train_visual.shape[0], len(class_ids)), dtype=np.float64)
    for row, label in enumerate(dataset.train_labels):
        targets[row, col_of[int(label)]] = 1.0

    e_hat = state.E_hat.copy()
    trajectory: list[float] = []
    for _ in range(epochs):
        loss, grad = refine_loss_and_grad(
            e_hat, a_new, dataset.train_visual, targets, e_prev, lambda2
        )
        trajectory.append(loss)
        e_hat -= learning_rate * grad
    if epochs > 0:
        final_loss, _ = refine_loss_and_grad(
            e_hat, a_new, dataset.train_visual, targets, e_prev, lambda2
        )
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
