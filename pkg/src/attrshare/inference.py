"""Classification through a task state, and the incremental-learning
metrics built on it.

A sample is scored by cosine against the adapted attribute embeddings,
mapped through the binary assignment matrix, and squashed per class; the
argmax wins (ties go to the lowest class id). A sample whose best
probability falls below tau is treated as background. The forgetting gap
(`fpp_accuracy`) is the first task's accuracy measured right after task 1
minus the same classes' accuracy measured now.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .filtering import TaskState
from .learner import attribute_similarity, similarity_matrix
from .numerics import sigmoid
from .tasks import TaskDataset


@dataclass(frozen=True)
class Prediction:
    class_id: int | None  # None marks background
    score: float
    probabilities: np.ndarray

    @property
    def is_background(self) -> bool:
        return self.class_id is None


@dataclass
class MetricsReport:
    task_index: int
    per_task_accuracy: dict[int, float]
    overall_accuracy: float
    old_class_accuracy: float | None
    fpp_accuracy: float | None
    false_positives: int
    n_eval_samples: int
    n_background_samples: int
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task_index": self.task_index,
            "per_task_accuracy": {str(k): v for k, v in self.per_task_accuracy.items()},
            "overall_accuracy": self.overall_accuracy,
            "old_class_accuracy": self.old_class_accuracy,
            "fpp_accuracy": self.fpp_accuracy,
            "false_positives": self.false_positives,
            "n_eval_samples": self.n_eval_samples,
            "n_background_samples": self.n_background_samples,
            "confusion": self.confusion,
        }


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")


def _argmax_lowest_id(probs: np.ndarray, class_ids: tuple[int, ...]) -> np.ndarray:
    """Row-wise argmax over columns, breaking exact ties toward the lowest
    class id. Returns predicted class ids."""
    order = np.argsort(np.array(class_ids), kind="stable")
    ranked = probs[:, order]
    winners = np.argmax(ranked, axis=1)  # first max wins, ids ascend
    sorted_ids = np.array(class_ids)[order]
    return sorted_ids[winners]


def classify(state: TaskState, visual: np.ndarray, tau: float = 0.5) -> Prediction:
    """Classify one embedding against every class learned so far."""
    _check_tau(tau)
    similarities = attribute_similarity(state.E_hat, np.asarray(visual, dtype=np.float64))
    probs = sigmoid(state.A.values.T @ similarities)
    score = float(probs.max())
    pred_id = int(
        _argmax_lowest_id(probs[None, :], state.A.column_class_ids)[0]
    )
    if score < tau:
        return Prediction(class_id=None, score=score, probabilities=probs)
    return Prediction(class_id=pred_id, score=score, probabilities=probs)


def evaluate(
    state: TaskState,
    eval_datasets: list[TaskDataset],
    baseline_old_accuracy: float | None = None,
    tau: float = 0.5,
) -> MetricsReport:
    """Score every dataset's eval split through the state.

    Accuracy uses the raw argmax (tau plays no part); tau only decides
    which background samples count as false positives. The forgetting gap
    needs `baseline_old_accuracy` (first-task accuracy recorded after task
    1) and at least one old task among the datasets.
    """
    _check_tau(tau)
    if not eval_datasets or all(d.eval_visual.shape[0] == 0 for d in eval_datasets):
        raise DataError("nothing to evaluate")

    class_ids = state.A.column_class_ids
    per_task: dict[int, float] = {}
    confusion: dict[str, dict[str, int]] = {}
    total_correct = 0
    total_samples = 0
    old_correct = 0
    old_samples = 0
    false_positives = 0
    n_background = 0
    first_task = min(d.task_index for d in eval_datasets)

    for dataset in sorted(eval_datasets, key=lambda d: d.task_index):
        if dataset.eval_visual.shape[0] == 0:
            raise DataError(f"task {dataset.task_index} has an empty eval split")
        sims = similarity_matrix(dataset.eval_visual, state.E_hat)
        probs = sigmoid(sims @ state.A.values)
        preds = _argmax_lowest_id(probs, class_ids)
        correct = preds == dataset.eval_labels
        per_task[dataset.task_index] = float(correct.mean())
        total_correct += int(correct.sum())
        total_samples += correct.size
        if dataset.task_index < state.task_index:
            old_correct += int(correct.sum())
            old_samples += correct.size
        for truth, pred in zip(dataset.eval_labels, preds):
            row = confusion.setdefault(str(int(truth)), {})
            row[str(int(pred))] = row.get(str(int(pred)), 0) + 1

        if dataset.background_eval.shape[0] > 0:
            bg_sims = similarity_matrix(dataset.background_eval, state.E_hat)
            bg_probs = sigmoid(bg_sims @ state.A.values)
            false_positives += int((bg_probs.max(axis=1) >= tau).sum())
            n_background += dataset.background_eval.shape[0]

    old_accuracy = old_correct / old_samples if old_samples else None
    fpp = None
    if baseline_old_accuracy is not None and old_samples:
        fpp = float(baseline_old_accuracy - per_task[first_task])

    return MetricsReport(
        task_index=state.task_index,
        per_task_accuracy=per_task,
        overall_accuracy=total_correct / total_samples,
        old_class_accuracy=old_accuracy,
        fpp_accuracy=fpp,
        false_positives=false_positives,
        n_eval_samples=total_samples,
        n_background_samples=n_background,
        confusion=confusion,
    )
