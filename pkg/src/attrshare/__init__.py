"""attrshare: incremental attribute-to-class assignment over a frozen
shared attribute base.

New classes arrive in phases. Each phase rescores every attribute in the
base against its training embeddings, learns a sparse real-valued
assignment of attributes to the new classes, binarizes it by global
top-k, and splices it onto the frozen assignment of all earlier classes.
Selected attribute embeddings are then adapted toward the visual domain
and refined, with earlier rows pinned so old classes keep working.
"""

from .adapter import ClassMeans, adapt_attributes, adapt_loss_and_grad, class_visual_means
from .base import (
    CATEGORIES,
    AttributeBase,
    AttributeRecord,
    SyntheticGroundTruth,
    apply_prompt_template,
    load_base,
    parse_attribute_text,
    save_base,
    synth_base,
)
from .errors import (
    AttrShareError,
    ConfigError,
    DataError,
    DegenerateVectorError,
    FormatError,
    ManifestError,
    NumericError,
    ScenarioError,
    ShapeError,
    StateError,
    VersionError,
)
from .filtering import (
    AttributeIndexMap,
    TaskState,
    binarize_topk,
    binarize_topk_per_class,
    merge_assignment,
    sharing_stats,
)
from .inference import MetricsReport, Prediction, classify, evaluate
from .learner import (
    AssignmentMatrix,
    TrainConfig,
    attribute_similarity,
    class_probabilities,
    fit_assignment,
    similarity_matrix,
    upd_loss_and_grad,
)
from .numerics import Rng, cosine, mat_transpose_vec, sigmoid, unit, unit_rows
from .pipeline import (
    AdaptConfig,
    RefineConfig,
    RunConfig,
    evaluate_checkpoint,
    export_scores,
    load_checkpoint,
    load_run_config,
    run_pipeline,
    save_checkpoint,
    strip_timing,
    write_scenario_files,
)
from .refiner import refine_attributes, refine_loss_and_grad
from .tasks import ClassRegistry, ScenarioConfig, TaskDataset, generate_scenario, load_task

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "AssignmentMatrix",
    "AttrShareError",
    "AttributeBase",
    "AttributeIndexMap",
    "AttributeRecord",
    "CATEGORIES",
    "ClassMeans",
    "ClassRegistry",
    "ConfigError",
    "DataError",
    "DegenerateVectorError",
    "FormatError",
    "ManifestError",
    "MetricsReport",
    "NumericError",
    "Prediction",
    "RefineConfig",
    "Rng",
    "RunConfig",
    "ScenarioConfig",
    "ScenarioError",
    "ShapeError",
    "StateError",
    "SyntheticGroundTruth",
    "TaskDataset",
    "TaskState",
    "TrainConfig",
    "VersionError",
    "adapt_attributes",
    "adapt_loss_and_grad",
    "apply_prompt_template",
    "attribute_similarity",
    "binarize_topk",
    "binarize_topk_per_class",
    "class_probabilities",
    "class_visual_means",
    "classify",
    "cosine",
    "evaluate",
    "evaluate_checkpoint",
    "export_scores",
    "fit_assignment",
    "generate_scenario",
    "load_base",
    "load_checkpoint",
    "load_run_config",
    "load_task",
    "mat_transpose_vec",
    "merge_assignment",
    "parse_attribute_text",
    "refine_attributes",
    "refine_loss_and_grad",
    "run_pipeline",
    "save_base",
    "save_checkpoint",
    "sharing_stats",
    "sigmoid",
    "similarity_matrix",
    "strip_timing",
    "synth_base",
    "unit",
    "unit_rows",
    "upd_loss_and_grad",
    "write_scenario_files",
]
