"""The shared attribute base: texts, categories, and their embeddings.

A base is built once and frozen; every later stage only ever reads it.
Attribute texts follow a fixed class-agnostic template ("object which has
<category> is <value>.") so no class name can leak into them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigError, DataError, ManifestError
from .numerics import Rng, require_finite, unit_rows

CATEGORIES = (
    "Color",
    "Shape",
    "Texture",
    "Size",
    "Context",
    "Features",
    "Appearance",
    "Behavior",
    "Environment",
    "Material",
)

_CATEGORY_BY_LOWER = {c.lower(): c for c in CATEGORIES}
_TEMPLATE_RE = re.compile(r"^object which has (\S+) is (.+)\.$")

# Redraw budget for near-collinear synthetic rows; random unit vectors in
# dimension >= 8 essentially never collide, so one attempt is the norm.
_MAX_SYNTH_ATTEMPTS = 64
_COLLINEARITY_LIMIT = 0.9


def apply_prompt_template(category: str, value: str) -> str:
    """Render one attribute sentence, e.g. ("Color", "red") ->
    "object which has color is red."."""
    if category not in CATEGORIES:
        raise ConfigError(f"unknown attribute category {category!r}")
    if not value:
        raise ConfigError("attribute value must be non-empty")
    return f"object which has {category.lower()} is {value}."


def parse_attribute_text(text: str) -> tuple[str, str]:
    """Invert the prompt template; returns (category, value)."""
    match = _TEMPLATE_RE.match(text)
    if match is None:
        raise ManifestError(f"attribute text does not match the template grammar: {text!r}")
    category = _CATEGORY_BY_LOWER.get(match.group(1))
    if category is None:
        raise ManifestError(f"unknown attribute category in text: {text!r}")
    return category, match.group(2)


@dataclass(frozen=True)
class AttributeRecord:
    base_index: int
    category: str
    text: str
    embedding: np.ndarray  # (D,)


class AttributeBase:
    """Immutable collection of attribute records plus their embedding matrix."""

    def __init__(self, records: list[AttributeRecord]):
        if not records:
            raise DataError("attribute base needs at least one record")
        dim = records[0].embedding.shape[0]
        for i, rec in enumerate(records):
            if rec.base_index != i:
                raise DataError(f"record {i} carries base_index {rec.base_index}")
            if rec.category not in CATEGORIES:
                raise DataError(f"record {i} has unknown category {rec.category!r}")
            if rec.embedding.shape != (dim,):
                raise DataError(f"record {i} embedding has shape {rec.embedding.shape}")
        self._records = tuple(records)
        matrix = np.stack([r.embedding for r in records]).astype(np.float64)
        require_finite(matrix, "attribute embeddings")
        matrix.setflags(write=False)
        self._embeddings = matrix

    @property
    def records(self) -> tuple[AttributeRecord, ...]:
        return self._records

    @property
    def embeddings(self) -> np.ndarray:
        """(N, D) read-only embedding matrix; row i is records[i]."""
        return self._embeddings

    @property
    def n_attributes(self) -> int:
        return len(self._records)

    @property
    def dim(self) -> int:
        return self._embeddings.shape[1]

    def texts(self) -> list[str]:
        return [r.text for r in self._records]

    def __len__(self) -> int:
        return len(self._records)


@dataclass(frozen=True)
class SyntheticGroundTruth:
    """Oracle bookkeeping for synthetic scenarios: which base attributes
    truly define each class, and which rows belong to no class."""

    class_attributes: dict[int, frozenset[int]]
    distractor_indices: frozenset[int]


def synth_base(
    rng: Rng, n_true: int, n_distractor: int, dim: int
) -> tuple[AttributeBase, list[int], list[int]]:
    """Build a synthetic base of unit-norm random directions.

    True rows come first, distractor rows after. If any two rows land
    nearly collinear (|cos| >= 0.9) the whole matrix is redrawn from the
    continuing stream, keeping the result a pure function of the seed.
    """
    if n_true < 1:
        raise ConfigError("n_true must be >= 1")
    if n_distractor < 0:
        raise ConfigError("n_distractor must be >= 0")
    if dim < 2:
        raise ConfigError("embedding dimension must be >= 2")

    n = n_true + n_distractor
    for _ in range(_MAX_SYNTH_ATTEMPTS):
        matrix = unit_rows(rng.gaussians(n * dim).reshape(n, dim))
        gram = np.abs(matrix @ matrix.T)
        np.fill_diagonal(gram, 0.0)
        if gram.max() < _COLLINEARITY_LIMIT:
            break
    else:
        raise ConfigError(
            f"could not draw {n} sufficiently distinct directions in dimension {dim}"
        )

    records = []
    for i in range(n):
        category = CATEGORIES[i % len(CATEGORIES)]
        text = apply_prompt_template(category, f"variant {i}")
        records.append(
            AttributeRecord(base_index=i, category=category, text=text, embedding=matrix[i])
        )
    return AttributeBase(records), list(range(n_true)), list(range(n_true, n))


def save_base(base: AttributeBase, embedding_path: str | Path, manifest_path: str | Path) -> None:
    """Persist a base as CEB1 (float32) plus an attributes manifest."""
    io.write_ceb1(embedding_path, base.embeddings)
    io.write_manifest(manifest_path, {"kind": "attributes", "texts": base.texts()})


def load_base(embedding_path: str | Path, manifest_path: str | Path) -> AttributeBase:
    """Load a base from CEB1 + manifest; categories are recovered from the
    template grammar of each text."""
    matrix = io.read_ceb1(embedding_path)
    manifest = io.read_manifest(manifest_path, expect_kind="attributes")
    texts = manifest["texts"]
    if len(texts) != matrix.shape[0]:
        raise ManifestError(
            f"manifest lists {len(texts)} texts but embedding file has {matrix.shape[0]} rows"
        )
    records = []
    for i, text in enumerate(texts):
        category, _ = parse_attribute_text(text)
        records.append(
            AttributeRecord(base_index=i, category=category, text=text, embedding=matrix[i])
        )
    return AttributeBase(records)


def assert_class_agnostic(base: AttributeBase, class_names) -> None:
    """Verify no registered class name appears inside any attribute text."""
    for name in class_names:
        for rec in base.records:
            if name and name in rec.text:
                raise DataError(
                    f"attribute text {rec.text!r} mentions class name {name!r}"
                )
