"""Reading and writing the CEB1 embedding file format and its JSON manifest.

CEB1 is a tiny self-describing binary layout, chosen so any language can
produce or consume it without a serialization library:

    bytes 0-3    magic "CEB1"
    bytes 4-7    little-endian u32 format version (currently 1)
    bytes 8-11   little-endian u32 embedding dimension D
    bytes 12-19  little-endian u64 row count R
    then         R * D little-endian IEEE-754 float32, row-major

Every CEB1 file travels with a JSON manifest sidecar. Manifests carry a
"kind" of either "attributes" (requires "texts", one per row) or "visual"
(requires per-row "class_ids" and a "task_index"); "labels" is optional
display metadata for either kind.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, ManifestError, VersionError

CEB1_MAGIC = b"CEB1"
CEB1_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")

MANIFEST_KINDS = ("attributes", "visual")


def write_ceb1(path: str | Path, matrix: np.ndarray) -> None:
    """Write a 2-D array as CEB1, truncating values to float32."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise DataError(f"CEB1 stores 2-D matrices, got shape {matrix.shape}")
    rows, dim = matrix.shape
    payload = np.ascontiguousarray(matrix, dtype="<f4").tobytes()
    header = _HEADER.pack(CEB1_MAGIC, CEB1_VERSION, dim, rows)
    atomic_write_bytes(Path(path), header + payload)


def read_ceb1(path: str | Path) -> np.ndarray:
    """Read a CEB1 file into a float64 matrix (exact float32 values)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: too short for a CEB1 header")
    magic, version, dim, rows = _HEADER.unpack_from(raw)
    if magic != CEB1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CEB1_VERSION:
        raise VersionError(f"{path}: unsupported CEB1 version {version}")
    if dim == 0:
        raise FormatError(f"{path}: zero embedding dimension")
    expected = _HEADER.size + rows * dim * 4
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, expected {expected - _HEADER.size}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, dim)
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: non-finite embedding values")
    return data.astype(np.float64)


def write_manifest(path: str | Path, manifest: dict) -> None:
    _validate_manifest(manifest, str(path))
    atomic_write_bytes(
        Path(path), (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
    )


def read_manifest(path: str | Path, expect_kind: str | None = None) -> dict:
    try:
        manifest = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    _validate_manifest(manifest, str(path))
    if expect_kind is not None and manifest["kind"] != expect_kind:
        raise ManifestError(
            f"{path}: manifest kind is {manifest['kind']!r}, expected {expect_kind!r}"
        )
    return manifest


def _validate_manifest(manifest: dict, where: str) -> None:
    kind = manifest.get("kind")
    if kind not in MANIFEST_KINDS:
        raise ManifestError(f"{where}: unknown manifest kind {kind!r}")
    if kind == "attributes":
        texts = manifest.get("texts")
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise ManifestError(f"{where}: attribute manifests need a 'texts' list of strings")
    else:
        class_ids = manifest.get("class_ids")
        if not isinstance(class_ids, list) or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in class_ids
        ):
            raise ManifestError(f"{where}: visual manifests need a 'class_ids' list of integers")
        if not isinstance(manifest.get("task_index"), int):
            raise ManifestError(f"{where}: visual manifests need an integer 'task_index'")
    labels = manifest.get("labels")
    if labels is not None and (
        not isinstance(labels, list) or not all(isinstance(x, str) for x in labels)
    ):
        raise ManifestError(f"{where}: 'labels' must be a list of strings when present")


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    half-written file."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
