import json
import struct

import numpy as np
import pytest

from attrshare import DataError, FormatError, ManifestError, VersionError
from attrshare.io import read_ceb1, read_manifest, write_ceb1, write_manifest


@pytest.fixture
def matrix():
    return np.array([[1.5, -2.25, 0.125, 3.0], [0.0, 7.5, -0.5, 1.0], [9.0, 0.25, -4.0, 2.5]])


class TestCeb1:
    def test_round_trip_exact_at_float32(self, tmp_path, matrix):
        path = tmp_path / "m.ceb1"
        write_ceb1(path, matrix)
        loaded = read_ceb1(path)
        np.testing.assert_array_equal(
            loaded.astype(np.float32), matrix.astype(np.float32)
        )

    def test_byte_layout_against_reference_parser(self, tmp_path, matrix):
        # Parse the file with plain struct calls, independent of read_ceb1.
        path = tmp_path / "m.ceb1"
        write_ceb1(path, matrix)
        raw = path.read_bytes()
        assert raw[:4] == b"CEB1"
        version, dim = struct.unpack_from("<II", raw, 4)
        (rows,) = struct.unpack_from("<Q", raw, 12)
        assert (version, dim, rows) == (1, 4, 3)
        floats = struct.unpack_from(f"<{rows * dim}f", raw, 20)
        np.testing.assert_array_equal(
            np.array(floats, dtype=np.float32).reshape(rows, dim),
            matrix.astype(np.float32),
        )

    def test_bad_magic(self, tmp_path, matrix):
        path = tmp_path / "m.ceb1"
        write_ceb1(path, matrix)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            read_ceb1(path)

    def test_unsupported_version(self, tmp_path, matrix):
        path = tmp_path / "m.ceb1"
        write_ceb1(path, matrix)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 4, 2)
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionError):
            read_ceb1(path)

    def test_truncated_payload(self, tmp_path, matrix):
        path = tmp_path / "m.ceb1"
        write_ceb1(path, matrix)
        raw = path.read_bytes()
        path.write_bytes(raw[:-3])
        with pytest.raises(FormatError):
            read_ceb1(path)

    def test_non_finite_payload(self, tmp_path):
        path = tmp_path / "m.ceb1"
        write_ceb1(path, np.array([[np.nan, 1.0]]))
        with pytest.raises(DataError):
            read_ceb1(path)

    def test_header_too_short(self, tmp_path):
        path = tmp_path / "m.ceb1"
        path.write_bytes(b"CEB1\x01")
        with pytest.raises(FormatError):
            read_ceb1(path)


class TestManifest:
    def test_attributes_round_trip(self, tmp_path):
        path = tmp_path / "m.json"
        write_manifest(path, {"kind": "attributes", "texts": ["a", "b"]})
        loaded = read_manifest(path, expect_kind="attributes")
        assert loaded["texts"] == ["a", "b"]

    def test_visual_requires_class_ids_and_task(self, tmp_path):
        path = tmp_path / "m.json"
        with pytest.raises(ManifestError):
            write_manifest(path, {"kind": "visual", "class_ids": [1, 2]})
        write_manifest(path, {"kind": "visual", "class_ids": [1, 2], "task_index": 1})
        assert read_manifest(path)["task_index"] == 1

    def test_kind_mismatch(self, tmp_path):
        path = tmp_path / "m.json"
        write_manifest(path, {"kind": "attributes", "texts": []})
        with pytest.raises(ManifestError):
            read_manifest(path, expect_kind="visual")

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"kind": "mystery"}))
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_boolean_class_ids_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        with pytest.raises(ManifestError):
            write_manifest(
                path, {"kind": "visual", "class_ids": [True, 2], "task_index": 1}
            )
