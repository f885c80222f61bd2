import numpy as np
import pytest

from attrshare import (
    ClassRegistry,
    ConfigError,
    DataError,
    ScenarioConfig,
    ScenarioError,
    generate_scenario,
    load_task,
)
from attrshare.io import read_manifest, write_ceb1, write_manifest
from attrshare.numerics import unit
from attrshare.pipeline import write_scenario_files
from conftest import standard_scenario


def small_scenario(**overrides):
    settings = dict(
        dim=16,
        partitions=(3, 2),
        h=3,
        attribute_overlap=0.4,
        samples_per_class_train=20,
        samples_per_class_eval=10,
        noise_sigma=0.05,
        n_distractor_attributes=8,
        n_background_samples=5,
        seed=6,
    )
    settings.update(overrides)
    return ScenarioConfig(**settings)


class TestScenarioConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            small_scenario(partitions=())
        with pytest.raises(ConfigError):
            small_scenario(h=0)
        with pytest.raises(ConfigError):
            small_scenario(attribute_overlap=1.5)
        with pytest.raises(ConfigError):
            small_scenario(noise_sigma=-0.1)
        with pytest.raises(ConfigError):
            small_scenario(samples_per_class_eval=0)


class TestGenerateScenario:
    def test_partition_structure(self):
        _, _, datasets, registry = generate_scenario(small_scenario())
        assert [d.task_index for d in datasets] == [1, 2]
        assert [len(d.class_ids) for d in datasets] == [3, 2]
        assert set(datasets[0].class_ids).isdisjoint(datasets[1].class_ids)
        assert registry.class_ids() == (0, 1, 2, 3, 4)
        assert registry.ids_for_task(2) == (3, 4)

    def test_noise_free_rows_equal_prototypes(self):
        base, truth, datasets, _ = generate_scenario(small_scenario(noise_sigma=0.0))
        for ds in datasets:
            for cid in ds.class_ids:
                proto = unit(base.embeddings[sorted(truth.class_attributes[cid])].mean(axis=0))
                rows = ds.train_visual[ds.train_labels == cid]
                np.testing.assert_array_equal(rows, np.tile(proto, (rows.shape[0], 1)))

    def test_separability_oracle_noise_free(self):
        base, truth, datasets, _ = generate_scenario(small_scenario(noise_sigma=0.0))
        protos = {
            cid: unit(base.embeddings[sorted(rows)].mean(axis=0))
            for cid, rows in truth.class_attributes.items()
        }
        for ds in datasets:
            for row, label in zip(ds.eval_visual, ds.eval_labels):
                own = float(row @ protos[int(label)])
                for other, proto in protos.items():
                    if other != int(label):
                        assert float(row @ proto) < own

    def test_deterministic(self):
        a = generate_scenario(small_scenario())
        b = generate_scenario(small_scenario())
        np.testing.assert_array_equal(a[0].embeddings, b[0].embeddings)
        for da, db in zip(a[2], b[2]):
            np.testing.assert_array_equal(da.train_visual, db.train_visual)
            np.testing.assert_array_equal(da.eval_visual, db.eval_visual)
            np.testing.assert_array_equal(da.background_eval, db.background_eval)

    def test_background_margin(self):
        base, truth, datasets, _ = generate_scenario(small_scenario())
        protos = np.stack(
            [
                unit(base.embeddings[sorted(rows)].mean(axis=0))
                for _, rows in sorted(truth.class_attributes.items())
            ]
        )
        for ds in datasets:
            assert ds.background_eval.shape[0] == 5
            assert float((protos @ ds.background_eval.T).max()) < 0.5

    def test_overlap_limits_fresh_attributes(self):
        cfg = standard_scenario(attribute_overlap=0.8)
        _, truth, datasets, _ = generate_scenario(cfg)
        phase1 = set().union(*(truth.class_attributes[c] for c in datasets[0].class_ids))
        phase2 = set().union(*(truth.class_attributes[c] for c in datasets[1].class_ids))
        assert len(phase2 - phase1) < 20

    def test_ground_truth_shape(self):
        cfg = small_scenario()
        _, truth, _, _ = generate_scenario(cfg)
        assert all(len(s) == cfg.h for s in truth.class_attributes.values())
        for s in truth.class_attributes.values():
            assert s.isdisjoint(truth.distractor_indices)

    def test_exhausted_pool_rejected(self):
        # Directly drain both candidate pools; the picker must refuse
        # rather than emit duplicate attributes.
        from attrshare.numerics import Rng
        from attrshare.tasks import _pick_class_attributes

        cfg = small_scenario(h=3, attribute_overlap=0.0)
        with pytest.raises(ConfigError):
            _pick_class_attributes(Rng(0), cfg, used=[7], unused=[8])


class TestClassRegistry:
    def test_duplicate_rejected(self):
        reg = ClassRegistry()
        reg.add(1, 1, "one")
        with pytest.raises(ScenarioError):
            reg.add(1, 2, "again")

    def test_up_to_task(self):
        reg = ClassRegistry()
        reg.add(0, 1, "a")
        reg.add(1, 2, "b")
        sliced = reg.up_to_task(1)
        assert sliced.class_ids() == (0,)
        assert reg.class_ids() == (0, 1)


class TestLoadTask:
    def test_round_trip_via_exported_files(self, tmp_path):
        cfg = small_scenario()
        write_scenario_files(cfg, tmp_path)
        registry = ClassRegistry()
        ds1 = load_task(
            tmp_path / "task_01_train.ceb1", tmp_path / "task_01_train.manifest.json", 1, registry
        )
        assert ds1.class_ids == (0, 1, 2)
        assert registry.task_of(0) == 1
        np.testing.assert_allclose(np.linalg.norm(ds1.train_visual, axis=1), 1.0, atol=1e-12)
        ds2 = load_task(
            tmp_path / "task_02_train.ceb1", tmp_path / "task_02_train.manifest.json", 2, registry
        )
        assert ds2.class_ids == (3, 4)

    def test_duplicate_class_rejected(self, tmp_path):
        cfg = small_scenario()
        write_scenario_files(cfg, tmp_path)
        registry = ClassRegistry()
        load_task(
            tmp_path / "task_01_train.ceb1", tmp_path / "task_01_train.manifest.json", 1, registry
        )
        with pytest.raises(ScenarioError):
            load_task(
                tmp_path / "task_01_eval.ceb1",
                tmp_path / "task_01_eval.manifest.json",
                1,
                registry,
            )

    def test_zero_norm_row_rejected(self, tmp_path):
        write_ceb1(tmp_path / "t.ceb1", np.array([[0.0, 0.0], [1.0, 0.0]]))
        write_manifest(
            tmp_path / "t.json", {"kind": "visual", "class_ids": [5, 5], "task_index": 1}
        )
        with pytest.raises(DataError):
            load_task(tmp_path / "t.ceb1", tmp_path / "t.json", 1, ClassRegistry())

    def test_task_index_mismatch(self, tmp_path):
        write_ceb1(tmp_path / "t.ceb1", np.array([[1.0, 0.0]]))
        write_manifest(
            tmp_path / "t.json", {"kind": "visual", "class_ids": [5], "task_index": 2}
        )
        with pytest.raises(ScenarioError):
            load_task(tmp_path / "t.ceb1", tmp_path / "t.json", 1, ClassRegistry())

    def test_labels_used_for_names(self, tmp_path):
        write_ceb1(tmp_path / "t.ceb1", np.array([[1.0, 0.0], [0.0, 2.0]]))
        write_manifest(
            tmp_path / "t.json",
            {
                "kind": "visual",
                "class_ids": [5, 6],
                "task_index": 1,
                "labels": ["cat", "dog"],
            },
        )
        registry = ClassRegistry()
        load_task(tmp_path / "t.ceb1", tmp_path / "t.json", 1, registry)
        assert registry.name_of(5) == "cat"
        assert registry.name_of(6) == "dog"
