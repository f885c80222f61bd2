"""Acceptance suite: one test per release criterion, each printing a
pass line with the measured numbers (run with `pytest -v -s` to see them).

The expensive pipeline runs are shared through session fixtures; every
tolerance is asserted exactly as stated, no slack.
"""

import itertools
import json
import time

import numpy as np
import pytest

from attrshare import (
    Rng,
    RunConfig,
    TaskDataset,
    TrainConfig,
    binarize_topk,
    classify,
    fit_assignment,
    generate_scenario,
    load_checkpoint,
    merge_assignment,
    run_pipeline,
    save_checkpoint,
    sharing_stats,
    strip_timing,
    synth_base,
    upd_loss_and_grad,
)
from attrshare.adapter import ClassMeans, adapt_loss_and_grad
from attrshare.filtering import TaskState
from attrshare.numerics import unit, unit_rows
from attrshare.refiner import refine_loss_and_grad
from attrshare.tasks import ClassRegistry
from conftest import standard_scenario
from test_filtering import topk_oracle
from test_learner import central_difference


def announce(number: int, name: str, detail: str) -> None:
    print(f"\nACCEPTANCE {number:02d} {name}: PASS ({detail})")


@pytest.fixture(scope="session")
def standard_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("std_run")
    config = RunConfig(scenario=standard_scenario())
    started = time.perf_counter()
    report = run_pipeline(config, out_dir=out)
    elapsed = time.perf_counter() - started
    return config, report, out, elapsed


@pytest.fixture(scope="session")
def multi_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("multi_run")
    config = RunConfig(scenario=standard_scenario(partitions=(8, 2, 2, 2, 2)))
    started = time.perf_counter()
    report = run_pipeline(config, out_dir=out)
    elapsed = time.perf_counter() - started
    return config, report, out, elapsed


@pytest.fixture(scope="session")
def noise_free_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("noise_free")
    config = RunConfig(scenario=standard_scenario(noise_sigma=0.0))
    report = run_pipeline(config, out_dir=out)
    return config, report, out


def test_criterion_01_no_forgetting_two_phase(standard_run):
    _, report, _, elapsed = standard_run
    metrics = report["tasks"][1]["metrics"]
    assert metrics["fpp_accuracy"] <= 0.01
    assert metrics["old_class_accuracy"] >= 0.95
    assert elapsed < 60.0
    announce(
        1,
        "two-phase no-forgetting",
        f"fpp {metrics['fpp_accuracy']:+.4f}, old acc {metrics['old_class_accuracy']:.4f}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_02_multi_phase(multi_run):
    _, report, _, elapsed = multi_run
    final = report["tasks"][-1]["metrics"]
    assert final["overall_accuracy"] >= 0.90
    fpps = [t["metrics"]["fpp_accuracy"] for t in report["tasks"][1:]]
    assert all(f <= 0.02 for f in fpps)
    assert elapsed < 180.0
    announce(
        2,
        "multi-phase trend",
        f"final acc {final['overall_accuracy']:.4f}, "
        f"fpp per phase {[f'{f:+.4f}' for f in fpps]}, {elapsed:.1f}s",
    )


def test_criterion_03_gradient_oracles():
    rng = Rng(301)
    checked = 0
    # assignment-update loss wrt A (entries kept away from the L1 kink)
    for _ in range(20):
        n = 2 + rng.next_u64() % 14
        c = 1 + rng.next_u64() % 4
        b = 1 + rng.next_u64() % 6
        signs = np.where(rng.uniforms(n * c) < 0.5, -1.0, 1.0)
        a = (rng.uniforms(n * c, 0.05, 1.0) * signs).reshape(n, c)
        s = rng.gaussians(b * n).reshape(b, n)
        y = (rng.uniforms(b * c) < 0.5).astype(np.float64).reshape(b, c)
        assert np.abs(a).min() > 1e-3
        _, analytic = upd_loss_and_grad(a, s, y, 0.01)
        numeric = central_difference(lambda m: upd_loss_and_grad(m, s, y, 0.01)[0], a)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
        assert rel.max() < 1e-4
        checked += 1
    # adaptation loss wrt the embeddings
    for _ in range(20):
        r = 2 + rng.next_u64() % 10
        c = 1 + rng.next_u64() % 4
        d = 2 + rng.next_u64() % 14
        q = rng.next_u64() % (r + 1)
        e = rng.gaussians(r * d).reshape(r, d)
        a = (rng.uniforms(r * c) < 0.5).astype(np.float64).reshape(r, c)
        a[0, :] = 1.0
        means = ClassMeans(means=rng.gaussians(c * d).reshape(c, d), counts=(2,) * c)
        e_prev = rng.gaussians(q * d).reshape(q, d)
        _, analytic = adapt_loss_and_grad(e, a, means, e_prev, 1.0)
        numeric = central_difference(
            lambda x: adapt_loss_and_grad(x, a, means, e_prev, 1.0)[0], e
        )
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
        assert rel.max() < 1e-4
        checked += 1
    # refinement loss wrt the embeddings, through the cosine
    for _ in range(20):
        r = 2 + rng.next_u64() % 6
        c = 1 + rng.next_u64() % 3
        d = 2 + rng.next_u64() % 10
        b = 1 + rng.next_u64() % 5
        q = rng.next_u64() % (r + 1)
        e = rng.gaussians(r * d).reshape(r, d)
        a = (rng.uniforms(r * c) < 0.5).astype(np.float64).reshape(r, c)
        x = unit_rows(rng.gaussians(b * d).reshape(b, d))
        u = (rng.uniforms(b * c) < 0.5).astype(np.float64).reshape(b, c)
        e_prev = rng.gaussians(q * d).reshape(q, d)
        _, analytic = refine_loss_and_grad(e, a, x, u, e_prev, 1.0)
        numeric = central_difference(
            lambda m: refine_loss_and_grad(m, a, x, u, e_prev, 1.0)[0], e
        )
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
        assert rel.max() < 1e-4
        checked += 1
    announce(3, "gradient oracles", f"{checked} random instances, rel err < 1e-4")


def test_criterion_04_old_knowledge_freeze(multi_run):
    _, report, out, _ = multi_run
    violations = 0
    n_tasks = len(report["tasks"])
    for t in range(2, n_tasks + 1):
        prev = load_checkpoint(out / "checkpoints" / f"task_{t - 1:02d}")
        curr = load_checkpoint(out / "checkpoints" / f"task_{t:02d}")
        n_prev = len(prev.index_map)
        n_prev_cols = prev.A.n_classes
        assert curr.index_map.indices[:n_prev] == prev.index_map.indices
        if not np.array_equal(curr.A.values[:n_prev, :n_prev_cols], prev.A.values):
            violations += 1
        if curr.A.values[n_prev:, :n_prev_cols].any():
            violations += 1
    assert violations == 0
    announce(4, "old-knowledge freeze", f"{n_tasks - 1} transitions, 0 violations")


def test_criterion_05_binarization_contract():
    rng = Rng(505)
    mismatches = 0
    for trial in range(1000):
        n = 2 + rng.next_u64() % 12
        c = 1 + rng.next_u64() % 5
        h_a = 1 + rng.next_u64() % n
        if trial % 2 == 0:
            a = rng.gaussians(n * c).reshape(n, c)
        else:
            # low-cardinality values force tie handling
            a = rng.uniforms(n * c, 0, 3).astype(np.int64).astype(np.float64).reshape(n, c)
        out = binarize_topk(a, h_a)
        if out.sum() != c * h_a or not np.all(np.isin(out, (0.0, 1.0))):
            mismatches += 1
        elif not np.array_equal(out, topk_oracle(a, h_a)):
            mismatches += 1
    assert mismatches == 0
    announce(5, "binarization contract", "1000 matrices, 0 mismatches vs oracle")


def test_criterion_06_sparsity_monotonicity():
    cfg = standard_scenario()
    base, _, datasets, _ = generate_scenario(cfg)
    sums = []
    for lam in (0.001, 0.01, 0.1):
        a, _ = fit_assignment(
            base.embeddings, datasets[0], TrainConfig(lambda_l1=lam, seed=cfg.seed + 1)
        )
        sums.append(float(np.abs(a.values).sum()))
    assert sums[0] > sums[1] > sums[2]
    announce(
        6, "sparsity monotonicity", "sum|A| = " + " > ".join(f"{s:.2f}" for s in sums)
    )


def test_criterion_07_attribute_sharing():
    # high-overlap generator: few genuinely new attributes in phase 2
    report = run_pipeline(RunConfig(scenario=standard_scenario(attribute_overlap=0.8)))
    newly = report["tasks"][1]["sharing"]["newly_added"]
    assert newly < 20

    # reusing the exact attribute sets of earlier classes adds nothing
    rng = Rng(701)
    base, _, _ = synth_base(rng, 30, 16, 32)
    sets = {0: {0, 1, 2, 3, 4}, 1: {5, 6, 7, 8, 9}, 2: {2, 5, 10, 11, 12}, 3: {1, 7, 13, 14, 15}}
    sets.update({4: sets[0], 5: sets[1], 6: sets[2], 7: sets[3]})
    protos = {c: unit(base.embeddings[sorted(s)].mean(axis=0)) for c, s in sets.items()}
    registry = ClassRegistry()

    def build(task_index, ids):
        rows, labels = [], []
        for cid in ids:
            registry.add(cid, task_index, f"class_{cid:02d}")
            for _ in range(100):
                rows.append(unit(protos[cid] + 0.05 * rng.gaussians(32)))
                labels.append(cid)
        arr = np.stack(rows)
        lab = np.array(labels)
        return TaskDataset(
            task_index=task_index, class_ids=tuple(ids), train_visual=arr,
            train_labels=lab, eval_visual=arr.copy(), eval_labels=lab.copy(),
            background_eval=np.zeros((0, 32)),
        )

    ds1, ds2 = build(1, (0, 1, 2, 3)), build(2, (4, 5, 6, 7))
    prev = None
    stats = None
    for ds in (ds1, ds2):
        a_real, _ = fit_assignment(base.embeddings, ds, TrainConfig(seed=ds.task_index))
        state = merge_assignment(
            prev, binarize_topk(a_real.values, 5), base, ds.class_ids, ds.task_index,
            registry.up_to_task(ds.task_index),
        )
        stats = sharing_stats(prev, state)
        prev = state
    assert stats["newly_added"] == 0
    announce(
        7, "attribute sharing", f"overlap 0.8 adds {newly} (<20); identical sets add 0"
    )


def test_criterion_08_hyperparameter_robustness():
    scenario = standard_scenario()
    accuracies = []
    for lam1, lam2 in itertools.product((0.5, 1.0, 2.0, 4.0), repeat=2):
        from attrshare import AdaptConfig, RefineConfig

        report = run_pipeline(
            RunConfig(
                scenario=scenario,
                adapt=AdaptConfig(lambda1=lam1),
                refine=RefineConfig(lambda2=lam2),
            )
        )
        accuracies.append(report["tasks"][-1]["metrics"]["overall_accuracy"])
    spread = max(accuracies) - min(accuracies)
    assert spread < 0.01
    announce(
        8, "hyperparameter robustness",
        f"16-point grid, accuracy in [{min(accuracies):.4f}, {max(accuracies):.4f}], "
        f"spread {spread:.4f}",
    )


def test_criterion_09_ground_truth_recovery(noise_free_run):
    config, report, out = noise_free_run
    assert report["tasks"][-1]["metrics"]["overall_accuracy"] == 1.0

    _, truth, datasets, _ = generate_scenario(config.scenario)
    final = load_checkpoint(out / "checkpoints" / f"task_{len(datasets):02d}")
    column_of = {cid: j for j, cid in enumerate(final.A.column_class_ids)}
    recovered = 0
    total = 0
    for cid, true_set in truth.class_attributes.items():
        rows = np.flatnonzero(final.A.values[:, column_of[cid]])
        selected = {final.index_map.indices[r] for r in rows}
        total += 1
        recovered += selected == true_set
    assert recovered / total >= 0.90
    announce(
        9, "ground-truth recovery",
        f"{recovered}/{total} classes exact, eval accuracy 1.0",
    )


def test_criterion_10_determinism_and_round_trip(standard_run, tmp_path):
    config, report, out, _ = standard_run
    rerun = run_pipeline(config)
    first = json.dumps(strip_timing(report), sort_keys=True).encode()
    second = json.dumps(strip_timing(rerun), sort_keys=True).encode()
    assert first == second

    state = load_checkpoint(out / "checkpoints" / "task_02")
    save_checkpoint(state, tmp_path / "rt")
    reloaded = load_checkpoint(tmp_path / "rt")
    rng = Rng(1001)
    for _ in range(100):
        probe = rng.gaussians(state.E_hat.shape[1])
        a = classify(state, probe)
        b = classify(reloaded, probe)
        assert a.class_id == b.class_id and a.score == b.score
        np.testing.assert_array_equal(a.probabilities, b.probabilities)
    announce(
        10, "determinism and round-trip",
        "byte-identical reports (timing stripped); 100 probes bit-identical",
    )
