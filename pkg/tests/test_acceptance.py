"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The end-to-end criteria
drive the real CLI; the numeric criteria check implementation output against
independent oracles (pairwise AUC, finite differences, hand arithmetic) at
the tolerances fixed below.
"""

import numpy as np
import pytest

from forgerykit import calibration as cal
from forgerykit import codec
from forgerykit import metrics as mx
from forgerykit import nn
from forgerykit import report
from forgerykit.cli import main
from forgerykit.scores import ScoredSample

from conftest import (
    draw_smooth_case,
    finite_difference_grad,
    mann_whitney_auc,
    max_relative_error,
    random_image,
    random_score_set,
)
from test_report import PUBLISHED_ROWS, _fixture_report

# Frozen after the first oracle run: the splice generator plus this training
# protocol reach these margins reliably at desk scale.
E2E_IMAGES_PER_CLASS = 100
E2E_IMAGE_SIZE = 64
E2E_TRAIN_FLAGS = [
    "--input-size", "64",
    "--lr", "1e-3",
    "--max-epochs", "50",
    "--patience", "50",
    "--batch-size", "2",
]
E2E_AUC_FLOOR = 0.8
E2E_J_FLOOR = 0.4
HYBRID_RGB_SLACK = 0.02
FDIFF_AUC_FLOOR = 0.6
E2E_SEEDS = (1, 2, 3)

_E2E_CACHE: dict[tuple[str, int], dict] = {}


def _cli(*argv):
    code = main([str(a) for a in argv])
    assert code == 0, f"command failed: {argv}"


def e2e_run(tmp_root, mode: str, seed: int) -> dict:
    """synth -> prepare -> train -> score -> calibrate -> evaluate, cached per (mode, seed)."""
    key = (mode, seed)
    if key in _E2E_CACHE:
        return _E2E_CACHE[key]
    base = tmp_root / f"{mode}-{seed}"
    data = base / "data"
    paths = {
        "data": data,
        "manifest": base / "manifest.jsonl",
        "model": base / "model.fgk",
        "scores": base / "scores.csv",
        "cal": base / "cal.json",
        "report": base / "report.json",
    }
    _cli("synth", "--authentic", E2E_IMAGES_PER_CLASS, "--tampered", E2E_IMAGES_PER_CLASS,
         "--size", E2E_IMAGE_SIZE, "--seed", seed, "--out", data)
    _cli("prepare", "--root", data, "--train-ratio", "0.7", "--val-ratio", "0.1",
         "--seed", seed, "--out", paths["manifest"])
    _cli("train", "--manifest", paths["manifest"], "--root", data,
         "--out", paths["model"], "--input-mode", mode, "--seed", seed,
         "--jobs", 2, *E2E_TRAIN_FLAGS)
    _cli("score", "--model", paths["model"], "--manifest", paths["manifest"],
         "--root", data, "--split", "test", "--input-mode", mode, "--jobs", 2,
         "--out", paths["scores"])
    _cli("calibrate", "--scores", paths["scores"], "--model-id", mode, "--out", paths["cal"])
    _cli("evaluate", "--scores", paths["scores"], "--calibration", paths["cal"],
         "--out", paths["report"])
    result = {
        "paths": paths,
        "report": report.load_report(paths["report"]),
        "calibration": cal.load_calibration(paths["cal"]),
    }
    _E2E_CACHE[key] = result
    return result


@pytest.fixture(scope="session")
def e2e_root(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance-e2e")


def test_criterion_1_fdiff_correctness():
    rng = np.random.default_rng(11)
    for _ in range(100):
        h, w = int(rng.integers(4, 33)), int(rng.integers(4, 33))
        a = random_image(rng, h, w)
        b = random_image(rng, h, w)
        assert not codec.compute_fdiff(a, a).values.any()
        assert np.array_equal(
            codec.compute_fdiff(a, b).values, -codec.compute_fdiff(b, a).values
        )
    gray = codec.ImageTensor(np.full((32, 32, 3), 128, np.uint8))
    diff = codec.compute_fdiff(gray, codec.jpeg_roundtrip(gray, 90))
    assert not diff.values.any()
    print("\n[criterion 1] PASS: fdiff zero/antisymmetry on 100 images; gray-128 q90 residual is zero")


def test_criterion_2_gradient_check():
    worst = 0.0
    for index in range(20):
        model, x, y, dropout_seed = draw_smooth_case(1000 + 17 * index)
        analytic = nn.backward(model, x, y, dropout_seed)
        numeric = finite_difference_grad(model, x, y, dropout_seed, h=1e-4)
        worst = max(worst, max_relative_error(analytic, numeric, floor=1e-8))
    assert worst < 1e-3, f"worst relative error {worst}"
    print(f"\n[criterion 2] PASS: 20 tiny models, max FD relative error {worst:.2e} < 1e-3")


def test_criterion_3_auc_oracle_equivalence():
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(1000):
        scores = random_score_set(rng, 200)
        area = mx.auc(mx.roc_curve(scores))
        worst = max(worst, abs(area - mann_whitney_auc(scores)))
    assert worst <= 1e-12, f"worst deviation {worst}"
    print(f"\n[criterion 3] PASS: 1000 score sets, trapezoid vs Mann-Whitney deviation {worst:.2e} <= 1e-12")


def test_criterion_4_youden_optimality_and_tie_breaks():
    rng = np.random.default_rng(44)
    for _ in range(1000):
        scores = random_score_set(rng, 120)
        best = cal.youden_optimal_threshold(scores, "m")
        values = np.array([s.score for s in scores])
        labels = np.array([s.label for s in scores])
        positives = labels.sum()
        negatives = len(labels) - positives
        thresholds = np.concatenate(([0.5], rng.random(200)))
        predicted = values[None, :] >= thresholds[:, None]
        tpr = (predicted & (labels == 1)).sum(axis=1) / positives
        fpr = (predicted & (labels == 0)).sum(axis=1) / negatives
        assert np.all(best.youden_j >= tpr - fpr)
    # Tie on J resolves toward higher TPR (fewer missed forgeries).
    tie = [ScoredSample("a", 1, 0.9), ScoredSample("b", 1, 0.3),
           ScoredSample("c", 0, 0.7), ScoredSample("d", 0, 0.1)]
    best = cal.youden_optimal_threshold(tie, "m")
    assert best.threshold == 0.3 and best.tpr_at_opt == 1.0
    # Degenerate scorers settle at J = 0, never negative.
    flat = [ScoredSample("a", 1, 0.4), ScoredSample("b", 0, 0.4)]
    assert cal.youden_optimal_threshold(flat, "m").youden_j == 0.0
    inverted = [ScoredSample("a", 1, 0.1), ScoredSample("b", 0, 0.9)]
    worst_case = cal.youden_optimal_threshold(inverted, "m")
    assert worst_case.youden_j == 0.0 and worst_case.threshold == 0.1
    print("\n[criterion 4] PASS: calibrated J dominates 0.5 and 200 random thresholds on 1000 sets; tie-breaks verified")


def test_criterion_5_mcc_and_weighted_recall_identity():
    cm = mx.ConfusionMatrix(tp=40, fp=15, tn=35, fn=10)
    basics = mx.basic_metrics(cm, mx.Averaging.BINARY)
    assert basics.accuracy == pytest.approx(0.75, abs=1e-12)
    assert basics.precision == pytest.approx(0.727273, abs=1e-6)
    assert basics.recall == pytest.approx(0.80, abs=1e-12)
    assert basics.f1 == pytest.approx(0.761905, abs=1e-6)
    assert mx.mcc(cm) == pytest.approx(0.502519, abs=1e-6)
    rng = np.random.default_rng(55)
    checked = 0
    while checked < 10_000:
        counts = rng.integers(0, 1000, 4)
        if counts.sum() == 0:
            continue
        matrix = mx.ConfusionMatrix(*map(int, counts))
        weighted = mx.basic_metrics(matrix, mx.Averaging.WEIGHTED)
        assert weighted.recall == weighted.accuracy
        checked += 1
    print("\n[criterion 5] PASS: metric fixtures match hand arithmetic; weighted recall == accuracy on 10000 matrices")


def test_criterion_6_published_fixture_comparison():
    table = report.compare_models([_fixture_report(*row) for row in PUBLISHED_ROWS])
    assert table.best["accuracy"] == ("DenseNet121",)
    assert table.best["mcc"] == ("ResNet50",)
    assert table.best["auc"] == ("DenseNet121",)
    by_id = dict(table.rows)
    assert by_id["DenseNet121"].accuracy == 0.784
    assert by_id["DenseNet121"].auc == 0.841
    assert by_id["ResNet50"].mcc == 0.598
    thresholds = sorted(row.threshold for _, row in table.rows)
    assert f"{thresholds[0]:.3f}" == "0.338"
    assert f"{thresholds[-1]:.3f}" == "0.461"
    print("\n[criterion 6] PASS: published-value fixtures reproduce the argmax pattern and threshold range [0.338, 0.461]")


def test_criterion_7_end_to_end_synthetic_run(e2e_root):
    result = e2e_run(e2e_root, "hybrid", E2E_SEEDS[0])
    rep = result["report"]
    calibration = result["calibration"]
    assert rep.metrics.auc > E2E_AUC_FLOOR, f"test AUC {rep.metrics.auc}"
    assert calibration.youden_j > E2E_J_FLOOR, f"calibrated J {calibration.youden_j}"
    assert rep.confusion.total == 40  # 20% test split of 100 + 100 images
    assert rep.metrics.threshold == calibration.threshold
    print(
        f"\n[criterion 7] PASS: synth+train+evaluate end to end, "
        f"AUC {rep.metrics.auc:.3f} > {E2E_AUC_FLOOR}, J {calibration.youden_j:.3f} > {E2E_J_FLOOR}"
    )


def test_criterion_8_end_to_end_determinism(e2e_root, tmp_path):
    first = e2e_run(e2e_root, "hybrid", E2E_SEEDS[0])["paths"]
    # Repeat the identical pipeline into a fresh directory.
    rerun = tmp_path / "rerun"
    data = rerun / "data"
    second = {
        "manifest": rerun / "manifest.jsonl",
        "model": rerun / "model.fgk",
        "scores": rerun / "scores.csv",
        "cal": rerun / "cal.json",
        "report": rerun / "report.json",
    }
    seed = E2E_SEEDS[0]
    _cli("synth", "--authentic", E2E_IMAGES_PER_CLASS, "--tampered", E2E_IMAGES_PER_CLASS,
         "--size", E2E_IMAGE_SIZE, "--seed", seed, "--out", data)
    _cli("prepare", "--root", data, "--train-ratio", "0.7", "--val-ratio", "0.1",
         "--seed", seed, "--out", second["manifest"])
    _cli("train", "--manifest", second["manifest"], "--root", data,
         "--out", second["model"], "--input-mode", "hybrid", "--seed", seed,
         "--jobs", 2, *E2E_TRAIN_FLAGS)
    _cli("score", "--model", second["model"], "--manifest", second["manifest"],
         "--root", data, "--split", "test", "--jobs", 2, "--out", second["scores"])
    _cli("calibrate", "--scores", second["scores"], "--model-id", "hybrid",
         "--out", second["cal"])
    _cli("evaluate", "--scores", second["scores"], "--calibration", second["cal"],
         "--out", second["report"])
    for key in ("manifest", "model", "scores", "cal", "report"):
        assert first[key].read_bytes() == second[key].read_bytes(), f"{key} differs between runs"
    print("\n[criterion 8] PASS: manifest, checkpoint, score CSV, calibration JSON, report JSON byte-identical on rerun")


def test_criterion_9_hybrid_vs_rgb_sanity(e2e_root):
    means = {}
    for mode in ("hybrid", "rgb", "fdiff"):
        aucs = [e2e_run(e2e_root, mode, seed)["report"].metrics.auc for seed in E2E_SEEDS]
        means[mode] = sum(aucs) / len(aucs)
    assert means["hybrid"] >= means["rgb"] - HYBRID_RGB_SLACK, means
    assert means["fdiff"] > FDIFF_AUC_FLOOR, means
    print(
        f"\n[criterion 9] PASS: mean AUC over seeds {E2E_SEEDS}: "
        f"hybrid {means['hybrid']:.3f} >= rgb {means['rgb']:.3f} - {HYBRID_RGB_SLACK}; "
        f"fdiff {means['fdiff']:.3f} > {FDIFF_AUC_FLOOR}"
    )
