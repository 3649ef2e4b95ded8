import itertools

import numpy as np
import pytest

from opscan import metrics
from opscan.errors import LengthMismatch, SingleClass
from opscan.metrics import (ConfusionMatrix, confusion, roc_auc, roc_points,
                            scores, trapezoid_area)

FIXTURE_CM = ConfusionMatrix(tp=1602, fp=340, fn=180, tn=117878)


def exhaustive_auc(score_values, truth):
    """Pair-enumeration oracle: wins + half ties over all pos/neg pairs."""
    pos = [s for s, t in zip(score_values, truth) if t == 1]
    neg = [s for s, t in zip(score_values, truth) if t == 0]
    wins = 0.0
    for p, q in itertools.product(pos, neg):
        if p > q:
            wins += 1.0
        elif p == q:
            wins += 0.5
    return wins / (len(pos) * len(neg))


# --- confusion ---

def test_confusion_all_correct_positives():
    cm = confusion([1] * 7, [1] * 7)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (7, 0, 0, 0)


def test_confusion_counts_random_vs_bruteforce(rng):
    pred = rng.integers(0, 2, size=300)
    truth = rng.integers(0, 2, size=300)
    cm = confusion(pred, truth)
    tp = sum(1 for p, t in zip(pred, truth) if p == 1 and t == 1)
    fp = sum(1 for p, t in zip(pred, truth) if p == 1 and t == 0)
    fn = sum(1 for p, t in zip(pred, truth) if p == 0 and t == 1)
    tn = sum(1 for p, t in zip(pred, truth) if p == 0 and t == 0)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (tp, fp, fn, tn)
    assert cm.total == 300


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [1])


def test_confusion_reproduces_fixture_from_vectors():
    pred = [1] * (1602 + 340) + [0] * (180 + 117878)
    truth = [1] * 1602 + [0] * 340 + [1] * 180 + [0] * 117878
    cm = confusion(pred, truth)
    assert cm == FIXTURE_CM


# --- scores ---

def test_scores_fixture_matches_published_table():
    rep = scores(FIXTURE_CM)
    assert 100 * rep.accuracy == pytest.approx(99.57, abs=0.01)
    assert 100 * rep.precision == pytest.approx(82.49, abs=0.01)
    assert 100 * rep.recall == pytest.approx(89.90, abs=0.01)
    assert 100 * rep.f1 == pytest.approx(86.04, abs=0.01)


def test_scores_perfect_classifier():
    rep = scores(ConfusionMatrix(tp=5, fp=0, fn=0, tn=5))
    assert (rep.accuracy, rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0, 1.0)


def test_scores_all_ones_matrix():
    rep = scores(ConfusionMatrix(1, 1, 1, 1))
    assert (rep.accuracy, rep.precision, rep.recall, rep.f1) == (0.5, 0.5, 0.5, 0.5)


def test_scores_undefined_are_none():
    rep = scores(ConfusionMatrix(tp=0, fp=0, fn=3, tn=7))
    assert rep.precision is None  # no positive predictions
    assert rep.recall == 0.0
    assert rep.f1 is None


def test_scores_f1_is_harmonic_mean(rng):
    for _ in range(50):
        cm = ConfusionMatrix(*(int(v) for v in rng.integers(1, 100, size=4)))
        rep = scores(cm)
        hm = 2 / (1 / rep.precision + 1 / rep.recall)
        assert rep.f1 == pytest.approx(hm, rel=1e-12)


def test_scores_invariant_under_permutation(rng):
    pred = rng.integers(0, 2, size=80)
    truth = rng.integers(0, 2, size=80)
    base = scores(confusion(pred, truth))
    perm = rng.permutation(80)
    shuffled = scores(confusion(pred[perm], truth[perm]))
    assert base == shuffled


# --- roc_auc ---

def test_auc_perfectly_separated():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0


def test_auc_constant_scores_is_half():
    assert roc_auc([0.4] * 6, [0, 1, 0, 1, 0, 1]) == 0.5


def test_auc_single_class_raises():
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])


def test_auc_matches_exhaustive_pairs(rng):
    for _ in range(200):
        n = int(rng.integers(2, 13))
        truth = rng.integers(0, 2, size=n)
        if truth.min() == truth.max():
            truth[0] = 1 - truth[0]
        # quantized scores force plenty of ties
        s = np.round(rng.uniform(0, 1, size=n), 1)
        assert roc_auc(s, truth) == pytest.approx(
            exhaustive_auc(s.tolist(), truth.tolist()), abs=1e-12)


def test_auc_invariant_under_monotone_transform(rng):
    s = rng.uniform(0, 1, size=60)
    truth = rng.integers(0, 2, size=60)
    truth[0], truth[1] = 0, 1
    base = roc_auc(s, truth)
    assert roc_auc(np.exp(3 * s) + 7, truth) == pytest.approx(base, abs=1e-12)


# --- roc_points ---

def test_roc_points_perfect():
    pts = roc_points([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert pts[0] == (0.0, 0.0)
    assert pts[-1] == (1.0, 1.0)
    assert (0.0, 1.0) in pts


def test_roc_points_constant_scores_diagonal():
    pts = roc_points([0.5] * 8, [0, 1] * 4)
    assert pts == [(0.0, 0.0), (1.0, 1.0)]


def test_roc_points_monotone(rng):
    s = rng.uniform(0, 1, size=50)
    truth = rng.integers(0, 2, size=50)
    truth[:2] = [0, 1]
    pts = roc_points(s, truth)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    assert xs == sorted(xs) and ys == sorted(ys)
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)


def test_trapezoid_equals_rank_auc(rng):
    for _ in range(50):
        n = int(rng.integers(4, 60))
        s = np.round(rng.uniform(0, 1, size=n), 2)
        truth = rng.integers(0, 2, size=n)
        if truth.min() == truth.max():
            truth[0] = 1 - truth[0]
        area = trapezoid_area(roc_points(s, truth))
        assert area == pytest.approx(roc_auc(s, truth), abs=1e-12)


# --- report I/O ---

def test_full_report_and_json(tmp_path, rng):
    truth = rng.integers(0, 2, size=40)
    truth[:2] = [0, 1]
    probs = np.clip(truth * 0.6 + rng.uniform(0, 0.4, size=40), 0, 1)
    pred = (probs >= 0.5).astype(int)
    cm, rep, pts = metrics.full_report(pred, truth, probs)
    path = tmp_path / "report.json"
    metrics.write_report_json(path, cm, rep, pts, extra={"split": "test"})
    import json

    data = json.loads(path.read_text())
    assert data["confusion"]["tp"] == cm.tp
    assert data["split"] == "test"
    assert len(data["roc_points"]) == len(pts)
