import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bangladep.corpus import Label
from bangladep.evaluate import (
    REFERENCE_ROWS,
    ConfusionMatrix2x2,
    EvaluationError,
    EvaluationReport,
    RocCurve,
    auc,
    classification_metrics,
    compare_runs,
    confusion_matrix,
    evaluate_model,
    per_class_metrics,
    report_from_scores,
    roc_curve,
)
from bangladep.network import NetworkConfig, build_network, predict_proba

from oracles import count_quadruple, pairwise_auc, roc_recount, weighted_metrics

D, N = Label.DEPRESSIVE, Label.NON_DEPRESSIVE


def test_confusion_examples():
    cm = confusion_matrix([D, N, D], [D, N, D])
    assert cm.fp == cm.fn == 0 and cm.total == 3
    assert confusion_matrix([D, N], [N, D]) == ConfusionMatrix2x2(tp=0, fp=1, fn=1, tn=0)
    with pytest.raises(EvaluationError, match="length"):
        confusion_matrix([1, 0], [1])
    with pytest.raises(EvaluationError):
        confusion_matrix([], [])


def test_confusion_matches_counter(rng):
    for _ in range(20):
        t, p = rng.integers(0, 2, 50), rng.integers(0, 2, 50)
        assert tuple(confusion_matrix(t, p).to_dict().values()) == count_quadruple(t, p)


def test_metrics_hand_case():
    cm = ConfusionMatrix2x2(tp=40, fp=5, fn=10, tn=45)
    got = classification_metrics(cm)
    # depressive: P 40/45, R 40/50; non-depressive: P 45/55, R 45/50; support 50 each
    p_d, r_d, p_n, r_n = 40 / 45, 0.8, 45 / 55, 0.9
    f_d, f_n = 2 * p_d * r_d / (p_d + r_d), 2 * p_n * r_n / (p_n + r_n)
    assert got["accuracy"] == 0.85
    assert got["precision"] == pytest.approx((p_d + p_n) / 2, abs=1e-15)
    assert got["recall"] == pytest.approx(0.85, abs=1e-15)
    assert got["f1"] == pytest.approx((f_d + f_n) / 2, abs=1e-15)
    assert per_class_metrics(cm)[D]["precision"] == Fraction(8, 9)
    assert classification_metrics(cm, "binary")["recall"] == 0.8
    assert classification_metrics(cm, "macro")["recall"] == pytest.approx(0.85)


def test_metrics_perfect_and_degenerate():
    assert set(classification_metrics(ConfusionMatrix2x2(3, 0, 0, 7)).values()) == {1.0}
    all_negative = classification_metrics(ConfusionMatrix2x2(0, 0, 4, 6))
    assert all_negative["accuracy"] == 0.6
    with pytest.raises(EvaluationError):
        classification_metrics(ConfusionMatrix2x2(0, 0, 0, 0))
    with pytest.raises(EvaluationError):
        classification_metrics(ConfusionMatrix2x2(1, 0, 0, 1), "micro")


quads = st.tuples(*[st.integers(0, 500)] * 4).filter(lambda q: sum(q) > 0)


@settings(max_examples=300, deadline=None)
@given(quads)
def test_weighted_recall_is_accuracy(q):
    m = classification_metrics(ConfusionMatrix2x2(*q))
    assert m["recall"] == m["accuracy"]
    for key, value in weighted_metrics(*q).items():
        assert m[key] == pytest.approx(value, abs=1e-12)
    assert all(0.0 <= v <= 1.0 for v in m.values())


def test_roc_examples():
    curve = roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1])
    assert (0.0, 1.0) in curve.points and auc(curve) == 1.0
    flat = roc_curve([1, 0, 1, 0], [0.5] * 4)
    assert flat.points == [(0.0, 0.0), (1.0, 1.0)] and auc(flat) == 0.5
    with pytest.raises(EvaluationError, match="both classes"):
        roc_curve([1, 1], [0.2, 0.3])
    with pytest.raises(EvaluationError, match=r"\[0, 1\]"):
        roc_curve([1, 0], [0.2, 1.3])


def test_roc_matches_recount(rng):
    for _ in range(20):
        y = rng.integers(0, 2, 20)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        s = rng.integers(0, 8, 20) / 7
        assert roc_curve(y, s).points == pytest.approx(roc_recount(list(y), list(s)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 10)), min_size=2, max_size=80))
def test_auc_equals_pairwise(pairs):
    y = [p[0] for p in pairs]
    if len(set(y)) < 2:
        return
    s = [p[1] / 10 for p in pairs]
    curve = roc_curve(y, s)
    assert abs(auc(curve) - pairwise_auc(y, s)) < 1e-9
    assert curve.points[0] == (0.0, 0.0) and curve.points[-1] == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)


def test_auc_monotone_transform_invariance(rng):
    y = rng.integers(0, 2, 100)
    y[:2] = [0, 1]
    s = rng.random(100)
    base = auc(roc_curve(y, s))
    for f in (np.sqrt, lambda v: v ** 3, lambda v: (np.exp(v) - 1) / (math.e - 1)):
        assert auc(roc_curve(y, f(s))) == pytest.approx(base, abs=1e-12)


def test_metrics_permutation_invariant(rng):
    y = rng.integers(0, 2, 60)
    y[:2] = [0, 1]
    s = rng.random(60)
    a = report_from_scores(y, s, "x")
    perm = rng.permutation(60)
    b = report_from_scores(y[perm], s[perm], "x")
    assert a.metrics() == b.metrics()


def test_report_threshold_tie_goes_to_depressive():
    r = report_from_scores([1, 0], [0.5, 0.2], "x")
    assert r.confusion == ConfusionMatrix2x2(1, 0, 0, 1)


def test_single_class_report_has_no_auc():
    r = report_from_scores([0, 0, 0], [0.2, 0.7, 0.1], "x")
    assert r.auc is None and r.roc is None and r.accuracy == pytest.approx(2 / 3)


def test_evaluate_model_consistent_with_scores(rng):
    net = build_network(NetworkConfig(input_len=12, seed=2))
    X = rng.normal(size=(40, 12))
    y = rng.integers(0, 2, 40)
    y[:2] = [0, 1]
    r = evaluate_model(net, X, y, "hashed_test")
    p = predict_proba(net, X)
    assert r.confusion == confusion_matrix(y, (p[:, 1] >= p[:, 0]).astype(int))
    assert r.auc == pytest.approx(pairwise_auc(list(y), list(p[:, 1])), abs=1e-9)
    with pytest.raises(EvaluationError, match="width"):
        evaluate_model(net, X[:, :5], y, "x")
    with pytest.raises(EvaluationError, match="empty"):
        evaluate_model(net, np.zeros((0, 12)), [], "x")


def test_report_persistence(tmp_path, rng):
    y = rng.integers(0, 2, 30)
    y[:2] = [0, 1]
    r = report_from_scores(y, rng.random(30), "tfidf")
    r.save(tmp_path)
    text = (tmp_path / "roc.csv").read_text()
    assert text.splitlines()[0] == "threshold,fpr,tpr"
    roc = RocCurve.from_csv(text)
    back = EvaluationReport.from_json(json.loads((tmp_path / "report.json").read_text()), roc)
    assert back.metrics() == r.metrics() and back.confusion == r.confusion
    np.testing.assert_array_equal(roc.tpr, r.roc.tpr)


def _reference_reports():
    out = []
    for name, row in REFERENCE_ROWS.items():
        out.append(EvaluationReport(name, *(row[m] / 100 for m in ("accuracy", "precision", "recall", "f1")),
                                    row["auc"] / 100, ConfusionMatrix2x2(1, 0, 0, 1), None, 1175))
    return out


def test_compare_reference_rows():
    table = compare_runs(_reference_reports())
    assert table.best["f1"] == ["contextual"] and table.best["auc"] == ["tfidf"]
    assert table.best["accuracy"] == ["contextual"]
    assert len(table.rows) == 3
    text = table.render(reference=True)
    assert "84*" in text and "(reference)" in text


def test_compare_single_and_permutation(rng):
    reports = _reference_reports()
    one = compare_runs(reports[:1])
    assert len(one.rows) == 1 and all(v == [reports[0].backend] for v in one.best.values())
    shuffled = [reports[i] for i in rng.permutation(3)]
    assert compare_runs(shuffled).rows == compare_runs(reports).rows
    csv_text = compare_runs(reports).to_csv()
    assert csv_text.splitlines()[0] == "backend,accuracy,precision,recall,f1,auc,n_test"
    with pytest.raises(EvaluationError):
        compare_runs([])
