import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthsign.data import one_hot
from depthsign.exceptions import FormatError, ParameterError, UndefinedMetricError
from depthsign.linalg import make_rng
from depthsign.metrics import (
    METRICS,
    BinaryCounts,
    EvalReport,
    acc,
    ber,
    binarize,
    confusion,
    f1,
    macro_acc,
    macro_ber,
    macro_f1,
    nrmse,
    report,
)

from oracles import counts_by_sample, macro_metrics_by_sample, nrmse_loop

# published per-subject values and their printed AVG column
REPORTED = {
    "NRMSE": ([0.002092, 0.000007, 0.021933, 0.000003, 0.060161], 0.01684),
    "ACC": ([1.000000, 1.000000, 0.998667, 1.000000, 0.998667], 0.99947),
    "F1S": ([1.000000, 1.000000, 0.996687, 1.000000, 0.996687], 0.99867),
    "BER": ([0.000000, 0.000000, 0.001058, 0.000000, 0.001058], 0.00042),
}


def test_confusion_hand_count():
    np.testing.assert_array_equal(confusion([0, 0, 1], [0, 1, 1], 2).counts, [[1, 1], [0, 1]])


def test_confusion_perfect_is_diagonal():
    y = [0, 1, 2, 2, 1]
    cm = confusion(y, y, 3)
    assert np.count_nonzero(cm.counts - np.diag(np.diag(cm.counts))) == 0
    for c in range(3):
        b = binarize(cm, c)
        assert b.fp == 0 and b.fn == 0


def test_confusion_errors():
    with pytest.raises(ParameterError):
        confusion([0, 1], [0], 2)
    with pytest.raises(ParameterError):
        confusion([0, 2], [0, 1], 2)
    with pytest.raises(ParameterError):
        binarize(confusion([0], [0], 2), 2)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=100))
def test_confusion_counts_match_samples(pairs):
    true, pred = zip(*pairs)
    cm = confusion(true, pred, 5)
    assert cm.total == len(pairs)
    assert cm.counts.sum(axis=1).tolist() == np.bincount(true, minlength=5).tolist()
    assert sum(binarize(cm, c).total for c in range(5)) == 5 * len(pairs)
    for c in range(5):
        b = binarize(cm, c)
        assert (b.tp, b.tn, b.fp, b.fn) == counts_by_sample(true, pred, c)


def test_binarize_worked_example():
    assert binarize(confusion([0, 0, 1], [0, 1, 1], 2), 0) == BinaryCounts(tp=1, tn=1, fp=0, fn=1)


def test_acc_values():
    assert acc(BinaryCounts(5, 5, 0, 0)) == 1.0
    assert acc(BinaryCounts(tp=1, tn=1, fp=0, fn=1)) == pytest.approx(2 / 3)
    with pytest.raises(UndefinedMetricError):
        acc(BinaryCounts(0, 0, 0, 0))


def test_ber_values():
    assert ber(BinaryCounts(5, 5, 0, 0)) == 0.0
    assert ber(BinaryCounts(tp=1, tn=1, fp=1, fn=1)) == 0.5
    # no negatives at all: the FP term is 0/0 and contributes 0
    assert ber(BinaryCounts(tp=3, tn=0, fp=0, fn=1)) == pytest.approx(0.125)


def test_f1_values():
    assert f1(BinaryCounts(5, 5, 0, 0)) == 1.0
    assert f1(BinaryCounts(tp=1, tn=0, fp=1, fn=1)) == pytest.approx(0.5)
    assert f1(BinaryCounts(tp=0, tn=3, fp=1, fn=1)) == 0.0
    with pytest.raises(UndefinedMetricError):
        f1(BinaryCounts(0, 4, 0, 0))


def test_one_error_in_300_reproduces_reported_acc():
    true = np.repeat(np.arange(5), 60)
    pred = true.copy()
    pred[0] = 1
    assert round(macro_acc(confusion(true, pred, 5)), 6) == 0.998667


def test_nrmse_values():
    d = one_hot([0, 1, 2, 1], 3)
    assert nrmse(d, d) == 0.0
    assert nrmse(np.full_like(d, d.mean()), d) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(UndefinedMetricError):
        nrmse(d, np.ones_like(d))


def test_nrmse_matches_loop_and_is_permutation_invariant(rng):
    y, d = rng.uniform(size=(5, 12)), one_hot(rng.integers(0, 5, 12), 5)
    assert abs(nrmse(y, d) - nrmse_loop(y, d)) < 1e-12
    perm = rng.permutation(60)
    assert nrmse(y.ravel()[perm], d.ravel()[perm]) == pytest.approx(nrmse(y, d), rel=1e-14)


def test_macro_metrics_match_sample_oracle():
    rng = make_rng(77)
    for _ in range(200):
        n = int(rng.integers(1, 101))
        true = rng.integers(0, 5, n)
        pred = np.where(rng.uniform(size=n) < 0.6, true, rng.integers(0, 5, n))
        cm = confusion(true, pred, 5)
        o_acc, o_ber, o_f1 = macro_metrics_by_sample(true.tolist(), pred.tolist(), 5)
        assert macro_acc(cm) == o_acc and macro_ber(cm) == o_ber and macro_f1(cm) == o_f1


def _subject(rng, n=40, c=5):
    true = rng.integers(0, c, n)
    pred = np.where(rng.uniform(size=n) < 0.8, true, rng.integers(0, c, n))
    post = rng.dirichlet(np.ones(c), size=n).T
    return confusion(true, pred, c), post, one_hot(true, c)


def test_report_single_perfect_subject():
    y = np.arange(5).repeat(3)
    d = one_hot(y, 5)
    rep = report([(confusion(y, y, 5), d, d)])
    assert rep.row(1) == {"NRMSE": 0.0, "ACC": 1.0, "F1S": 1.0, "BER": 0.0}


def test_report_average_is_mean(rng):
    subjects = [_subject(rng) for _ in range(5)]
    rep = report(subjects)
    for m in METRICS:
        assert abs(rep.avg(m) - sum(rep.rows[m]) / 5) <= 1e-12
        assert 0 <= min(rep.rows[m])
    for m in ("ACC", "F1S", "BER"):
        assert max(rep.rows[m]) <= 1


def test_report_average_of_identical_rows(rng):
    s = _subject(rng)
    rep = report([s, s, s])
    for m in METRICS:
        assert rep.avg(m) == rep.rows[m][0]


def test_reported_average_row():
    rep = EvalReport([1, 2, 3, 4, 5], {m: v for m, (v, _) in REPORTED.items()})
    for m, (_, avg) in REPORTED.items():
        digits = len(str(avg).split(".")[1])
        assert round(rep.avg(m), digits) == avg


def test_report_labels_undefined_metric_with_subject():
    y = np.zeros(4, dtype=int)
    d = np.ones((1, 4))
    with pytest.raises(UndefinedMetricError, match="subject 7"):
        report([(confusion(y, y, 1), d, d)], subjects=[7])


def test_table_layout_and_csv_round_trip(tmp_path, rng):
    rep = report([_subject(rng) for _ in range(5)])
    lines = rep.to_table().splitlines()
    assert lines[0].split("\t") == ["Metric", "SU1", "SU2", "SU3", "SU4", "SU5", "AVG"]
    assert [ln.split("\t")[0] for ln in lines[1:]] == ["NRMSE", "ACC", "F1S", "BER"]
    rep.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "metric,su1,su2,su3,su4,su5,avg"
    back = EvalReport.from_csv(tmp_path / "r.csv")
    assert back.rows == rep.rows and back.subjects == rep.subjects


def test_malformed_report_csv(tmp_path):
    (tmp_path / "bad.csv").write_text("metric,x,avg\nACC,1,1\n")
    with pytest.raises(FormatError):
        EvalReport.from_csv(tmp_path / "bad.csv")
