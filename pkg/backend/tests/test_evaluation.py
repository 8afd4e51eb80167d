import pytest

from modules.errors import EvaluationMismatchError
from modules.ingest.windows import enumerate_windows
from modules.pipeline.evaluation import (
    evaluate,
    load_report,
    match_events,
    metrics_from_counts,
    reduction_report,
    write_report,
)
from modules.pipeline.scenario import GroundTruth
from modules.reasoner.response import generate_alert
from modules.reasoner.schemas import AttackEventSet
from tests.conftest import MINUTE, ev

SECOND = 10**9


@pytest.mark.parametrize(
    "tp, fp, fn, expected",
    [
        (7, 17, 5, (0.29, 0.58, 0.39)),
        (6, 4, 3, (0.60, 0.67, 0.63)),
        (9, 683, 3, (0.01, 0.75, 0.03)),
        (13, 0, 1, (1.00, 0.93, 0.96)),
        (25, 0, 2, (1.00, 0.93, 0.96)),
        (19, 0, 1, (1.00, 0.95, 0.97)),
        # Valeurs recalculées à partir des effectifs
        (32, 47, 0, (0.41, 1.00, 0.58)),
        (31, 35, 5, (0.47, 0.86, 0.61)),
    ],
)
def test_metrics_from_published_counts(tp, fp, fn, expected):
    m = metrics_from_counts(tp, fp, fn)
    assert (round(m.precision, 2), round(m.recall, 2), round(m.f1, 2)) == expected


def test_ablation_percentages():
    m = metrics_from_counts(tp=7, fp=21, fn=5, tn=681)
    assert (round(100 * m.precision, 1), round(100 * m.recall, 1), round(100 * m.f1, 1)) == (25.0, 58.3, 35.0)


def test_zero_denominators_are_zero():
    m = metrics_from_counts(0, 0, 0)
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert m.undefined == ["precision", "recall", "f1"]
    assert metrics_from_counts(0, 3, 0).undefined == ["recall", "f1"]


def test_match_events_greedy_within_tolerance():
    labeled = [("P1", "read", "F1", 10 * SECOND), ("P1", "read", "F1", 12 * SECOND)]
    predicted = [
        ("P1", "read", "F1", 10 * SECOND + SECOND // 2),
        ("P1", "read", "F1", 11 * SECOND),
        ("P1", "read", "F1", 30 * SECOND),
        ("P2", "read", "F1", 10 * SECOND),
    ]
    matched, labels = match_events(predicted, labeled)
    assert matched == predicted[:2]
    assert labels == {0, 1}


def _fixture():
    start = 100 * MINUTE
    labels = [
        ev("A0", "firefox", "recv", "X0", "61.130.69.232:80", start + 20 * MINUTE),
        ev("A0", "firefox", "fork", "A1", "clean", start + 21 * MINUTE),
    ]
    truth = GroundTruth(
        events=[e.as_tuple for e in labels],
        windows=[(labels[0].timestamp, labels[-1].timestamp)],
        attacks={"theia_day1#0": [e.as_tuple for e in labels]},
    )
    windows = enumerate_windows(start, start + 90 * MINUTE - 1, origin=start)
    attack_set = AttackEventSet(id="set-0001", score=0.85, created_window=1, updated_window=1)
    attack_set.add_events(labels[:1] + [ev("B0", "bash", "read", "F0", "/etc/hosts", start + 22 * MINUTE)])
    return truth, windows, attack_set


def test_evaluate_event_and_window_levels():
    truth, windows, attack_set = _fixture()
    alert = generate_alert(attack_set, 1)
    report = evaluate([alert], [attack_set], truth, windows)
    assert (report.events.tp, report.events.fp, report.events.fn) == (1, 1, 1)
    assert report.events.precision == 0.5

    # Fenêtres [0,30) [15,45) [30,60) [45,75) [60,90) : les deux premières couvrent l'attaque
    assert (report.windows.tp, report.windows.fn, report.windows.fp, report.windows.tn) == (1, 1, 0, 3)
    (attack,) = report.attacks
    assert attack.attack == "theia_day1#0"
    assert (attack.metrics.tp, attack.metrics.fp, attack.metrics.fn) == (1, 1, 1)


def test_candidate_windows_count_as_detected():
    truth, windows, attack_set = _fixture()
    report = evaluate([], [attack_set], truth, windows, detected_windows={0, 4})
    assert (report.windows.tp, report.windows.fn, report.windows.fp, report.windows.tn) == (1, 1, 1, 2)


def test_report_table_and_round_trip(tmp_path):
    truth, windows, attack_set = _fixture()
    report = evaluate([], [attack_set], truth, windows)
    table = report.table()
    assert list(table["level"]) == ["attack", "events", "windows"]
    assert table.loc[1, "precision"] == 0.5
    assert "windows" in report.render()
    path = tmp_path / "report.json"
    write_report(report, path)
    assert load_report(path) == report


def test_alert_outside_stream_rejected():
    truth, windows, attack_set = _fixture()
    with pytest.raises(EvaluationMismatchError):
        evaluate([generate_alert(attack_set, 42)], [attack_set], truth, windows)


def test_labels_outside_stream_rejected():
    truth, windows, attack_set = _fixture()
    with pytest.raises(EvaluationMismatchError):
        evaluate([], [attack_set], truth, windows[3:])


def test_reduction_report():
    truth, _, attack_set = _fixture()
    report = reduction_report(attack_set.tuples, truth)
    assert report == {"attack_events": 2, "retained": 1, "retention": 0.5, "node_reduction": 0.0}
