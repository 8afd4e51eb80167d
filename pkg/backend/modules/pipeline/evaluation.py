import json
from typing import Iterable, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from modules.errors import EvaluationMismatchError
from modules.ingest.schemas import Window
from modules.pipeline.scenario import GroundTruth
from modules.reasoner.schemas import Alert, AttackEventSet
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

MATCH_TOLERANCE_NS = 10**9


class Metrics(BaseModel):
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int | None = None
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    # Métriques forcées à 0 faute de dénominateur
    undefined: list[str] = Field(default_factory=list)


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int | None = None) -> Metrics:
    metrics = Metrics(tp=tp, fp=fp, fn=fn, tn=tn)
    if tp + fp > 0:
        metrics.precision = tp / (tp + fp)
    else:
        metrics.undefined.append("precision")
    if tp + fn > 0:
        metrics.recall = tp / (tp + fn)
    else:
        metrics.undefined.append("recall")
    if metrics.precision + metrics.recall > 0:
        metrics.f1 = 2 * metrics.precision * metrics.recall / (metrics.precision + metrics.recall)
    else:
        metrics.undefined.append("f1")
    return metrics


class AttackMetrics(BaseModel):
    attack: str
    metrics: Metrics


class EvalReport(BaseModel):
    attacks: list[AttackMetrics] = Field(default_factory=list)
    events: Metrics = Field(default_factory=Metrics)
    windows: Metrics = Field(default_factory=Metrics)

    def to_json(self) -> str:
        return self.model_dump_json(indent=1)

    def table(self) -> pd.DataFrame:
        rows = [("attack", row.attack, row.metrics) for row in self.attacks]
        rows += [("events", "all", self.events), ("windows", "all", self.windows)]
        frame = pd.DataFrame(
            [
                {
                    "level": level,
                    "scope": scope,
                    "TP": m.tp,
                    "FP": m.fp,
                    "FN": m.fn,
                    "TN": m.tn,
                    "precision": m.precision,
                    "recall": m.recall,
                    "F1": m.f1,
                }
                for level, scope, m in rows
            ]
        )
        return frame.round({"precision": 2, "recall": 2, "F1": 2})

    def render(self) -> str:
        return self.table().to_string(index=False)


def match_events(predicted: Iterable[tuple], labeled: Sequence[tuple], tolerance: int = MATCH_TOLERANCE_NS):
    """Appariement glouton 1:1 : (p, e, o) exact et |Δt| ≤ tolérance."""
    by_triple: dict[tuple, list[int]] = {}
    for index, label in enumerate(labeled):
        by_triple.setdefault(tuple(label[:3]), []).append(index)
    matched_labels: set[int] = set()
    matched_predictions = []
    for prediction in sorted(set(map(tuple, predicted)), key=lambda t: (t[3], t)):
        candidates = by_triple.get(prediction[:3], [])
        best = None
        for index in candidates:
            if index in matched_labels:
                continue
            delta = abs(labeled[index][3] - prediction[3])
            if delta <= tolerance and (best is None or delta < best[0]):
                best = (delta, index)
        if best is not None:
            matched_labels.add(best[1])
            matched_predictions.append(prediction)
    return matched_predictions, matched_labels


def _overlaps(window: Window, intervals) -> bool:
    return any(start < window.end and end >= window.start for start, end in intervals)


def evaluate(
    alerts: Sequence[Alert],
    attack_sets: Sequence[AttackEventSet],
    truth: GroundTruth,
    windows: Sequence[Window] = (),
    detected_windows: Iterable[int] = (),
) -> EvalReport:
    """Évaluation au niveau fenêtre et au niveau événement."""
    known = {w.index for w in windows}
    stray = {a.window for a in alerts} - known
    if windows and stray:
        raise EvaluationMismatchError(
            f"alertes sur des fenêtres absentes du flux évalué : {sorted(stray)[:5]}"
        )
    if windows and truth.events:
        first, last = windows[0].start, windows[-1].end
        outside = [t for t in truth.events if not first <= t[3] < last]
        if outside:
            raise EvaluationMismatchError(
                f"{len(outside)} étiquette(s) hors de la période du flux évalué"
            )

    predicted = sorted({t for s in attack_sets for t in s.tuples}, key=lambda t: (t[3], t))
    labeled = [tuple(t) for t in truth.events]
    matched, matched_labels = match_events(predicted, labeled)
    matched_set = set(matched)
    report = EvalReport(
        events=metrics_from_counts(
            tp=len(matched), fp=len(predicted) - len(matched), fn=len(labeled) - len(matched_labels)
        )
    )

    for name, attack_labels in sorted(truth.attacks.items()):
        attack_labels = [tuple(t) for t in attack_labels]
        owning = [s for s in attack_sets if match_events(s.tuples, attack_labels)[0]]
        own_predicted = {t for s in owning for t in s.tuples}
        hits, hit_labels = match_events(own_predicted, attack_labels)
        fp = sum(1 for t in own_predicted if t not in matched_set)
        report.attacks.append(
            AttackMetrics(
                attack=name,
                metrics=metrics_from_counts(len(hits), fp, len(attack_labels) - len(hit_labels)),
            )
        )

    detected = {a.window for a in alerts} | set(detected_windows)
    tp = fp = fn = tn = 0
    for window in windows:
        positive = _overlaps(window, truth.windows)
        flagged = window.index in detected
        if positive and flagged:
            tp += 1
        elif positive:
            fn += 1
        elif flagged:
            fp += 1
        else:
            tn += 1
    report.windows = metrics_from_counts(tp, fp, fn, tn)
    logger.info(
        f"Évaluation : événements P={report.events.precision:.2f} R={report.events.recall:.2f} ; "
        f"fenêtres P={report.windows.precision:.2f} R={report.windows.recall:.2f}"
    )
    return report


def write_report(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(report.to_json() + "\n")


def load_report(path) -> EvalReport:
    with open(path, encoding="utf-8") as handle:
        return EvalReport.model_validate(json.load(handle))


def reduction_report(reduced_events: Iterable[tuple], truth: GroundTruth, stats=()) -> dict:
    """Réduction de graphe et rétention des événements d'attaque dans E_R."""
    retained, _ = match_events(reduced_events, [tuple(t) for t in truth.events])
    window_nodes = sum(s.window_nodes for s in stats)
    reduced_nodes = sum(s.reduced_nodes for s in stats)
    return {
        "attack_events": len(truth.events),
        "retained": len(retained),
        "retention": len(retained) / len(truth.events) if truth.events else 1.0,
        "node_reduction": 1.0 - reduced_nodes / window_nodes if window_nodes else 0.0,
    }
