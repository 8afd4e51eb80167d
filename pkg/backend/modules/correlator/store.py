import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import networkx as nx

from modules.graphalyzer.builder import DEFAULT_INTERNAL_CIDRS
from modules.ingest.schemas import LogEvent
from modules.reasoner.response import generate_alert, remap_kill_chain
from modules.reasoner.schemas import (
    ALERT_THRESHOLD,
    RETAIN_THRESHOLD,
    Alert,
    AttackEventSet,
    ChainVerdict,
)
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

CHECKPOINT_VERSION = 1


@dataclass
class QueueState:
    primary: list[str] = field(default_factory=list)
    secondary: list[str] = field(default_factory=list)
    retired: list[str] = field(default_factory=list)


@dataclass
class MergeEvent:
    window: int
    target: str
    absorbed: list[str]


@dataclass
class WindowReport:
    """Activité observée dans la fenêtre, vue par le corrélateur.

    activity : dernier horodatage vu par processus dans la fenêtre.
    confirmed : processus appartenant à un ensemble confirmé cette fenêtre.
    context : événements de contexte par processus, soumis au raisonneur.
    """

    window: int
    activity: dict[str, int] = field(default_factory=dict)
    confirmed: set[str] = field(default_factory=set)
    context: dict[str, list[LogEvent]] = field(default_factory=dict)

    @classmethod
    def from_events(cls, window: int, events: Iterable[LogEvent], confirmed=()) -> "WindowReport":
        report = cls(window=window, confirmed=set(confirmed))
        for event in events:
            for process in (event.process_id, event.object_id if event.event_type == "fork" else None):
                if process is None:
                    continue
                report.activity[process] = max(report.activity.get(process, 0), event.timestamp)
                report.context.setdefault(process, []).append(event)
        return report


class GlobalAttackStore:
    """Ensemble global des attaques en cours et passées."""

    def __init__(self, merge_on_objects: bool = False):
        self.sets: dict[str, AttackEventSet] = {}
        self.benign_context: dict[str, list[LogEvent]] = {}
        self.retired_window: dict[str, int] = {}
        self.merge_on_objects = merge_on_objects
        self._next_id = 1

    def new_id(self) -> str:
        set_id = f"set-{self._next_id:04d}"
        self._next_id += 1
        return set_id

    def active_sets(self) -> list[AttackEventSet]:
        return [s for s in self.sets.values() if s.queue != "retired"]

    def process_index(self) -> dict[str, set[str]]:
        index: dict[str, set[str]] = {}
        for attack_set in self.active_sets():
            for process in attack_set.process_ids:
                index.setdefault(process, set()).add(attack_set.id)
        return index

    def queues(self) -> QueueState:
        state = QueueState()
        ordered = sorted(self.sets.values(), key=lambda s: (-s.score, s.created_window, s.id))
        for attack_set in ordered:
            getattr(state, attack_set.queue).append(attack_set.id)
        return state

    def report(self, window: int | None = None) -> list[dict]:
        rows = []
        state = self.queues()
        for queue in ("primary", "secondary", "retired"):
            for set_id in getattr(state, queue):
                s = self.sets[set_id]
                age = (window if window is not None else s.updated_window) - s.created_window
                rows.append(
                    {
                        "id": s.id,
                        "queue": queue,
                        "score": s.score,
                        "age": age,
                        "processes": sorted(s.process_ids),
                        "events": len(s.events),
                    }
                )
        return rows

    def to_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "next_id": self._next_id,
            "merge_on_objects": self.merge_on_objects,
            "sets": [self.sets[k].model_dump(mode="json", by_alias=True) for k in sorted(self.sets)],
            "benign_context": {
                k: [e.model_dump(by_alias=True) for e in v]
                for k, v in sorted(self.benign_context.items())
            },
            "retired_window": dict(sorted(self.retired_window.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GlobalAttackStore":
        store = cls(merge_on_objects=data.get("merge_on_objects", False))
        store._next_id = data["next_id"]
        for raw in data["sets"]:
            raw = {k: v for k, v in raw.items() if k != "queue"}
            attack_set = AttackEventSet.model_validate(raw)
            store.sets[attack_set.id] = attack_set
        store.benign_context = {
            k: [LogEvent.model_validate(e) for e in v]
            for k, v in data.get("benign_context", {}).items()
        }
        store.retired_window = dict(data.get("retired_window", {}))
        return store


def save_checkpoint(store: GlobalAttackStore, path) -> None:
    text = json.dumps(store.to_dict(), sort_keys=True, indent=1, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path) -> GlobalAttackStore:
    return GlobalAttackStore.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _overlap_keys(store: GlobalAttackStore, attack_set: AttackEventSet) -> set[str]:
    keys = {f"p:{p}" for p in attack_set.process_ids}
    if store.merge_on_objects:
        keys |= {f"o:{o}" for o in attack_set.object_ids}
    return keys


def _absorb(target: AttackEventSet, others: list[AttackEventSet]) -> None:
    chains = [(m.kill_chain, list(m.events)) for m in [target, *others]]
    for other in others:
        target.add_events(other.events)
    kill_chain: dict[str, set[int]] = {}
    for member_chain, member_events in chains:
        for stage, indexes in remap_kill_chain(member_chain, member_events, target.events).items():
            kill_chain.setdefault(stage, set()).update(indexes)
    target.kill_chain = {stage: sorted(v) for stage, v in kill_chain.items()}
    best = max([target, *others], key=lambda s: s.score)
    target.score = best.score
    target.summary = best.summary or target.summary
    target.last_seen_ts = max(s.last_seen_ts for s in [target, *others])


def integrate(
    store: GlobalAttackStore, new_sets: list[AttackEventSet], window: int
) -> list[MergeEvent]:
    """Fusionne les ensembles de la fenêtre avec les ensembles actifs.

    Recouvrement = processus partagé (ou objet si merge_on_objects), clos
    transitivement. L'ensemble fusionné garde l'identifiant du plus ancien,
    prend le maximum des scores et attend une ré-analyse.
    """
    existing = sorted(store.active_sets(), key=lambda s: (s.created_window, s.id))
    candidates = [*existing, *new_sets]
    overlap = nx.Graph()
    overlap.add_nodes_from(range(len(candidates)))
    owners: dict[str, int] = {}
    for index, attack_set in enumerate(candidates):
        for key in sorted(_overlap_keys(store, attack_set)):
            if key in owners:
                overlap.add_edge(owners[key], index)
            else:
                owners[key] = index

    merges = []
    for component in sorted(nx.connected_components(overlap), key=min):
        members = [candidates[i] for i in sorted(component)]
        target, others = members[0], members[1:]
        if target.id not in store.sets:
            # Premier ensemble de la fenêtre sans antécédent actif
            target.id = store.new_id()
            target.created_window = window
            store.sets[target.id] = target
        if not others:
            target.record(window)
            continue
        _absorb(target, others)
        for other in others:
            store.sets.pop(other.id, None)
            store.benign_context.pop(other.id, None)
        target.needs_reanalysis = True
        target.benign_windows = 0
        target.record(window)
        merges.append(MergeEvent(window=window, target=target.id, absorbed=[o.id for o in others]))
        logger.info(f"Fusion dans {target.id} de {len(others)} ensemble(s), σ_a={target.score:.2f}")
    return merges


def _retire_if_needed(store: GlobalAttackStore, attack_set: AttackEventSet, window: int) -> None:
    if attack_set.score < RETAIN_THRESHOLD and attack_set.id not in store.retired_window:
        store.retired_window[attack_set.id] = window
        logger.info(f"Ensemble {attack_set.id} retiré (σ_a={attack_set.score:.3f})")


def apply_decay(
    store: GlobalAttackStore,
    report: WindowReport,
    rescore: Callable[[list[LogEvent]], float | None] | None = None,
    cadence: int = 2,
    rate: float = 0.025,
) -> list[str]:
    """Décroissance des ensembles actifs dont les processus restent bénins.

    Une fenêtre est bénigne pour un ensemble si l'un de ses processus agit
    après sa dernière activité connue sans être confirmé suspect. Un
    ensemble dormant ne décroît pas. Renvoie les identifiants décrus.
    """
    decayed = []
    for attack_set in sorted(store.active_sets(), key=lambda s: s.id):
        processes = attack_set.process_ids
        if processes & report.confirmed:
            attack_set.benign_windows = 0
            continue
        latest = max(
            (report.activity[p] for p in processes if p in report.activity), default=0
        )
        if latest <= attack_set.last_seen_ts:
            continue

        attack_set.benign_windows += 1
        attack_set.last_seen_ts = latest
        context = store.benign_context.setdefault(attack_set.id, [])
        seen = {e.as_tuple for e in context}
        for process in sorted(processes):
            for event in report.context.get(process, []):
                if event.as_tuple not in seen:
                    seen.add(event.as_tuple)
                    context.append(event)

        new_score = None
        if rescore is not None and attack_set.benign_windows % cadence == 0:
            new_score = rescore(sorted([*attack_set.events, *context], key=lambda e: (e.timestamp, e.as_tuple)))
        if new_score is not None and new_score < attack_set.score:
            attack_set.score = round(new_score, 4)
        else:
            attack_set.score = round(max(0.0, attack_set.score - rate), 4)
        attack_set.record(report.window)
        _retire_if_needed(store, attack_set, report.window)
        decayed.append(attack_set.id)
        logger.debug(
            f"Décroissance {attack_set.id} : {attack_set.benign_windows} fenêtre(s) bénigne(s), "
            f"σ_a={attack_set.score:.3f}"
        )
    return decayed


def apply_reinforcement(
    store: GlobalAttackStore, results: dict[str, ChainVerdict | float], window: int
) -> list[str]:
    """Renforcement à cliquet : un score ne fait que monter. Renvoie les promus."""
    promoted = []
    for set_id, result in sorted(results.items()):
        attack_set = store.sets.get(set_id)
        if attack_set is None:
            continue
        attack_set.needs_reanalysis = False
        score = result.score if isinstance(result, ChainVerdict) else float(result)
        if score <= attack_set.score:
            continue
        before = attack_set.queue
        attack_set.score = score
        if isinstance(result, ChainVerdict):
            attack_set.summary = result.summary
            attack_set.kill_chain = result.kill_chain
        attack_set.record(window)
        if before != "primary" and attack_set.queue == "primary":
            promoted.append(set_id)
        logger.info(f"Renforcement {set_id} : σ_a={score:.2f} ({before} → {attack_set.queue})")
    return promoted


def collect_alerts(
    store: GlobalAttackStore,
    window: int,
    alert_threshold: float = ALERT_THRESHOLD,
    internal_cidrs=DEFAULT_INTERNAL_CIDRS,
) -> list[Alert]:
    """Alertes pour les ensembles au-dessus de δ dont le score a progressé."""
    alerts = []
    for attack_set in sorted(store.active_sets(), key=lambda s: s.id):
        if attack_set.score < alert_threshold:
            continue
        if attack_set.alerted_score is not None and attack_set.score <= attack_set.alerted_score:
            continue
        attack_set.alerted_score = attack_set.score
        alert = generate_alert(attack_set, window, internal_cidrs)
        logger.bind(alert_id=alert.id).info(
            f"Alerte {alert.kind} {attack_set.id} : σ_a={alert.confidence:.2f}, "
            f"{len(alert.events)} événement(s), IOC={','.join(alert.iocs) or '-'}"
        )
        alerts.append(alert)
    return alerts
