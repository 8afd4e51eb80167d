import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from modules.correlator.rolling import RollingPolicy, RollingProvenanceGraph, prune_rolling_graph
from modules.correlator.store import (
    GlobalAttackStore,
    WindowReport,
    apply_decay,
    apply_reinforcement,
    collect_alerts,
    integrate,
    save_checkpoint,
)
from modules.deviation.lineage import extract_lineage, flag_window
from modules.deviation.lof import fit_baseline, load_model, save_model
from modules.errors import DetectionError, ReasonerError, WindowError
from modules.graphalyzer.builder import build_graph, find_infection_points
from modules.graphalyzer.communities import detect_communities
from modules.graphalyzer.tagging import propagate_tags, prune
from modules.ingest.codebook import Codebook, encode
from modules.ingest.parser import ParseReport, parse_file
from modules.ingest.schemas import LogEvent, Window
from modules.ingest.windows import dedup, enumerate_windows, sort_events, window_slice
from modules.pipeline.config import PipelineConfig
from modules.reasoner.analyzer import analyze_community
from modules.reasoner.base import ReasonerBackend
from modules.reasoner.remote import remote_backend
from modules.reasoner.response import assemble_response
from modules.reasoner.stub import stub_backend
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


@dataclass
class WindowStats:
    window: int
    start: int
    events: int = 0
    unique_events: int = 0
    flagged: int = 0
    window_nodes: int = 0
    filtered_nodes: int = 0
    reduced_nodes: int = 0
    reduced_edges: int = 0
    infection_points: int = 0
    communities: int = 0
    results: int = 0
    candidate_alerts: int = 0
    failed_communities: int = 0
    alerts: int = 0
    rolling_nodes: int = 0

    @property
    def reduction_ratio(self) -> float:
        if self.window_nodes == 0:
            return 0.0
        return 1.0 - self.reduced_nodes / self.window_nodes


@dataclass
class RunResult:
    windows: list[Window]
    alerts: list = field(default_factory=list)
    stats: list[WindowStats] = field(default_factory=list)
    store: GlobalAttackStore | None = None
    reduced_events: set = field(default_factory=set)
    detected_windows: set[int] = field(default_factory=set)


def make_backend(config: PipelineConfig) -> ReasonerBackend:
    settings = config.reasoner
    if settings.backend == "remote":
        return remote_backend(
            settings.endpoint,
            settings.model,
            settings.prompts_dir,
            api_key=settings.api_key,
            timeout=settings.timeout,
            max_attempts=settings.max_attempts,
            max_in_flight=settings.max_in_flight,
        )
    return stub_backend(settings.rules_path)


def train(config: PipelineConfig, events: Sequence[LogEvent], model_path=None):
    """Ajuste la base LOF sur les triplets uniques de la période d'entraînement."""
    train_until = config.deviation.train_until
    if train_until is not None:
        events = [e for e in events if e.timestamp < train_until]
    unique = dedup(sort_events(events))
    triples, codebook = encode(unique, Codebook())
    model = fit_baseline(triples, k=config.deviation.k, contamination=config.deviation.contamination)
    if model_path:
        Path(model_path).parent.mkdir(parents=True, exist_ok=True)
        save_model(model, codebook, model_path)
    logger.info(f"Base apprise sur {len(triples)} triplets, seuil LOF {model.score_threshold:.4f}")
    return model, codebook


class DetectionEngine:
    """Boucle par fenêtre : filtrage, graphe, raisonnement, corrélation."""

    def __init__(self, config: PipelineConfig, model, codebook: Codebook, backend=None):
        self.config = config
        self.model = model
        self.codebook = codebook.copy()
        self.backend = backend or make_backend(config)
        self.store = GlobalAttackStore(merge_on_objects=config.correlator.merge_on_objects)
        self.rolling = RollingProvenanceGraph()
        self.policy = RollingPolicy(
            horizon=config.correlator.horizon,
            retention=config.correlator.retention,
            max_nodes=config.correlator.max_nodes,
        )
        self.deferred: list[LogEvent] = []

    def _rescore(self, events):
        try:
            return self.backend.analyze_chain(events).score
        except ReasonerError as e:
            logger.warning(f"Ré-analyse impossible, décroissance passive : {e}")
            return None

    def _analyze_all(self, communities, reduced, window: Window, stats: WindowStats):
        def run(community):
            try:
                return community, analyze_community(
                    community, community.events, self.backend, self.config.reasoner.max_attempts
                )
            except ReasonerError as e:
                logger.error(f"Communauté {community.id} : analysis-failed ({e})")
                return community, e

        workers = self.config.reasoner.workers
        if workers > 1 and len(communities) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(run, communities))
        else:
            outcomes = [run(c) for c in communities]

        responses = []
        for community, outcome in sorted(outcomes, key=lambda item: item[0].id):
            if isinstance(outcome, ReasonerError):
                stats.failed_communities += 1
                self.deferred.extend(community.events)
                continue
            if outcome is None:
                continue
            stats.results += 1
            response = assemble_response(
                outcome,
                reduced,
                self.config.reasoner.alert_threshold,
                window.index,
                self.config.graph.internal_cidrs,
            )
            if response is not None:
                responses.append(response)
        return responses

    def _with_new_evidence(self, responses):
        """Écarte les réponses dont tous les événements sont déjà connus du store.

        Une chaîne retenue dans le graphe glissant est redétectée à chaque
        fenêtre ; sans événement nouveau elle ne confirme rien.
        """
        held = set().union(*(s.tuples for s in self.store.sets.values()))
        kept = [r for r in responses if not r.attack_set.tuples <= held]
        if len(kept) < len(responses):
            logger.debug(f"{len(responses) - len(kept)} réponse(s) sans événement nouveau écartée(s)")
        return kept

    def process_window(self, window: Window, events: Sequence[LogEvent], result: RunResult):
        stats = WindowStats(window=window.index, start=window.start, events=len(events))
        unique = dedup(events)
        stats.unique_events = len(unique)
        stats.window_nodes = len({e.process_id for e in unique} | {e.object_id for e in unique})

        triples, _ = encode(unique, self.codebook)
        flags = flag_window(self.model, unique, triples)
        stats.flagged = sum(f.flagged for f in flags)
        filtered = extract_lineage(flags, unique)
        stats.filtered_nodes = len(filtered.nodes)

        # Contexte retenu des fenêtres passées, puis communautés en échec
        graph_events = list(filtered.events)
        known = {e.as_tuple for e in graph_events}
        for event in [*self.rolling.events(), *self.deferred]:
            if event.as_tuple not in known:
                known.add(event.as_tuple)
                graph_events.append(event)
        self.deferred = []
        graph = build_graph(graph_events, skip_unknown=self.config.ingest.skip_unknown)
        points = find_infection_points(graph, self.config.graph.internal_cidrs)
        stats.infection_points = len(points)
        tags = propagate_tags(graph, points, causal=self.config.graph.causal_tags)
        reduced = prune(graph, tags)
        stats.reduced_nodes = reduced.number_of_nodes()
        stats.reduced_edges = reduced.number_of_edges()
        result.reduced_events |= {e.as_tuple for e in reduced.events()}

        communities = detect_communities(
            reduced, seed=self.config.seed, restarts=self.config.graph.louvain_restarts
        )
        stats.communities = len(communities)
        responses = self._with_new_evidence(self._analyze_all(communities, reduced, window, stats))
        stats.candidate_alerts = sum(r.alert is not None for r in responses)
        if stats.candidate_alerts:
            result.detected_windows.add(window.index)

        new_sets = [r.attack_set for r in responses]
        confirmed = set().union(*(s.process_ids for s in new_sets)) if new_sets else set()
        integrate(self.store, new_sets, window.index)

        pending = [s for s in self.store.active_sets() if s.needs_reanalysis]
        verdicts = {}
        for attack_set in sorted(pending, key=lambda s: s.id):
            try:
                verdicts[attack_set.id] = self.backend.analyze_chain(attack_set.events)
            except ReasonerError as e:
                logger.warning(f"Ré-analyse de {attack_set.id} reportée : {e}")
        apply_reinforcement(self.store, verdicts, window.index)

        report = WindowReport.from_events(window.index, unique, confirmed)
        apply_decay(
            self.store,
            report,
            rescore=self._rescore,
            cadence=self.config.correlator.reanalysis_cadence,
            rate=self.config.correlator.decay_rate,
        )

        alerts = collect_alerts(
            self.store,
            window.index,
            self.config.reasoner.alert_threshold,
            self.config.graph.internal_cidrs,
        )
        stats.alerts = len(alerts)
        result.alerts.extend(alerts)

        self.rolling.add_events(filtered.events, window.index)
        prune_rolling_graph(self.rolling, self.store, window.index, self.policy)
        stats.rolling_nodes = self.rolling.number_of_nodes()
        result.stats.append(stats)

        if alerts:
            for alert in alerts:
                logger.warning(
                    f"ALERTE {alert.kind} fenêtre {window.index} : {alert.set_id} "
                    f"σ_a={alert.confidence:.2f}"
                )

    def run(self, events: Sequence[LogEvent]) -> RunResult:
        ordered = sort_events(events)
        if not ordered:
            return RunResult(windows=[], store=self.store)
        windows = enumerate_windows(
            ordered[0].timestamp,
            ordered[-1].timestamp,
            self.config.windowing.length_ns,
            self.config.windowing.step_ns,
        )
        result = RunResult(windows=windows, store=self.store)
        logger.info(f"Détection sur {len(ordered)} événements, {len(windows)} fenêtres")
        for window in windows:
            try:
                self.process_window(window, window_slice(ordered, window), result)
            except DetectionError as e:
                raise WindowError(window.index, e) from e
            except (ValueError, KeyError) as e:
                raise WindowError(window.index, e) from e
        logger.info(
            f"Détection terminée : {len(result.alerts)} alerte(s), "
            f"{len(self.store.active_sets())} ensemble(s) actif(s)"
        )
        return result


def read_events(config: PipelineConfig, path) -> ParseReport:
    return parse_file(path, event_types=config.ingest.event_types, strict=config.ingest.strict)


def write_outputs(result: RunResult, output_dir, parse_report: ParseReport | None = None) -> dict[str, Path]:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "alerts": output_dir / "alerts.jsonl",
        "stats": output_dir / "window_stats.jsonl",
        "checkpoint": output_dir / "checkpoint.json",
    }
    if parse_report is not None:
        paths["parse_errors"] = output_dir / "parse_errors.jsonl"
        parse_report.write_issues(paths["parse_errors"])
    with open(paths["alerts"], "w", encoding="utf-8") as handle:
        for alert in result.alerts:
            handle.write(alert.to_json() + "\n")
    with open(paths["stats"], "w", encoding="utf-8") as handle:
        for stats in result.stats:
            row = asdict(stats) | {"reduction_ratio": round(stats.reduction_ratio, 6)}
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    save_checkpoint(result.store, paths["checkpoint"])
    return paths


def run(config: PipelineConfig, input_path, model_path=None, backend=None) -> RunResult:
    """Détection complète sur un fichier JSONL.

    Écrit alertes, stats, point de reprise et lignes rejetées à la lecture.
    """
    model_path = Path(model_path or config.deviation.model_path)
    if not model_path.exists():
        raise DetectionError(f"modèle de base absent : {model_path} (lancer train)")
    model, codebook = load_model(model_path)
    report = read_events(config, input_path)
    if report.issues:
        logger.warning(f"{len(report.issues)} ligne(s) rejetée(s) dans {input_path}")
    engine = DetectionEngine(config, model, codebook, backend)
    result = engine.run(report.events)
    write_outputs(result, config.output_dir, report)
    return result
