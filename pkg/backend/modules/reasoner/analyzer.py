from typing import Sequence

from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from modules.errors import ReasonerError
from modules.graphalyzer.communities import Community
from modules.ingest.schemas import LogEvent
from modules.reasoner.base import ReasonerBackend
from modules.reasoner.schemas import AnalysisResult
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


def extract_process_chain(
    suspicious: Sequence[str], temporal_patterns: dict[str, str], logs: Sequence[LogEvent]
) -> list[LogEvent]:
    """Sous-séquence temporelle reliant les processus suspects.

    Garde les événements des processus suspects, les forks qui en créent un,
    et les événements d'autres processus sur des objets qu'ils ont touchés.
    """
    # Les processus à déviation sont suspects par construction
    members = set(suspicious) | set(temporal_patterns)
    touched = {e.object_id for e in logs if e.process_id in members}
    chain = [
        e
        for e in logs
        if e.process_id in members
        or (e.event_type == "fork" and e.object_id in members)
        or e.object_id in touched
    ]
    return sorted(chain, key=lambda e: (e.timestamp, e.as_tuple))


def _analyze(community: Community, logs: Sequence[LogEvent], backend: ReasonerBackend):
    # Étape 1 : comportements connus
    suspicious = backend.check_known_behavior(logs)
    if not suspicious:
        return None

    # Étape 2 : déviation par processus
    temporal_patterns = {}
    for process_id in suspicious:
        process_logs = [e for e in logs if e.process_id == process_id]
        deviation = backend.analyze_behavior(process_logs)
        if deviation:
            temporal_patterns[process_id] = deviation
    if not temporal_patterns:
        return None

    # Étape 3 : chaîne d'attaque
    chain = extract_process_chain(suspicious, temporal_patterns, logs)
    if not chain:
        return None
    verdict = backend.analyze_chain(chain)

    return AnalysisResult(
        community_id=community.id,
        score=verdict.score,
        summary=verdict.summary,
        tagged_processes=verdict.tagged_processes,
        temporal_patterns=temporal_patterns,
        attack_chain=chain,
        kill_chain=verdict.kill_chain,
    )


def analyze_community(
    community: Community,
    logs: Sequence[LogEvent],
    backend: ReasonerBackend,
    attempts: int = 1,
) -> AnalysisResult | None:
    """Raisonnement en trois étapes sur une communauté.

    Lève ReasonerError une fois les tentatives épuisées ; l'appelant marque
    alors la communauté « analysis-failed ». Un backend qui réessaie déjà
    chaque appel n'est sollicité qu'une fois ici.
    """
    if not community.members:
        return None
    if getattr(backend, "retries_internally", False):
        attempts = 1
    retrying = Retrying(
        stop=stop_after_attempt(max(1, attempts)),
        retry=retry_if_exception_type(ReasonerError),
        reraise=True,
    )
    result = retrying(_analyze, community, logs, backend)
    if result is None:
        logger.debug(f"Communauté {community.id} : aucune chaîne suspecte")
    else:
        logger.info(
            f"Communauté {community.id} : σ_a={result.score:.2f}, "
            f"processus marqués {result.tagged_processes}"
        )
    return result
