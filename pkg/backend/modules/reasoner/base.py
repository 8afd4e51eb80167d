from abc import ABC, abstractmethod
from typing import Sequence

from modules.ingest.schemas import LogEvent
from modules.reasoner.schemas import ChainVerdict


class ReasonerBackend(ABC):
    """Les trois capacités du raisonnement en chaîne (M)."""

    name = "abstract"
    # Vrai si chaque appel est déjà réessayé par le backend
    retries_internally = False

    @abstractmethod
    def check_known_behavior(self, logs: Sequence[LogEvent]) -> list[str]:
        """Processus suspects dans les logs d'une communauté."""

    @abstractmethod
    def analyze_behavior(self, process_logs: Sequence[LogEvent]) -> str:
        """Description de la déviation d'un processus, chaîne vide sinon."""

    @abstractmethod
    def analyze_chain(self, chain: Sequence[LogEvent]) -> ChainVerdict:
        """Score σ_a, résumé et processus marqués pour une chaîne d'attaque."""


def chain_processes(chain: Sequence[LogEvent]) -> set[str]:
    processes = {e.process_id for e in chain}
    processes |= {e.object_id for e in chain if e.event_type == "fork"}
    return processes
