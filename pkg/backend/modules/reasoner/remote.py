import json
import threading
from pathlib import Path
from string import Template
from typing import Sequence

import requests
from pydantic import BaseModel, ValidationError
from tenacity import (
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from modules.errors import ReasonerError, SchemaViolationError
from modules.ingest.schemas import LogEvent
from modules.reasoner.base import ReasonerBackend, chain_processes
from modules.reasoner.schemas import KILL_CHAIN_STAGES, ChainVerdict
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

PROMPTS_DIR = Path(__file__).resolve().parent / "prompts"
PROMPT_NAMES = ("check_known_behavior", "analyze_behavior", "analyze_chain")


class KnownBehaviorReply(BaseModel):
    suspicious_processes: list[str]


class BehaviorReply(BaseModel):
    deviation: str = ""


def load_prompts(prompts_dir=None) -> dict[str, Template]:
    prompts_dir = Path(prompts_dir or PROMPTS_DIR)
    prompts = {}
    for name in PROMPT_NAMES:
        path = prompts_dir / f"{name}.txt"
        if not path.exists():
            raise ReasonerError(f"gabarit de prompt introuvable : {path}")
        prompts[name] = Template(path.read_text(encoding="utf-8"))
    return prompts


def format_events(events: Sequence[LogEvent], indexed: bool = False) -> str:
    lines = []
    for index, e in enumerate(events):
        line = (
            f"{e.timestamp} {e.process_id} {e.process_name} "
            f"{e.event_type} {e.object_id} {e.object_data}"
        )
        lines.append(f"[{index}] {line}" if indexed else line)
    return "\n".join(lines)


class RemoteBackend(ReasonerBackend):
    """Client chat-completions : un prompt gabarit par étape, réponse JSON contrainte."""

    name = "remote"
    retries_internally = True

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        prompts: dict[str, Template] | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff: float = 1.0,
        max_in_flight: int = 4,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self.prompts = prompts or load_prompts()
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.session = session or requests.Session()
        self.headers = {"Content-Type": "application/json"}
        if api_key:
            self.headers["Authorization"] = f"Bearer {api_key}"
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _retrying(self) -> Retrying:
        return Retrying(
            stop=stop_after_attempt(self.max_attempts),
            wait=wait_exponential(multiplier=self.backoff, max=30),
            retry=retry_if_exception_type(ReasonerError),
            before_sleep=lambda state: logger.warning(
                f"Raisonneur distant : tentative {state.attempt_number} échouée "
                f"({state.outcome.exception()}), nouvel essai"
            ),
            reraise=True,
        )

    def _complete(self, prompt: str) -> dict:
        payload = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "response_format": {"type": "json_object"},
        }
        with self._slots:
            try:
                response = self.session.post(
                    self.endpoint, json=payload, headers=self.headers, timeout=self.timeout
                )
                response.raise_for_status()
                body = response.json()
            except (requests.RequestException, ValueError) as e:
                raise ReasonerError(f"échec de l'appel au raisonneur : {e}") from e
        try:
            content = body["choices"][0]["message"]["content"]
            return json.loads(content)
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise SchemaViolationError(f"réponse non JSON : {e}") from e

    def _ask(self, name: str, model: type[BaseModel], guard, **fields):
        prompt = self.prompts[name].safe_substitute(**fields)

        def attempt():
            raw = self._complete(prompt)
            try:
                reply = model.model_validate(raw)
            except ValidationError as e:
                raise SchemaViolationError(f"{name} : schéma invalide ({e.error_count()} erreurs)") from e
            guard(reply)
            return reply

        return self._retrying()(attempt)

    def check_known_behavior(self, logs: Sequence[LogEvent]) -> list[str]:
        known = {e.process_id for e in logs}

        def guard(reply: KnownBehaviorReply):
            unknown = set(reply.suspicious_processes) - known
            if unknown:
                raise SchemaViolationError(f"processus absents des logs : {sorted(unknown)}")

        reply = self._ask(
            "check_known_behavior", KnownBehaviorReply, guard, logs=format_events(logs)
        )
        return sorted(set(reply.suspicious_processes))

    def analyze_behavior(self, process_logs: Sequence[LogEvent]) -> str:
        process_id = process_logs[0].process_id if process_logs else ""
        reply = self._ask(
            "analyze_behavior",
            BehaviorReply,
            lambda reply: None,
            logs=format_events(process_logs),
            process_id=process_id,
        )
        return reply.deviation.strip()

    def analyze_chain(self, chain: Sequence[LogEvent]) -> ChainVerdict:
        known = chain_processes(chain)

        def guard(verdict: ChainVerdict):
            unknown = set(verdict.tagged_processes) - known
            if unknown:
                raise SchemaViolationError(f"processus marqués hors chaîne : {sorted(unknown)}")
            for indexes in verdict.kill_chain.values():
                if any(i < 0 or i >= len(chain) for i in indexes):
                    raise SchemaViolationError("index d'événement hors de la chaîne")

        return self._ask(
            "analyze_chain",
            ChainVerdict,
            guard,
            chain=format_events(chain, indexed=True),
            stages=", ".join(KILL_CHAIN_STAGES),
        )


def remote_backend(
    endpoint: str, model_name: str, prompts_dir=None, **options
) -> RemoteBackend:
    return RemoteBackend(endpoint, model_name, load_prompts(prompts_dir), **options)
