import json
from typing import IO, Iterable

from pydantic import ValidationError

from modules.errors import ParseError
from modules.ingest.schemas import DEFAULT_EVENT_TYPES, LogEvent, ParseIssue
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


class ParseReport:
    """Événements lus et erreurs rencontrées, ligne par ligne."""

    def __init__(self):
        self.events: list[LogEvent] = []
        self.issues: list[ParseIssue] = []

    def write_issues(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for issue in self.issues:
                handle.write(issue.model_dump_json() + "\n")


def _decode(raw) -> str:
    return raw.decode("utf-8") if isinstance(raw, bytes) else raw


def parse_jsonl(
    stream: IO | Iterable,
    event_types: Iterable[str] = DEFAULT_EVENT_TYPES,
    strict: bool = False,
) -> ParseReport:
    """Lit un flux JSONL (pid, pname, event, oid, odata, ts) en LogEvent.

    En mode strict la première ligne invalide lève ParseError ; sinon elle
    est consignée dans le rapport et la lecture continue.
    """
    vocabulary = set(event_types)
    report = ParseReport()

    for line_no, raw in enumerate(stream, start=1):
        line = _decode(raw).strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("l'enregistrement n'est pas un objet JSON")
            event = LogEvent.model_validate(record)
            if event.event_type not in vocabulary:
                raise ValueError(f"type d'événement inconnu '{event.event_type}'")
        except (ValueError, ValidationError) as e:
            reason = _reason(e)
            if strict:
                logger.error(f"Ligne {line_no} invalide : {reason}")
                raise ParseError(line_no, reason) from e
            logger.warning(f"Ligne {line_no} ignorée : {reason}")
            report.issues.append(ParseIssue(line_no=line_no, reason=reason))
            continue
        report.events.append(event)

    logger.debug(
        f"{len(report.events)} événements lus, {len(report.issues)} erreurs"
    )
    return report


def _reason(error: Exception) -> str:
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        return f"{location}: {first['msg']}"
    return str(error)


def parse_file(path, event_types=DEFAULT_EVENT_TYPES, strict=False) -> ParseReport:
    with open(path, "rb") as handle:
        return parse_jsonl(handle, event_types=event_types, strict=strict)


def write_jsonl(events: Iterable[LogEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(event.to_json() + "\n")
