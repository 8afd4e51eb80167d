import os
import sys
from pathlib import Path

from loguru import logger

BASE_DIR = Path(__file__).resolve().parent.parent

LOG_FORMAT = (
    "<cyan>{time:YYYY-MM-DD HH:mm:ss}</cyan> | "
    "<blue>{name}</blue> | "
    "<level>{level}</level> | "
    "<magenta>{message}</magenta>"
)

# Les alertes émises sont aussi tracées à part, une ligne par alerte
ALERT_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {extra[alert_id]} | {message}"

_configured = False


def _only(level: str):
    return lambda record: record["level"].name == level


def configure_logger():
    """Logger partagé : console + fichiers app, error, debug et alerts."""
    global _configured
    if _configured:
        return logger

    logger.remove()
    log_dir = Path(os.getenv("LOG_DIR") or BASE_DIR / "logs")
    log_dir.mkdir(parents=True, exist_ok=True)

    logger.add(sys.stderr, level=os.getenv("LOG_LEVEL", "DEBUG"), format=LOG_FORMAT)

    sinks = [
        ("app.log", {"level": "INFO", "rotation": "1 week", "retention": "1 month"}),
        ("error.log", {"level": "ERROR", "filter": _only("ERROR")}),
        ("debug.log", {"level": "DEBUG", "filter": _only("DEBUG")}),
    ]
    for filename, options in sinks:
        options.setdefault("rotation", "500 KB")
        options.setdefault("retention", "10 days")
        logger.add(log_dir / filename, format=LOG_FORMAT, **options)

    logger.add(
        log_dir / "alerts.log",
        level="INFO",
        filter=lambda record: "alert_id" in record["extra"],
        rotation="1 week",
        retention="3 months",
        format=ALERT_FORMAT,
    )

    _configured = True
    return logger
