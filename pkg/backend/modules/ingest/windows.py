from bisect import bisect_left
from typing import Iterable, Sequence

from modules.ingest.schemas import LogEvent, Window

MINUTE_NS = 60 * 10**9


def sort_events(events: Iterable[LogEvent]) -> list[LogEvent]:
    # Tri stable : l'ordre d'origine départage les horodatages égaux
    return sorted(events, key=lambda e: e.timestamp)


def dedup(events: Sequence[LogEvent]) -> list[LogEvent]:
    """Garde l'instance la plus ancienne de chaque triplet (p, e, o)."""
    earliest: dict[tuple, int] = {}
    for position, event in enumerate(events):
        kept = earliest.get(event.triple)
        if kept is None or event.timestamp < events[kept].timestamp:
            earliest[event.triple] = position
    survivors = sorted(earliest.values())
    return [events[i] for i in survivors]


def window_slice(events: Sequence[LogEvent], window: Window) -> list[LogEvent]:
    """Événements avec start ≤ t < start + length (entrée triée)."""
    stamps = [e.timestamp for e in events]
    lo = bisect_left(stamps, window.start)
    hi = bisect_left(stamps, window.end)
    return list(events[lo:hi])


def enumerate_windows(
    first_ts: int,
    last_ts: int,
    length: int = 30 * MINUTE_NS,
    step: int = 15 * MINUTE_NS,
    origin: int | None = None,
) -> list[Window]:
    """Fenêtres glissantes couvrant [origin, last_ts].

    Une fenêtre n'est ajoutée que si la précédente ne couvre pas déjà
    last_ts.
    """
    start = first_ts if origin is None else origin
    windows = [Window(start=start, length=length, step=step, index=0)]
    while windows[-1].end <= last_ts:
        start += step
        windows.append(
            Window(start=start, length=length, step=step, index=len(windows))
        )
    return windows
