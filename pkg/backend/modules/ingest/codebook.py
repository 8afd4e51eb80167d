from typing import Iterable, Sequence

from modules.ingest.schemas import LogEvent

FIELDS = ("process_id", "event_type", "object_id")


class Codebook:
    """Correspondance bidirectionnelle catégorie ↔ entier, par champ."""

    def __init__(self):
        self.forward: dict[str, dict[str, int]] = {f: {} for f in FIELDS}
        self.reverse: dict[str, list[str]] = {f: [] for f in FIELDS}

    def code(self, field: str, value: str) -> int:
        mapping = self.forward[field]
        code = mapping.get(value)
        if code is None:
            # Attribution dense, dans l'ordre de première apparition
            code = len(self.reverse[field])
            mapping[value] = code
            self.reverse[field].append(value)
        return code

    def decode(self, triple: Sequence[int]) -> tuple[str, str, str]:
        return tuple(self.reverse[f][c] for f, c in zip(FIELDS, triple))

    def size(self, field: str) -> int:
        return len(self.reverse[field])

    def to_dict(self) -> dict:
        return {f: list(self.reverse[f]) for f in FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "Codebook":
        book = cls()
        for field in FIELDS:
            for value in data.get(field, []):
                book.code(field, value)
        return book

    def copy(self) -> "Codebook":
        return Codebook.from_dict(self.to_dict())


def encode(
    events: Iterable[LogEvent], codebook: Codebook
) -> tuple[list[tuple[int, int, int]], Codebook]:
    triples = [
        (
            codebook.code("process_id", e.process_id),
            codebook.code("event_type", e.event_type),
            codebook.code("object_id", e.object_id),
        )
        for e in events
    ]
    return triples, codebook
