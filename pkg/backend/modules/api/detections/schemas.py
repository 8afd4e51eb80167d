from pydantic import BaseModel


class AlertResponse(BaseModel):
    id: str
    window: int
    set_id: str
    confidence: float
    kind: str
    description: str
    processes: list[str]
    events: list[dict]
    kill_chain: dict[str, list[int]]
    iocs: list[str]

    class Config:
        from_attributes = True


class AttackSetResponse(BaseModel):
    id: str
    queue: str
    score: float
    created_window: int
    updated_window: int
    processes: list[str]
    history: list[tuple[int, float]]
    events: list[dict]
    summary: str

    class Config:
        from_attributes = True


# Entrée de file : score et âge en fenêtres
class QueueEntry(BaseModel):
    id: str
    score: float
    age: int


class QueuesResponse(BaseModel):
    primary: list[QueueEntry]
    secondary: list[QueueEntry]
    retired: list[QueueEntry]
