from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_EVENT_TYPES = (
    "fork",
    "read",
    "write",
    "connect",
    "accept",
    "exec",
    "send",
    "recv",
)


# Un enregistrement d'audit : (p, n, e, o, d, t)
class LogEvent(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    process_id: str = Field(alias="pid", min_length=1)
    process_name: str = Field(alias="pname")
    event_type: str = Field(alias="event", min_length=1)
    object_id: str = Field(alias="oid", min_length=1)
    object_data: str = Field(alias="odata")
    timestamp: int = Field(alias="ts", gt=0)  # nanosecondes depuis l'epoch

    @field_validator("timestamp", mode="before")
    @classmethod
    def reject_non_integer_ts(cls, value):
        # Un booléen ou un flottant n'est pas un horodatage valide
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError("ts doit être un entier (ns)")
        return value

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.process_id, self.event_type, self.object_id)

    @property
    def as_tuple(self) -> tuple[str, str, str, int]:
        return (self.process_id, self.event_type, self.object_id, self.timestamp)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)


class ParseIssue(BaseModel):
    line_no: int
    reason: str


class Window(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int
    length: int = 30 * 60 * 10**9
    step: int = 15 * 60 * 10**9
    index: int = 0

    @model_validator(mode="after")
    def check_step(self):
        if self.step <= 0 or self.length <= 0:
            raise ValueError("length et step doivent être positifs")
        if self.step > self.length:
            raise ValueError("step doit être ≤ length")
        return self

    @property
    def end(self) -> int:
        return self.start + self.length

    def contains(self, timestamp: int) -> bool:
        return self.start <= timestamp < self.end
