"""Générateur de scénarios synthétiques : charge bénigne + chaînes d'attaque."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import toml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from modules.errors import ScenarioError
from modules.ingest.parser import write_jsonl
from modules.ingest.schemas import LogEvent
from modules.ingest.windows import MINUTE_NS, sort_events
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

# 2018-04-06 11:00:00 UTC
DEFAULT_START_TS = 1_523_012_400 * 10**9
SECOND_NS = 10**9
BURST_OFFSET_MINUTES = 2

BENIGN_NAMES = (
    "bash", "sshd", "cron", "python3", "postgres", "systemd", "rsyslogd",
    "dbus-daemon", "Xorg", "gnome-shell", "vim", "make", "gcc", "git", "less",
    "top", "sort", "grep", "awk", "ssh-agent",
)

# Étape : (clé acteur, nom acteur, événement, clé objet, donnée objet).
# Une clé objet préfixée par « @ » désigne un processus (cible de fork).
TEMPLATES: dict[str, dict] = {
    "theia_day1": {
        "steps": [
            ("firefox", "firefox", "recv", "theia_dropper", "61.130.69.232:80"),
            ("firefox", "firefox", "write", "theia_payload", "/home/admin/.cache/clean"),
            ("firefox", "firefox", "fork", "@clean", "clean"),
            ("clean", "clean", "read", "theia_payload", "/home/admin/.cache/clean"),
            ("clean", "clean", "fork", "@profile", "profile"),
            ("profile", "profile", "connect", "theia_c2", "141.43.176.203:443"),
        ],
    },
    "theia_day3": {
        "steps": [
            ("profile", "profile", "recv", "theia_stage2", "141.43.176.203:8080"),
            ("profile", "profile", "write", "theia_mail", "/var/log/mail"),
            ("profile", "profile", "fork", "@mail", "mail"),
            ("mail", "mail", "read", "theia_mail", "/var/log/mail"),
            ("mail", "mail", "connect", "theia_c2_mail", "146.153.68.151:80"),
        ],
    },
    "cadets_chain": {
        "steps": [
            ("imapd", "imapd", "recv", "cadets_lure", "81.49.200.166:80"),
            ("imapd", "imapd", "fork", "@wget", "wget"),
            ("wget", "wget", "write", "cadets_links", "/usr/local/bin/links"),
            ("wget", "wget", "fork", "@links", "links"),
        ],
        # Activité bénigne ultérieure du même processus (minutes après le début)
        "followups": [
            (30, ("imapd", "imapd", "read", "mbox_admin", "/var/mail/admin")),
            (45, ("imapd", "imapd", "read", "mbox_ops", "/var/mail/ops")),
            (60, ("imapd", "imapd", "read", "mbox_dev", "/var/mail/dev")),
            (75, ("imapd", "imapd", "read", "mbox_root", "/var/mail/root")),
        ],
    },
    "full_chain": {
        "steps": [
            ("thunderbird", "thunderbird", "recv", "full_mail", "198.51.100.23:993"),
            ("thunderbird", "thunderbird", "fork", "@gtcache", "gtcache"),
            ("gtcache", "gtcache", "write", "full_cron", "/etc/cron.d/gtcache"),
            ("gtcache", "gtcache", "connect", "full_c2", "203.0.113.9:443"),
            ("gtcache", "gtcache", "send", "full_exfil", "203.0.113.77:8443"),
        ],
    },
}


class AttackSpec(BaseModel):
    template: str
    offset_minutes: int = Field(ge=0)

    @field_validator("template")
    @classmethod
    def known_template(cls, value):
        if value not in TEMPLATES:
            raise ValueError(f"gabarit d'attaque inconnu : {value}")
        return value


class ScenarioSpec(BaseModel):
    name: str = "scenario"
    start_ts: int = DEFAULT_START_TS
    train_hours: int = Field(24, gt=0)
    test_hours: int = Field(72, gt=0)
    step_minutes: int = Field(15, gt=0)
    benign_processes: int = Field(20, ge=1, le=len(BENIGN_NAMES))
    objects_per_process: int = Field(12, ge=1)
    events_per_step: int = Field(250, ge=1)
    churn_per_step: int = Field(3, ge=0)
    attacks: list[AttackSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def attacks_within_test(self):
        for attack in self.attacks:
            if attack.offset_minutes + 90 > self.test_hours * 60:
                raise ValueError(
                    f"l'attaque {attack.template} déborde de la période de test"
                )
        return self

    @property
    def test_start(self) -> int:
        return self.start_ts + self.train_hours * 60 * MINUTE_NS


class GroundTruth(BaseModel):
    """Événements d'attaque étiquetés et intervalles d'attaque [début, fin]."""

    events: list[tuple[str, str, str, int]] = Field(default_factory=list)
    windows: list[tuple[int, int]] = Field(default_factory=list)
    attacks: dict[str, list[tuple[str, str, str, int]]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def labels_inside_windows(self):
        for event in self.events:
            if not any(start <= event[3] <= end for start, end in self.windows):
                raise ValueError(f"événement étiqueté hors de tout intervalle : {event}")
        return self

    def to_json(self) -> str:
        return self.model_dump_json(indent=1)


@dataclass
class Scenario:
    train: list[LogEvent] = field(default_factory=list)
    test: list[LogEvent] = field(default_factory=list)
    truth: GroundTruth = field(default_factory=GroundTruth)


def load_scenario_spec(path) -> ScenarioSpec:
    try:
        return ScenarioSpec.model_validate(toml.load(path))
    except FileNotFoundError:
        raise ScenarioError(f"spécification de scénario introuvable : {path}")
    except (toml.TomlDecodeError, ValidationError) as e:
        raise ScenarioError(f"spécification de scénario invalide ({path}) : {e}") from e


class _BenignWorkload:
    """Processus longs à affinité d'objets + processus éphémères (churn)."""

    def __init__(self, spec: ScenarioSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.churn_count = 0
        self.processes = [(f"B{i}", BENIGN_NAMES[i]) for i in range(spec.benign_processes)]
        self.affinity = []
        for i in range(spec.benign_processes):
            objects = []
            for j in range(spec.objects_per_process):
                if j % 4 == 3:
                    address = f"10.0.{i}.{j + 1}:{5432 + j}"
                    objects.append((f"S{i}_{j}", address, ("connect", "send", "recv")))
                else:
                    path = f"/home/user/{BENIGN_NAMES[i]}/data_{j}.db"
                    objects.append((f"F{i}_{j}", path, ("read", "write")))
            self.affinity.append(objects)

    def event(self, i: int, ts: int) -> LogEvent:
        pid, pname = self.processes[i]
        oid, odata, kinds = self.affinity[i][self.rng.integers(len(self.affinity[i]))]
        event_type = kinds[self.rng.integers(len(kinds))]
        return LogEvent(
            process_id=pid, process_name=pname, event_type=event_type,
            object_id=oid, object_data=odata, timestamp=ts,
        )

    def step(self, start: int, step_ns: int) -> list[LogEvent]:
        events = []
        offsets = np.sort(self.rng.integers(0, step_ns, self.spec.events_per_step))
        for offset in offsets:
            events.append(self.event(int(self.rng.integers(len(self.processes))), start + int(offset)))
        for _ in range(self.spec.churn_per_step):
            n = self.churn_count
            self.churn_count += 1
            parent, parent_name = self.processes[int(self.rng.integers(len(self.processes)))]
            ts = start + int(self.rng.integers(0, step_ns - 3 * SECOND_NS))
            child, tmp = f"C{n}", (f"T{n}", f"/tmp/job_{n}.tmp")
            events += [
                LogEvent(process_id=parent, process_name=parent_name, event_type="fork",
                         object_id=child, object_data="job", timestamp=ts),
                LogEvent(process_id=child, process_name="job", event_type="write",
                         object_id=tmp[0], object_data=tmp[1], timestamp=ts + SECOND_NS),
                LogEvent(process_id=child, process_name="job", event_type="read",
                         object_id=tmp[0], object_data=tmp[1], timestamp=ts + 2 * SECOND_NS),
            ]
        return events

    def span(self, start: int, end: int, step_ns: int) -> list[LogEvent]:
        events = [self.event(0, start)]
        for slot in range(start, end, step_ns):
            events += self.step(slot, step_ns)
        return [e for e in events if start <= e.timestamp < end]


class _AttackIds:
    """Identifiants frais, partagés entre gabarits d'un même scénario."""

    def __init__(self):
        self.ids: dict[str, str] = {}

    def resolve(self, key: str, prefix: str) -> str:
        if key not in self.ids:
            self.ids[key] = f"{prefix}{len(self.ids)}"
        return self.ids[key]

    def event(self, step, ts: int) -> LogEvent:
        actor, actor_name, event_type, obj, obj_data = step
        object_id = (
            self.resolve(obj[1:], "A") if obj.startswith("@") else self.resolve(f"obj:{obj}", "X")
        )
        return LogEvent(
            process_id=self.resolve(actor, "A"), process_name=actor_name,
            event_type=event_type, object_id=object_id, object_data=obj_data, timestamp=ts,
        )


def generate_scenario(spec: ScenarioSpec, seed: int = 0) -> Scenario:
    """Flux d'entraînement bénin, flux de test avec attaques, vérité terrain."""
    rng = np.random.default_rng(seed)
    step_ns = spec.step_minutes * MINUTE_NS
    workload = _BenignWorkload(spec, rng)
    train = workload.span(spec.start_ts, spec.test_start, step_ns)
    test_end = spec.test_start + spec.test_hours * 60 * MINUTE_NS
    test = workload.span(spec.test_start, test_end, step_ns)

    ids = _AttackIds()
    truth = GroundTruth()
    for number, attack in enumerate(sorted(spec.attacks, key=lambda a: a.offset_minutes)):
        template = TEMPLATES[attack.template]
        boundary = spec.test_start + (attack.offset_minutes // spec.step_minutes) * step_ns
        burst_start = boundary + BURST_OFFSET_MINUTES * MINUTE_NS
        labeled = []
        for position, step in enumerate(template["steps"]):
            event = ids.event(step, burst_start + position * MINUTE_NS)
            test.append(event)
            labeled.append(event.as_tuple)
        for minutes, step in template.get("followups", []):
            test.append(ids.event(step, burst_start + minutes * MINUTE_NS))
        truth.events.extend(labeled)
        truth.windows.append((labeled[0][3], labeled[-1][3]))
        truth.attacks[f"{attack.template}#{number}"] = labeled

    scenario = Scenario(train=sort_events(train), test=sort_events(test), truth=truth)
    logger.info(
        f"Scénario {spec.name} : {len(scenario.train)} événements d'entraînement, "
        f"{len(scenario.test)} de test dont {len(truth.events)} d'attaque"
    )
    return scenario


def write_scenario(scenario: Scenario, output_dir) -> dict[str, Path]:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "train": output_dir / "train.jsonl",
        "test": output_dir / "test.jsonl",
        "truth": output_dir / "truth.json",
    }
    write_jsonl(scenario.train, paths["train"])
    write_jsonl(scenario.test, paths["test"])
    paths["truth"].write_text(scenario.truth.to_json() + "\n", encoding="utf-8")
    return paths


def load_truth(path) -> GroundTruth:
    try:
        return GroundTruth.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, ValueError, ValidationError) as e:
        raise ScenarioError(f"vérité terrain illisible ({path}) : {e}") from e
