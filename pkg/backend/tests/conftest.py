import os

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

os.environ["RUN_ENV"] = "test"

from modules.ingest.schemas import LogEvent  # noqa: E402
from modules.pipeline.config import PipelineConfig  # noqa: E402
from modules.pipeline.engine import DetectionEngine, train  # noqa: E402
from modules.pipeline.scenario import ScenarioSpec, generate_scenario  # noqa: E402
from modules.reasoner.stub import stub_backend  # noqa: E402
from tests.setup_db import reset_test_db  # noqa: E402


MINUTE = 60 * 10**9


def ev(pid, pname, event, oid, odata, ts):
    return LogEvent(
        process_id=pid,
        process_name=pname,
        event_type=event,
        object_id=oid,
        object_data=odata,
        timestamp=ts,
    )


DAY = 24 * 60 * MINUTE


def theia_day1(t0=MINUTE):
    return [
        ev("A0", "firefox", "recv", "X0", "61.130.69.232:80", t0),
        ev("A0", "firefox", "write", "X1", "/home/admin/.cache/clean", t0 + MINUTE),
        ev("A0", "firefox", "fork", "A1", "clean", t0 + 2 * MINUTE),
        ev("A1", "clean", "read", "X1", "/home/admin/.cache/clean", t0 + 3 * MINUTE),
        ev("A1", "clean", "fork", "A2", "profile", t0 + 4 * MINUTE),
        ev("A2", "profile", "connect", "X2", "141.43.176.203:443", t0 + 5 * MINUTE),
    ]


def theia_day3(t0=MINUTE + 2 * DAY):
    return [
        ev("A2", "profile", "recv", "X3", "141.43.176.203:8080", t0),
        ev("A2", "profile", "write", "X4", "/var/log/mail", t0 + MINUTE),
        ev("A2", "profile", "fork", "A3", "mail", t0 + 2 * MINUTE),
        ev("A3", "mail", "read", "X4", "/var/log/mail", t0 + 3 * MINUTE),
        ev("A3", "mail", "connect", "X5", "146.153.68.151:80", t0 + 4 * MINUTE),
    ]


def full_chain(t0=MINUTE):
    return [
        ev("A0", "thunderbird", "recv", "X0", "198.51.100.23:993", t0),
        ev("A0", "thunderbird", "fork", "A1", "gtcache", t0 + MINUTE),
        ev("A1", "gtcache", "write", "X1", "/etc/cron.d/gtcache", t0 + 2 * MINUTE),
        ev("A1", "gtcache", "connect", "X2", "203.0.113.9:443", t0 + 3 * MINUTE),
        ev("A1", "gtcache", "send", "X3", "203.0.113.77:8443", t0 + 4 * MINUTE),
    ]


@pytest.fixture(scope="session")
def test_engine():
    engine = create_engine(
        "sqlite://",
        connect_args={"check_same_thread": False},
        poolclass=StaticPool,
    )
    reset_test_db(engine)
    yield engine
    engine.dispose()


@pytest.fixture(scope="function")
def db_session(test_engine):
    TestingSessionLocal = sessionmaker(bind=test_engine)
    db = TestingSessionLocal()
    try:
        yield db
    finally:
        db.rollback()
        db.close()


@pytest.fixture(scope="session")
def stub():
    return stub_backend()


@pytest.fixture
def intrusion_events():
    """Graphe de provenance d'une intrusion type navigateur → charge → C2."""
    return [
        ev("S1", "firefox", "read", "O3", "/usr/lib/libxul.so", 5),
        ev("S1", "firefox", "write", "O10", "/home/admin/.mozilla/prefs.js", 1),
        ev("S1", "firefox", "recv", "O1", "61.130.69.232:80", 10),
        ev("S1", "firefox", "write", "O2", "/home/admin/.cache/clean", 20),
        ev("S1", "firefox", "fork", "S2", "clean", 30),
        ev("S2", "clean", "read", "O2", "/home/admin/.cache/clean", 40),
        ev("S2", "clean", "read", "O4", "/etc/hosts", 45),
        ev("S2", "clean", "write", "O6", "/tmp/.profile.tmp", 50),
        ev("S2", "clean", "recv", "O5", "10.0.0.5:53", 55),
        ev("S2", "clean", "connect", "O8", "141.43.176.203:443", 60),
        ev("S2", "clean", "fork", "S3", "profile", 70),
        ev("S3", "profile", "read", "O7", "/etc/passwd", 75),
        ev("S3", "profile", "write", "O9", "/var/log/profile.dat", 80),
    ]


def run_scenario(spec: ScenarioSpec, seed: int = 0, config: PipelineConfig | None = None):
    config = config or PipelineConfig()
    scenario = generate_scenario(spec, seed)
    model, codebook = train(config, scenario.train)
    engine = DetectionEngine(config, model, codebook, stub_backend())
    return scenario, engine.run(scenario.test)


THEIA_SPEC = ScenarioSpec(
    name="theia_like",
    train_hours=12,
    test_hours=60,
    events_per_step=60,
    attacks=[
        {"template": "theia_day1", "offset_minutes": 480},
        {"template": "theia_day3", "offset_minutes": 3360},
    ],
)


CADETS_SPEC = ScenarioSpec(
    name="cadets_like",
    train_hours=12,
    test_hours=12,
    events_per_step=60,
    attacks=[{"template": "cadets_chain", "offset_minutes": 360}],
)


@pytest.fixture(scope="session")
def theia_run():
    return run_scenario(THEIA_SPEC, seed=3)


@pytest.fixture(scope="session")
def cadets_run():
    return run_scenario(CADETS_SPEC, seed=5)
