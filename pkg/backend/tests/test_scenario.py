import pytest

from modules.errors import ScenarioError
from modules.ingest.parser import parse_file
from modules.pipeline.scenario import (
    BURST_OFFSET_MINUTES,
    ScenarioSpec,
    generate_scenario,
    load_scenario_spec,
    load_truth,
    write_scenario,
)
from tests.conftest import MINUTE, THEIA_SPEC


@pytest.fixture(scope="module")
def theia_scenario():
    return generate_scenario(THEIA_SPEC, seed=3)


def test_two_disjoint_attack_intervals(theia_scenario):
    truth = theia_scenario.truth
    assert len(truth.windows) == 2
    (a_start, a_end), (b_start, b_end) = truth.windows
    assert a_end < b_start
    assert sorted(truth.attacks) == ["theia_day1#0", "theia_day3#1"]
    assert len(truth.events) == 11
    assert a_start == THEIA_SPEC.test_start + (480 + BURST_OFFSET_MINUTES) * MINUTE
    assert a_end - a_start == 5 * MINUTE


def test_attack_processes_shared_across_bursts(theia_scenario):
    day1 = {t[0] for t in theia_scenario.truth.attacks["theia_day1#0"]}
    day3 = {t[0] for t in theia_scenario.truth.attacks["theia_day3#1"]}
    # Le processus « profile » relie les deux rafales
    assert len(day1 & day3) == 1


def test_streams_are_split_and_sorted(theia_scenario):
    train, test = theia_scenario.train, theia_scenario.test
    assert train[-1].timestamp < THEIA_SPEC.test_start <= test[0].timestamp
    assert [e.timestamp for e in test] == sorted(e.timestamp for e in test)
    labeled = {tuple(t) for t in theia_scenario.truth.events}
    assert labeled <= {e.as_tuple for e in test}
    assert not labeled & {e.as_tuple for e in train}


def test_benign_only_has_empty_truth():
    scenario = generate_scenario(ScenarioSpec(train_hours=2, test_hours=2, events_per_step=20), seed=0)
    assert scenario.truth.events == []
    assert scenario.truth.windows == []
    assert all(e.process_id[0] in "BC" for e in scenario.test)


def test_generation_is_seeded():
    spec = ScenarioSpec(train_hours=1, test_hours=2, events_per_step=20)
    assert generate_scenario(spec, seed=4).test == generate_scenario(spec, seed=4).test
    assert generate_scenario(spec, seed=4).test != generate_scenario(spec, seed=5).test


@pytest.mark.parametrize(
    "attacks",
    [
        [{"template": "stuxnet", "offset_minutes": 10}],
        [{"template": "theia_day1", "offset_minutes": 100}],
        [{"template": "theia_day1", "offset_minutes": -5}],
    ],
)
def test_invalid_spec(attacks):
    with pytest.raises(ValueError):
        ScenarioSpec(test_hours=1, attacks=attacks)


def test_spec_file_errors(tmp_path):
    path = tmp_path / "spec.toml"
    path.write_text('test_hours = 1\n[[attacks]]\ntemplate = "theia_day1"\noffset_minutes = 100\n')
    with pytest.raises(ScenarioError):
        load_scenario_spec(path)
    with pytest.raises(ScenarioError):
        load_scenario_spec(tmp_path / "absent.toml")


def test_write_and_reload(tmp_path, theia_scenario):
    paths = write_scenario(theia_scenario, tmp_path)
    assert parse_file(paths["test"]).events == theia_scenario.test
    assert load_truth(paths["truth"]) == theia_scenario.truth
    with pytest.raises(ScenarioError):
        load_truth(tmp_path / "absent.json")
