import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modules.errors import ParseError
from modules.ingest.codebook import Codebook, encode
from modules.ingest.parser import parse_file, parse_jsonl, write_jsonl
from modules.ingest.schemas import LogEvent, Window
from modules.ingest.windows import MINUTE_NS, dedup, enumerate_windows, sort_events, window_slice
from tests.conftest import ev

LINE = '{"pid":"P1","pname":"firefox","event":"recv","oid":"O1","odata":"61.130.69.232:80","ts":1}'


def test_parse_single_line():
    report = parse_jsonl(io.StringIO(LINE + "\n"))
    assert report.issues == []
    assert report.events == [ev("P1", "firefox", "recv", "O1", "61.130.69.232:80", 1)]


def test_parse_empty_input():
    report = parse_jsonl(io.StringIO(""))
    assert report.events == []
    assert report.issues == []


def test_missing_ts_reports_line_and_keeps_others():
    record = json.loads(LINE)
    del record["ts"]
    stream = io.StringIO("\n".join([LINE, json.dumps(record), LINE.replace('"ts":1', '"ts":2')]))
    report = parse_jsonl(stream)
    assert [e.timestamp for e in report.events] == [1, 2]
    assert len(report.issues) == 1
    assert report.issues[0].line_no == 2
    assert "ts" in report.issues[0].reason


def test_strict_mode_raises_with_line_number():
    stream = io.StringIO(LINE + "\nnot json\n")
    with pytest.raises(ParseError) as excinfo:
        parse_jsonl(stream, strict=True)
    assert excinfo.value.line_no == 2


@pytest.mark.parametrize("ts", ["1", 1.5, True, 0, -3])
def test_invalid_timestamps_rejected(ts):
    record = json.loads(LINE) | {"ts": ts}
    report = parse_jsonl([json.dumps(record)])
    assert report.events == []
    assert len(report.issues) == 1


def test_unknown_event_type_is_an_issue():
    report = parse_jsonl([LINE.replace('"recv"', '"mmap"')])
    assert report.events == []
    assert "mmap" in report.issues[0].reason


def test_write_then_parse_file(tmp_path):
    events = [ev("P1", "bash", "read", "F1", "/etc/hosts", 5), ev("P2", "sshd", "send", "S1", "10.0.0.1:22", 9)]
    path = tmp_path / "logs.jsonl"
    write_jsonl(events, path)
    assert parse_file(path).events == events
    # Clés canoniques du format d'échange
    assert set(json.loads(path.read_text().splitlines()[0])) == {"pid", "pname", "event", "oid", "odata", "ts"}


def test_codebook_dense_first_seen():
    book = Codebook()
    triples, _ = encode(
        [
            ev("P1", "firefox", "recv", "O1", "", 1),
            ev("P1", "firefox", "recv", "O1", "", 2),
            ev("P2", "clean", "read", "O1", "", 3),
        ],
        book,
    )
    assert triples == [(0, 0, 0), (0, 0, 0), (1, 1, 0)]
    assert book.decode((1, 1, 0)) == ("P2", "read", "O1")
    assert Codebook.from_dict(book.to_dict()).to_dict() == book.to_dict()


names = st.text(alphabet="abcdefgh", min_size=1, max_size=3)


@given(st.lists(st.tuples(names, st.sampled_from(["read", "write", "fork"]), names), max_size=40))
def test_codebook_decode_inverts_encode(triples):
    events = [ev(p, "x", e, o, "", i + 1) for i, (p, e, o) in enumerate(triples)]
    codes, book = encode(events, Codebook())
    assert [book.decode(c) for c in codes] == [tuple(t) for t in triples]
    for field in ("process_id", "event_type", "object_id"):
        assert sorted(book.forward[field].values()) == list(range(book.size(field)))


def test_dedup_keeps_earliest():
    first = ev("P1", "bash", "read", "O1", "", 1)
    assert dedup([first, ev("P1", "bash", "read", "O1", "", 9)]) == [first]


def test_dedup_distinct_event_types_kept():
    events = [ev("P1", "bash", "read", "O1", "", 1), ev("P1", "bash", "write", "O1", "", 2)]
    assert dedup(events) == events


def test_dedup_thousand_copies():
    events = [ev("P1", "bash", "read", "O1", "", t) for t in range(1, 1001)]
    assert len(dedup(events)) == 1


@given(
    st.lists(
        st.tuples(st.sampled_from(["P1", "P2"]), st.sampled_from(["read", "write"]), st.integers(1, 50)),
        max_size=60,
    )
)
def test_dedup_idempotent_and_order_preserving(rows):
    events = sort_events(ev(p, "x", e, "O1", "", t) for p, e, t in rows)
    once = dedup(events)
    assert dedup(once) == once
    assert len(once) == len({e.triple for e in events})
    positions = [events.index(e) for e in once]
    assert positions == sorted(positions)


def test_window_half_open_interval():
    window = Window(start=0)
    events = [
        ev("P1", "bash", "read", "O1", "", 30 * MINUTE_NS - 1_000_000),
        ev("P1", "bash", "read", "O2", "", 30 * MINUTE_NS),
    ]
    assert [e.object_id for e in window_slice(events, window)] == ["O1"]
    following = Window(start=15 * MINUTE_NS, index=1)
    assert [e.object_id for e in window_slice(events, following)] == ["O1", "O2"]


def test_seventy_five_minutes_gives_four_windows():
    windows = enumerate_windows(1, 75 * MINUTE_NS - 1, origin=0)
    assert [w.start for w in windows] == [0, 15 * MINUTE_NS, 30 * MINUTE_NS, 45 * MINUTE_NS]
    assert [w.index for w in windows] == [0, 1, 2, 3]


def test_window_step_cannot_exceed_length():
    with pytest.raises(ValueError):
        Window(start=0, length=10, step=20)


def test_log_event_is_frozen():
    event = ev("P1", "bash", "read", "O1", "", 1)
    with pytest.raises(Exception):
        event.timestamp = 2
    assert LogEvent.model_validate_json(event.to_json()) == event
