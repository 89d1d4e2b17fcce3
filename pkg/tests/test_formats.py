import json
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadnet.errors import (
    DimensionMismatch,
    MalformedLine,
    ManifestError,
    MissingSpeakerLabel,
    ZeroVector,
)
from dyadnet.formats import (
    atomic_write_text,
    dump_manifest,
    load_embeddings,
    load_manifest,
    make_table,
    parse_rttm,
    read_manifest,
    write_embeddings,
    write_rttm,
)
from conftest import timelines
from oracles import load_fixture, malformed_fixtures


def test_single_speaker_line():
    (t,) = parse_rttm("SPEAKER rec1 1 5.00 2.50 <NA> <NA> spk1 <NA> <NA>\n").values()
    s = t.segments[0]
    assert (t.recording_id, s.onset, s.duration, s.speaker) == ("rec1", 5.0, 2.5, "spk1")
    assert s.segment_id == "rec1-00000"


def test_empty_and_non_speaker_lines():
    assert parse_rttm("") == {}
    text = ";; comment\n\nSPKR-INFO rec1 1 <NA> <NA> <NA> unknown spk1 <NA> <NA>\n"
    assert parse_rttm(text) == {}


def test_malformed_line_reports_line_number():
    text = "SPEAKER rec1 1 1 1 <NA> <NA> a <NA> <NA>\nSPEAKER rec1 1 abc 2.5 <NA> <NA> a <NA> <NA>\n"
    with pytest.raises(MalformedLine) as info:
        parse_rttm(text)
    assert info.value.line_no == 2


def test_na_speaker_is_unlabeled_and_cannot_be_written():
    t = parse_rttm("SPEAKER r 1 0 1 <NA> <NA> <NA> <NA> <NA>\n")["r"]
    assert t.segments[0].speaker is None
    with pytest.raises(MissingSpeakerLabel):
        write_rttm(t for t in [t])


def test_write_empty():
    assert write_rttm({}) == ""


def test_groups_by_file_and_uses_known_durations():
    text = "SPEAKER a 1 0 1 <NA> <NA> x <NA> <NA>\nSPEAKER b 1 2 1 <NA> <NA> y <NA> <NA>\n"
    out = parse_rttm(text, durations={"a": 600})
    assert out["a"].total_duration == 600
    assert out["b"].total_duration == 3


@given(timelines())
def test_rttm_round_trip_is_byte_identical(t):
    if not t.segments:
        return
    text = write_rttm([t])
    parsed = parse_rttm(text)[t.recording_id]
    assert write_rttm([parsed]) == text
    assert parsed.segments == t.segments


@given(timelines(), st.randoms())
def test_parse_ignores_line_order(t, rnd):
    if not t.segments:
        return
    lines = write_rttm([t]).splitlines(keepends=True)
    rnd.shuffle(lines)
    assert parse_rttm("".join(lines)) == parse_rttm(write_rttm([t]))


def test_embeddings_basic():
    table = load_embeddings("s1,1.0,0.0\ns2,0.0,1.0")
    assert table.dim == 2 and len(table) == 2
    assert np.array_equal(table["s2"], [0.0, 1.0])


def test_embeddings_round_trip(rng):
    table = make_table({f"id{i}": rng.standard_normal(7) for i in range(20)})
    back = load_embeddings(write_embeddings(table))
    assert back.ids == table.ids
    for sid in table.ids:
        assert np.array_equal(back[sid], table[sid])


def test_make_table_validation():
    with pytest.raises(DimensionMismatch):
        make_table({"a": [1, 0], "b": [1, 0, 0]})
    with pytest.raises(ZeroVector):
        make_table({"a": [0.0, 0.0]})


@pytest.mark.parametrize("path, err", malformed_fixtures(), ids=lambda v: getattr(v, "name", ""))
def test_malformed_fixtures_are_rejected(path, err):
    with pytest.raises(err):
        load_fixture(path)


def _manifest_doc():
    return {
        "recordings": [
            {"recording_id": "r1", "rttm": "rttm/r1.rttm", "embeddings": "emb/r1.emb",
             "split": "dev", "annotated": True, "duration": 1200},
            {"recording_id": "r2", "rttm": "rttm/r2.rttm", "embeddings": "emb/r2.emb"},
        ],
        "participants": [
            {"participant_id": "p1", "recording_ids": ["r1", "r2"], "severity_score": 5,
             "item_scores": [1, 1, 1, 1, 1, 0, 0, 0, 0], "group": "depression"},
            {"participant_id": "p2", "recording_ids": []},
        ],
    }


def test_manifest_accepts_valid_and_resolves_paths(tmp_path):
    m = load_manifest(json.dumps(_manifest_doc()), base_dir=tmp_path)
    r1 = m.recording("r1")
    assert r1.rttm == tmp_path / "rttm/r1.rttm"
    assert (r1.split, r1.annotated, r1.duration) == ("dev", True, 1200.0)
    assert m.recording("r2").split is None
    assert m.participants[0].item_scores == (1, 1, 1, 1, 1, 0, 0, 0, 0)
    assert m.participants[1].severity_score is None
    assert [r.recording_id for r in m.split("dev")] == ["r1"]


def test_manifest_dump_round_trip(tmp_path):
    m = load_manifest(json.dumps(_manifest_doc()), base_dir=tmp_path)
    path = tmp_path / "manifest.json"
    atomic_write_text(path, dump_manifest(m))
    assert read_manifest(path) == m


def test_manifest_bool_is_not_a_score():
    doc = _manifest_doc()
    doc["participants"][1]["severity_score"] = True
    with pytest.raises(ManifestError):
        load_manifest(json.dumps(doc))


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write_text(tmp_path / "a.txt", "x")
    atomic_write_text(tmp_path / "a.txt", "y")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
    assert (tmp_path / "a.txt").read_text() == "y"

