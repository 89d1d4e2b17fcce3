"""Readers and writers for RTTM diarization files, embedding tables and
corpus manifests.

RTTM lines follow the usual 10-field layout::

    SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>

Embedding files are plain text, one ``segment_id,v1,...,vd`` record per
line. Manifests are JSON documents with ``recordings`` and
``participants`` arrays.

Segment identity is positional: after sorting a recording's segments, the
i-th one is named ``segment_key(recording_id, i)``. Embedding files key
their rows by these names.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateSegmentId,
    ItemSumMismatch,
    MalformedLine,
    ManifestError,
    MissingSpeakerLabel,
    UnknownRecordingRef,
    ZeroVector,
)
from .timeline import SpeechSegment, Timeline, validate_timeline

RTTM_FIELDS = 10
NA = "<NA>"
N_ITEMS = 9
MAX_ITEM_SCORE = 3
GROUPS = ("healthy", "depression", "psychosis")
SPLITS = ("dev", "eval")


def segment_key(recording_id: str, index: int) -> str:
    return f"{recording_id}-{index:05d}"


def rekey_timeline(t: Timeline) -> Timeline:
    """Rename every segment to its canonical positional id."""
    segs = tuple(
        SpeechSegment(segment_key(t.recording_id, i), s.onset, s.duration, s.speaker)
        for i, s in enumerate(t.segments)
    )
    return Timeline(t.recording_id, segs, t.total_duration)


# --------------------------------------------------------------------------
# RTTM


def parse_rttm(
    text: str, durations: Mapping[str, float] | None = None
) -> dict[str, Timeline]:
    """Parse RTTM text into one validated timeline per file id.

    Only ``SPEAKER`` lines are read; blank lines, ``;;`` comments and other
    record types are skipped. A speaker field of ``<NA>`` yields an
    unlabeled segment.

    Args:
        text: RTTM content.
        durations: optional recording lengths in seconds. Recordings without
            an entry get the end of their last segment.

    Raises:
        MalformedLine: wrong field count or unparseable onset/duration.
    """
    raw: dict[str, list[SpeechSegment]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0].startswith(";;") or fields[0] != "SPEAKER":
            continue
        if len(fields) != RTTM_FIELDS:
            raise MalformedLine(line_no, f"expected {RTTM_FIELDS} fields, got {len(fields)}")
        rec = fields[1]
        try:
            onset = float(fields[3])
            dur = float(fields[4])
        except ValueError:
            raise MalformedLine(line_no, "onset/duration is not a number") from None
        if not (math.isfinite(onset) and math.isfinite(dur)):
            raise MalformedLine(line_no, "onset/duration is not finite")
        speaker = None if fields[7] == NA else fields[7]
        raw.setdefault(rec, []).append(SpeechSegment("", onset, dur, speaker))

    out: dict[str, Timeline] = {}
    for rec, segs in raw.items():
        total = max(s.end for s in segs)
        if durations is not None and rec in durations:
            total = float(durations[rec])
        out[rec] = rekey_timeline(validate_timeline(segs, total, rec))
    return out


def write_rttm(timelines: Mapping[str, Timeline] | Iterable[Timeline]) -> str:
    """Serialise timelines as RTTM with millisecond precision.

    Raises:
        MissingSpeakerLabel: a segment has no speaker.
    """
    if isinstance(timelines, Mapping):
        items = list(timelines.items())
    else:
        items = [(t.recording_id, t) for t in timelines]
    lines = []
    for rec, t in items:
        for seg in t.segments:
            if seg.speaker is None:
                raise MissingSpeakerLabel(
                    f"segment {seg.segment_id!r} in {rec!r} has no speaker label"
                )
            lines.append(
                f"SPEAKER {rec} 1 {seg.onset:.3f} {seg.duration:.3f} "
                f"{NA} {NA} {seg.speaker} {NA} {NA}\n"
            )
    return "".join(lines)


# --------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class EmbeddingTable:
    """Per-segment speaker embeddings of a single dimension."""

    dim: int
    entries: Mapping[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, segment_id: object) -> bool:
        return segment_id in self.entries

    def __getitem__(self, segment_id: str) -> np.ndarray:
        return self.entries[segment_id]

    @property
    def ids(self) -> list[str]:
        return list(self.entries)

    def subset(self, ids: Iterable[str]) -> "EmbeddingTable":
        return EmbeddingTable(self.dim, {i: self.entries[i] for i in ids})

    def matrix(self, ids: Sequence[str] | None = None) -> np.ndarray:
        ids = self.ids if ids is None else ids
        if not ids:
            return np.zeros((0, self.dim))
        return np.vstack([self.entries[i] for i in ids])


def make_table(entries: Mapping[str, Sequence[float]]) -> EmbeddingTable:
    """Build a validated table from in-memory vectors."""
    dim = None
    out: dict[str, np.ndarray] = {}
    for sid, vec in entries.items():
        arr = np.array(vec, dtype=float)
        if arr.ndim != 1:
            raise DimensionMismatch(f"embedding {sid!r} is not a vector")
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise DimensionMismatch(f"embedding {sid!r} has dim {arr.shape[0]}, expected {dim}")
        if not np.any(arr):
            raise ZeroVector(f"embedding {sid!r} is all zeros")
        arr.setflags(write=False)
        out[sid] = arr
    return EmbeddingTable(dim or 0, out)


def load_embeddings(text: str) -> EmbeddingTable:
    """Parse ``segment_id,v1,...,vd`` records.

    The dimension is fixed by the first record.

    Raises:
        DimensionMismatch: a record's length differs from the first one.
        DuplicateSegmentId: an id appears twice.
        ZeroVector: a vector is all zeros.
        MalformedLine: a component does not parse as a finite real.
    """
    dim = None
    entries: dict[str, np.ndarray] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        sid, comps = parts[0], parts[1:]
        if not sid or not comps:
            raise MalformedLine(line_no, "expected a segment id followed by values")
        try:
            arr = np.array([float(c) for c in comps])
        except ValueError:
            raise MalformedLine(line_no, "embedding component is not a number") from None
        if not np.all(np.isfinite(arr)):
            raise MalformedLine(line_no, "embedding component is not finite")
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise DimensionMismatch(
                f"line {line_no}: {arr.shape[0]} components, expected {dim}"
            )
        if sid in entries:
            raise DuplicateSegmentId(f"line {line_no}: duplicate segment id {sid!r}")
        if not np.any(arr):
            raise ZeroVector(f"line {line_no}: embedding {sid!r} is all zeros")
        arr.setflags(write=False)
        entries[sid] = arr
    return EmbeddingTable(dim or 0, entries)


def write_embeddings(table: EmbeddingTable) -> str:
    # repr() gives the shortest string that round-trips a float exactly
    return "".join(
        sid + "," + ",".join(repr(float(v)) for v in vec) + "\n"
        for sid, vec in table.entries.items()
    )


# --------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class RecordingEntry:
    recording_id: str
    rttm: Path
    embeddings: Path
    split: str | None = None
    annotated: bool = False
    duration: float | None = None


@dataclass(frozen=True)
class ParticipantEntry:
    participant_id: str
    recording_ids: tuple[str, ...]
    severity_score: int | None = None
    item_scores: tuple[int, ...] | None = None
    group: str | None = None


@dataclass(frozen=True)
class CorpusManifest:
    recordings: tuple[RecordingEntry, ...]
    participants: tuple[ParticipantEntry, ...] = ()
    base_dir: Path = field(default=Path("."))

    def recording(self, recording_id: str) -> RecordingEntry:
        for r in self.recordings:
            if r.recording_id == recording_id:
                return r
        raise UnknownRecordingRef(recording_id)

    def split(self, tag: str) -> list[RecordingEntry]:
        return [r for r in self.recordings if r.split == tag]


def _require(obj: Mapping, key: str, where: str):
    if key not in obj:
        raise ManifestError(f"{where}: missing field {key!r}")
    return obj[key]


def _score(value, lo: int, hi: int, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not lo <= value <= hi:
        raise ManifestError(f"{where}: score {value!r} is not an integer in [{lo}, {hi}]")
    return value


def load_manifest(text: str, base_dir: str | os.PathLike | None = None) -> CorpusManifest:
    """Parse and validate a JSON corpus manifest.

    Relative file paths are resolved against ``base_dir`` when given.

    Raises:
        UnknownRecordingRef: a participant lists a recording id that is not
            in ``recordings``.
        ItemSumMismatch: ``severity_score`` differs from the item sum.
        ManifestError: any other schema violation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    base = Path(base_dir) if base_dir is not None else Path(".")

    recordings = []
    seen: set[str] = set()
    for k, r in enumerate(_require(doc, "recordings", "manifest")):
        where = f"recordings[{k}]"
        rid = str(_require(r, "recording_id", where))
        if rid in seen:
            raise ManifestError(f"{where}: duplicate recording id {rid!r}")
        seen.add(rid)
        split = r.get("split")
        if split is not None and split not in SPLITS:
            raise ManifestError(f"{where}: split must be one of {SPLITS} or null")
        duration = r.get("duration")
        if duration is not None and not (isinstance(duration, (int, float)) and duration > 0):
            raise ManifestError(f"{where}: duration must be a positive number")
        recordings.append(
            RecordingEntry(
                recording_id=rid,
                rttm=base / _require(r, "rttm", where),
                embeddings=base / _require(r, "embeddings", where),
                split=split,
                annotated=bool(r.get("annotated", False)),
                duration=None if duration is None else float(duration),
            )
        )

    participants = []
    for k, p in enumerate(doc.get("participants") or []):
        where = f"participants[{k}]"
        pid = str(_require(p, "participant_id", where))
        rec_ids = tuple(str(x) for x in _require(p, "recording_ids", where))
        for rid in rec_ids:
            if rid not in seen:
                raise UnknownRecordingRef(f"{where}: unknown recording {rid!r}")
        severity = p.get("severity_score")
        if severity is not None:
            severity = _score(severity, 0, N_ITEMS * MAX_ITEM_SCORE, where)
        items = p.get("item_scores")
        if items is not None:
            if len(items) != N_ITEMS:
                raise ManifestError(f"{where}: expected {N_ITEMS} item scores")
            items = tuple(_score(v, 0, MAX_ITEM_SCORE, where) for v in items)
            if severity is not None and sum(items) != severity:
                raise ItemSumMismatch(
                    f"{where}: item scores sum to {sum(items)}, severity is {severity}"
                )
        group = p.get("group")
        if group is not None and group not in GROUPS:
            raise ManifestError(f"{where}: group must be one of {GROUPS}")
        participants.append(ParticipantEntry(pid, rec_ids, severity, items, group))

    return CorpusManifest(tuple(recordings), tuple(participants), base)


def dump_manifest(m: CorpusManifest) -> str:
    """Serialise a manifest with paths relative to its ``base_dir``."""

    def rel(p: Path) -> str:
        try:
            return p.relative_to(m.base_dir).as_posix()
        except ValueError:
            return p.as_posix()

    doc = {
        "recordings": [
            {
                "recording_id": r.recording_id,
                "rttm": rel(r.rttm),
                "embeddings": rel(r.embeddings),
                "split": r.split,
                "annotated": r.annotated,
                "duration": r.duration,
            }
            for r in m.recordings
        ],
        "participants": [
            {
                "participant_id": p.participant_id,
                "recording_ids": list(p.recording_ids),
                "severity_score": p.severity_score,
                "item_scores": None if p.item_scores is None else list(p.item_scores),
                "group": p.group,
            }
            for p in m.participants
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def read_manifest(path: str | os.PathLike) -> CorpusManifest:
    path = Path(path)
    return load_manifest(path.read_text(encoding="utf-8"), base_dir=path.parent)


def load_recording(entry: RecordingEntry) -> tuple[Timeline, EmbeddingTable]:
    """Read the RTTM timeline and embedding table of one manifest entry."""
    durations = None if entry.duration is None else {entry.recording_id: entry.duration}
    timelines = parse_rttm(entry.rttm.read_text(encoding="utf-8"), durations)
    t = timelines.get(entry.recording_id)
    if t is None:
        t = Timeline(entry.recording_id, (), float(entry.duration or 0.0))
    table = load_embeddings(entry.embeddings.read_text(encoding="utf-8"))
    return t, table


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partially written file."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
