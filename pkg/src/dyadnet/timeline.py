"""Speech segments, recording timelines and fixed-length windowing."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import NegativeOnset, NonPositiveDuration, SegmentExceedsRecording

# Slack for float comparisons against recording/window boundaries (seconds).
TIME_EPS = 1e-9

DEFAULT_WINDOW_SECS = 600.0


@dataclass(frozen=True)
class SpeechSegment:
    segment_id: str
    onset: float
    duration: float
    speaker: str | None = None

    @property
    def end(self) -> float:
        return self.onset + self.duration

    def sort_key(self) -> tuple[float, float, str]:
        return (self.onset, self.duration, self.speaker or "")


@dataclass(frozen=True)
class Timeline:
    """All speech segments of one recording, sorted by onset."""

    recording_id: str
    segments: tuple[SpeechSegment, ...]
    total_duration: float

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def speakers(self) -> list[str]:
        """Distinct speaker labels in order of first appearance."""
        seen: dict[str, None] = {}
        for seg in self.segments:
            if seg.speaker is not None:
                seen.setdefault(seg.speaker, None)
        return list(seen)

    def speech_time_by_speaker(self) -> dict[str, float]:
        totals: dict[str, float] = {}
        for seg in self.segments:
            if seg.speaker is not None:
                totals[seg.speaker] = totals.get(seg.speaker, 0.0) + seg.duration
        return totals


@dataclass(frozen=True)
class Window:
    index: int
    start: float
    length: float
    segments: tuple[SpeechSegment, ...]

    @property
    def end(self) -> float:
        return self.start + self.length


def validate_timeline(
    raw: Iterable[SpeechSegment],
    total_duration: float,
    recording_id: str = "",
) -> Timeline:
    """Check segment invariants and return a sorted :class:`Timeline`.

    Raises:
        NonPositiveDuration: a segment has ``duration <= 0``.
        NegativeOnset: a segment starts before 0.
        SegmentExceedsRecording: a segment ends after ``total_duration``.
    """
    segs = list(raw)
    for seg in segs:
        if not seg.duration > 0:
            raise NonPositiveDuration(
                f"segment {seg.segment_id!r} has duration {seg.duration}"
            )
        if seg.onset < 0:
            raise NegativeOnset(f"segment {seg.segment_id!r} has onset {seg.onset}")
        if seg.end > total_duration + TIME_EPS:
            raise SegmentExceedsRecording(
                f"segment {seg.segment_id!r} ends at {seg.end:.6f} s, "
                f"after recording end {total_duration:.6f} s"
            )
    segs.sort(key=SpeechSegment.sort_key)
    return Timeline(recording_id, tuple(segs), float(total_duration))


def segment_windows(t: Timeline, window_len: float = DEFAULT_WINDOW_SECS) -> list[Window]:
    """Cut a timeline into contiguous, non-overlapping windows.

    Only complete windows are produced; a trailing remainder shorter than
    ``window_len`` is dropped. A segment crossing a window boundary is
    clipped into every window it touches, keeping its ``segment_id`` and
    speaker so embeddings and labels still resolve.
    """
    if not window_len > 0:
        raise ValueError(f"window_len must be positive, got {window_len}")
    n_windows = int(math.floor(t.total_duration / window_len + TIME_EPS))
    buckets: list[list[SpeechSegment]] = [[] for _ in range(n_windows)]
    for seg in t.segments:
        first = int(math.floor(seg.onset / window_len))
        last = int(math.ceil(seg.end / window_len)) - 1
        for k in range(max(first, 0), min(last, n_windows - 1) + 1):
            w_start = k * window_len
            lo = max(seg.onset, w_start)
            hi = min(seg.end, w_start + window_len)
            if hi - lo <= TIME_EPS:
                continue
            if lo == seg.onset and hi == seg.end:
                buckets[k].append(seg)
            else:
                buckets[k].append(replace(seg, onset=lo, duration=hi - lo))
    return [
        Window(k, k * window_len, float(window_len), tuple(buckets[k]))
        for k in range(n_windows)
    ]


def window_timeline(w: Window, recording_id: str = "") -> Timeline:
    """View a window's clipped segments as a stand-alone timeline.

    Times stay absolute, so ``total_duration`` is the window end.
    """
    return validate_timeline(w.segments, w.end, recording_id)


def union_length(intervals: Iterable[tuple[float, float]]) -> float:
    """Total length covered by a set of ``(start, end)`` intervals."""
    spans = sorted((a, b) for a, b in intervals if b > a)
    total = 0.0
    cur_start = cur_end = None
    for a, b in spans:
        if cur_end is None or a > cur_end:
            if cur_end is not None:
                total += cur_end - cur_start
            cur_start, cur_end = a, b
        elif b > cur_end:
            cur_end = b
    if cur_end is not None:
        total += cur_end - cur_start
    return total


def speech_percentage(w: Window) -> float:
    """Fraction of the window covered by speech, overlaps counted once."""
    if not w.length > 0:
        raise ValueError("window length must be positive")
    covered = union_length(
        (max(s.onset, w.start), min(s.end, w.end)) for s in w.segments
    )
    return min(1.0, covered / w.length)


def timeline_speech_time(segments: Sequence[SpeechSegment]) -> float:
    return union_length((s.onset, s.end) for s in segments)
