"""Per-participant interaction analytics over fixed-length windows.

For each window the embedded segments are clustered and the window is
called dyadic when two speakers remain. Across a participant's dyadic
windows, the speaker recurring in all of them (the person wearing the
recorder) is located from embedding distances, and their pause and
response times are measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .clustering import cosine_distance_matrix
from .detect import DyadicVerdict, diarize
from .errors import EmptyWindowList, TargetAbsent, TooFewWindows
from .formats import EmbeddingTable, ParticipantEntry
from .timeline import SpeechSegment, Window, speech_percentage, window_timeline

DEFAULT_TOP_K = 10
# Costs closer than this count as equal when choosing a target speaker.
_COST_TIE = 1e-9


@dataclass(frozen=True)
class WindowVerdict:
    """One analysed window.

    ``window.segments`` carry the detected speaker labels (``spk0``,
    ``spk1``, ...), not the annotated ones.
    """

    window: Window
    verdict: DyadicVerdict
    speech_pct: float
    speaker_embeddings: Mapping[str, np.ndarray]
    speaker_speech_times: Mapping[str, float]
    recording_id: str = ""


@dataclass(frozen=True)
class TimingFeatures:
    pause_time: float | None
    response_time: float | None
    n_pause_events: int
    n_response_events: int
    n_overlap: int = 0


@dataclass(frozen=True)
class TargetChain:
    speakers: list[str]  # aligned with the input windows
    confidence: float  # mean cosine distance among the chosen embeddings


@dataclass(frozen=True)
class ParticipantProfile:
    participant_id: str
    n_windows: int
    n_dyadic: int
    dyadic_ratio: float
    timing: TimingFeatures | None
    severity_score: int | None = None
    item_scores: tuple[int, ...] | None = None
    group: str | None = None
    target_confidence: float | None = None
    n_timing_windows: int = 0


def speaker_label(k: int) -> str:
    return f"spk{k}"


def analyze_window(
    w: Window,
    e: EmbeddingTable,
    threshold: float,
    spurious=None,
    recording_id: str = "",
) -> WindowVerdict:
    """Cluster one window and attach detected speakers to its segments."""
    wt = window_timeline(w, recording_id)
    c = diarize(e, wt, threshold, spurious)
    segs = []
    times: dict[str, float] = {speaker_label(k): 0.0 for k in range(c.n_clusters)}
    for s in w.segments:
        k = c.assignment.get(s.segment_id)
        label = None if k is None else speaker_label(k)
        if label is not None:
            times[label] += s.duration
        segs.append(replace(s, speaker=label))
    embs = {speaker_label(k): c.centroids[k] for k in range(c.n_clusters)}
    return WindowVerdict(
        window=replace(w, segments=tuple(segs)),
        verdict=DyadicVerdict(c.n_clusters == 2, c.n_clusters, "econet"),
        speech_pct=speech_percentage(w),
        speaker_embeddings=embs,
        speaker_speech_times=times,
        recording_id=recording_id,
    )


def dyadic_ratio(verdicts: Sequence[WindowVerdict]) -> float:
    if not verdicts:
        raise EmptyWindowList("no windows")
    return sum(v.verdict.is_dyadic for v in verdicts) / len(verdicts)


def select_top_windows(
    verdicts: Sequence[WindowVerdict], k: int = DEFAULT_TOP_K
) -> list[WindowVerdict]:
    """The ``k`` dyadic windows with the most speech (ties: earlier first).

    "Earlier" follows the input order, which for a participant is recording
    order then window index.
    """
    ranked = [(pos, v) for pos, v in enumerate(verdicts) if v.verdict.is_dyadic]
    ranked.sort(key=lambda pv: (-pv[1].speech_pct, pv[0]))
    return [v for _, v in ranked[: max(k, 0)]]


def identify_target_speaker(windows: Sequence[WindowVerdict]) -> TargetChain:
    """Find the speaker common to all windows.

    Each candidate speaker ``s`` in window ``i`` costs the sum, over every
    other window, of the cosine distance from ``s`` to the closer of that
    window's speakers. The cheapest candidate of each window is its target;
    equal costs go to the candidate with more speech time, then to the
    lower label.

    Raises:
        TooFewWindows: fewer than two windows.
    """
    if len(windows) < 2:
        raise TooFewWindows(f"need at least 2 windows, got {len(windows)}")
    owner: list[int] = []
    labels: list[str] = []
    vectors = []
    for i, v in enumerate(windows):
        for label in sorted(v.speaker_embeddings):
            owner.append(i)
            labels.append(label)
            vectors.append(v.speaker_embeddings[label])
    owner_arr = np.array(owner)
    D = cosine_distance_matrix(np.vstack(vectors))

    chosen: list[int] = []
    for i, v in enumerate(windows):
        rows = np.flatnonzero(owner_arr == i)
        best = None
        for r in rows:
            cost = 0.0
            for j in range(len(windows)):
                if j != i:
                    cost += float(D[r, owner_arr == j].min())
            secs = v.speaker_speech_times.get(labels[r], 0.0)
            if (
                best is None
                or cost < best[0] - _COST_TIE
                or (abs(cost - best[0]) <= _COST_TIE and secs > best[1])
            ):
                best = (cost, secs, r)
        chosen.append(best[2])

    sub = D[np.ix_(chosen, chosen)]
    m = len(chosen)
    confidence = float(sub.sum() / (m * (m - 1)))
    return TargetChain([labels[r] for r in chosen], confidence)


def timing_features(w: Window, target: str) -> TimingFeatures:
    """Pause and response times of ``target`` within one window.

    Segments are scanned in onset order. A target segment directly after
    another target segment is a pause event (gap clamped at 0). A target
    segment directly after a non-target segment is a response event when
    it starts at or after that segment's end; otherwise it is counted as
    an overlap and left out of the response mean.

    Raises:
        TargetAbsent: no segment belongs to ``target``.
    """
    segs = sorted(w.segments, key=SpeechSegment.sort_key)
    if not any(s.speaker == target for s in segs):
        raise TargetAbsent(f"speaker {target!r} does not occur in window {w.index}")
    pauses: list[float] = []
    responses: list[float] = []
    overlaps = 0
    for prev, cur in zip(segs, segs[1:]):
        if cur.speaker != target:
            continue
        gap = cur.onset - prev.end
        if prev.speaker == target:
            pauses.append(max(0.0, gap))
        elif gap >= 0:
            responses.append(gap)
        else:
            overlaps += 1
    return TimingFeatures(
        pause_time=math.fsum(pauses) / len(pauses) if pauses else None,
        response_time=math.fsum(responses) / len(responses) if responses else None,
        n_pause_events=len(pauses),
        n_response_events=len(responses),
        n_overlap=overlaps,
    )


def average_timing(features: Sequence[TimingFeatures]) -> TimingFeatures:
    """Unweighted mean over windows; a window without events of one kind
    does not enter that kind's mean."""
    pauses = [f.pause_time for f in features if f.pause_time is not None]
    responses = [f.response_time for f in features if f.response_time is not None]
    return TimingFeatures(
        pause_time=math.fsum(pauses) / len(pauses) if pauses else None,
        response_time=math.fsum(responses) / len(responses) if responses else None,
        n_pause_events=sum(f.n_pause_events for f in features),
        n_response_events=sum(f.n_response_events for f in features),
        n_overlap=sum(f.n_overlap for f in features),
    )


def participant_profile(
    participant: ParticipantEntry,
    verdicts: Sequence[WindowVerdict],
    k: int = DEFAULT_TOP_K,
) -> ParticipantProfile:
    """Dyadic ratio over all windows plus timing averaged over the top-``k``
    dyadic windows. Timing is ``None`` with fewer than two dyadic windows.

    Raises:
        EmptyWindowList: the participant has no windows.
    """
    ratio = dyadic_ratio(verdicts)
    n_dyadic = sum(v.verdict.is_dyadic for v in verdicts)
    timing = None
    confidence = None
    top = select_top_windows(verdicts, k)
    if len(top) >= 2:
        chain = identify_target_speaker(top)
        confidence = chain.confidence
        timing = average_timing(
            [timing_features(v.window, spk) for v, spk in zip(top, chain.speakers)]
        )
    return ParticipantProfile(
        participant_id=participant.participant_id,
        n_windows=len(verdicts),
        n_dyadic=n_dyadic,
        dyadic_ratio=ratio,
        timing=timing,
        severity_score=participant.severity_score,
        item_scores=participant.item_scores,
        group=participant.group,
        target_confidence=confidence,
        n_timing_windows=len(top) if timing is not None else 0,
    )


PROFILE_COLUMNS = (
    "participant_id",
    "n_windows",
    "n_dyadic",
    "dyadic_ratio",
    "pause_time",
    "response_time",
    "severity_score",
    "group",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def profiles_csv(profiles: Sequence[ParticipantProfile]) -> str:
    """CSV with one row per participant; missing values are empty cells."""
    lines = [",".join(PROFILE_COLUMNS)]
    for p in profiles:
        t = p.timing
        lines.append(
            ",".join(
                _fmt(x)
                for x in (
                    p.participant_id,
                    p.n_windows,
                    p.n_dyadic,
                    p.dyadic_ratio,
                    None if t is None else t.pause_time,
                    None if t is None else t.response_time,
                    p.severity_score,
                    p.group,
                )
            )
        )
    return "\n".join(lines) + "\n"
