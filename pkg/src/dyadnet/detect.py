"""Dyadic verdicts from speaker counts, reference labels for annotated
recordings, and detection metrics."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .clustering import ClusterAssignment, cluster_segments
from .errors import DegenerateClassForMetric, LengthMismatch, UnlabeledSegments
from .formats import EmbeddingTable
from .learn import loads_forest
from .spurious import HeuristicFilter, apply_filter
from .timeline import Timeline

MIN_SEQUENCE_SECS = 300.0
DYADIC_SHARE = 0.9


class GroundTruth(str, enum.Enum):
    DYADIC = "dyadic"
    NON_DYADIC = "non-dyadic"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class DyadicVerdict:
    is_dyadic: bool
    n_speakers_detected: int
    source: str = "econet"


def parse_spurious_mode(mode: str | None):
    """Turn ``off``, ``heuristic``, ``heuristic=<share>`` or
    ``model=<path>`` into a filter object usable by :func:`detect_dyadic`."""
    if mode is None or mode == "off":
        return None
    if mode == "heuristic":
        return HeuristicFilter()
    if mode.startswith("heuristic="):
        return HeuristicFilter(float(mode.split("=", 1)[1]))
    if mode.startswith("model="):
        path = Path(mode.split("=", 1)[1])
        return loads_forest(path.read_text(encoding="utf-8"))
    raise ValueError(f"unknown spurious mode {mode!r}; use off, heuristic or model=<path>")


def diarize(
    e: EmbeddingTable, t: Timeline, threshold: float, spurious=None
) -> ClusterAssignment:
    """Cluster the embedded segments of ``t`` and drop spurious clusters."""
    ids = list(dict.fromkeys(s.segment_id for s in t.segments if s.segment_id in e))
    if not ids:
        return ClusterAssignment({}, 0, e.matrix([]))
    c = cluster_segments(e, threshold, ids)
    return apply_filter(c, e, t, spurious)


def detect_dyadic(
    e: EmbeddingTable, t: Timeline, threshold: float, spurious=None
) -> DyadicVerdict:
    """Cluster, filter, count: the recording is dyadic iff two speakers remain."""
    n = diarize(e, t, threshold, spurious).n_clusters
    return DyadicVerdict(n == 2, n, "econet")


def ground_truth_label(
    t: Timeline,
    min_duration: float = MIN_SEQUENCE_SECS,
    share_threshold: float = DYADIC_SHARE,
) -> GroundTruth:
    """Reference label of an annotated recording.

    Recordings no longer than ``min_duration`` are excluded. Otherwise the
    recording is dyadic when at least two speakers talk and the two with the
    most speech time hold strictly more than ``share_threshold`` of all
    speech time.

    Raises:
        UnlabeledSegments: a segment has no speaker label.
    """
    if any(s.speaker is None for s in t.segments):
        raise UnlabeledSegments(f"{t.recording_id!r} has segments without speaker labels")
    if t.total_duration <= min_duration:
        return GroundTruth.EXCLUDED
    totals = sorted(t.speech_time_by_speaker().values(), reverse=True)
    if len(totals) < 2:
        return GroundTruth.NON_DYADIC
    share = (totals[0] + totals[1]) / sum(totals)
    return GroundTruth.DYADIC if share > share_threshold else GroundTruth.NON_DYADIC


@dataclass(frozen=True)
class DetectionMetrics:
    accuracy: float
    specificity: float
    sensitivity: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def confusion(self) -> tuple[int, int, int, int]:
        return (self.tp, self.fp, self.tn, self.fn)


def _is_dyadic(x) -> bool:
    if isinstance(x, DyadicVerdict):
        return x.is_dyadic
    if isinstance(x, GroundTruth):
        if x is GroundTruth.EXCLUDED:
            raise ValueError("excluded recordings cannot be scored")
        return x is GroundTruth.DYADIC
    return bool(x)


def evaluate(verdicts: Sequence, labels: Sequence) -> DetectionMetrics:
    """Accuracy, specificity and sensitivity with dyadic as the positive class.

    Both arguments accept :class:`DyadicVerdict`, :class:`GroundTruth` or
    booleans.

    Raises:
        LengthMismatch: the sequences differ in length.
        DegenerateClassForMetric: the labels lack one of the two classes.
    """
    if len(verdicts) != len(labels):
        raise LengthMismatch(f"{len(verdicts)} verdicts vs {len(labels)} labels")
    tp = fp = tn = fn = 0
    for v, l in zip(verdicts, labels):
        pred, truth = _is_dyadic(v), _is_dyadic(l)
        if truth:
            tp += pred
            fn += not pred
        else:
            fp += pred
            tn += not pred
    if tp + fn == 0 or tn + fp == 0:
        raise DegenerateClassForMetric("labels must contain both dyadic and non-dyadic cases")
    n = tp + fp + tn + fn
    return DetectionMetrics(
        accuracy=(tp + tn) / n,
        specificity=tn / (tn + fp),
        sensitivity=tp / (tp + fn),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


@dataclass(frozen=True)
class MetricsRow:
    section: str
    dataset: str
    threshold: float | None
    metrics: DetectionMetrics


SECTION_ORDER = (
    "With Spurious Speaker Detection",
    "Without Spurious Speaker Detection",
    "Baseline RF Model",
)


def metrics_csv(rows: Sequence[MetricsRow]) -> str:
    out = ["section,dataset,threshold,accuracy,specificity,sensitivity,tp,fp,tn,fn"]
    for r in rows:
        m = r.metrics
        thr = "" if r.threshold is None else f"{r.threshold:.4f}"
        out.append(
            f"{r.section},{r.dataset},{thr},{m.accuracy:.6f},{m.specificity:.6f},"
            f"{m.sensitivity:.6f},{m.tp},{m.fp},{m.tn},{m.fn}"
        )
    return "\n".join(out) + "\n"


def format_metrics_table(rows: Sequence[MetricsRow]) -> str:
    """Plain-text table: one block per section, one line per dataset."""
    name_w = max([len("Dataset")] + [len(r.dataset) for r in rows])
    header = f"| {'Dataset':<{name_w}} | {'Accuracy':>8} | {'Specificity':>11} | {'Sensitivity':>11} |"
    width = len(header) - 2
    rule = "+" + "-" * width + "+"
    lines = [rule, header, rule]
    sections = sorted({r.section for r in rows}, key=lambda s: (
        SECTION_ORDER.index(s) if s in SECTION_ORDER else len(SECTION_ORDER), s))
    for section in sections:
        lines.append(f"|{section:^{width}}|")
        lines.append(rule)
        for r in rows:
            if r.section != section:
                continue
            m = r.metrics
            lines.append(
                f"| {r.dataset:<{name_w}} | {m.accuracy:>8.1%} | {m.specificity:>11.1%} "
                f"| {m.sensitivity:>11.1%} |"
            )
        lines.append(rule)
    return "\n".join(lines) + "\n"
