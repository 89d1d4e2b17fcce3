"""Corpus-level pipelines behind the command-line subcommands.

Every function here reads a :class:`~dyadnet.formats.CorpusManifest`,
processes recordings independently (optionally in a process pool), and
merges results in manifest order so output never depends on ``jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .baseline import (
    BaselineModel,
    compute_vad_features,
    predict_baseline,
    train_baseline,
)
from .clustering import cut_tree, linkage_tree
from .detect import (
    DetectionMetrics,
    GroundTruth,
    detect_dyadic,
    evaluate,
    ground_truth_label,
)
from .errors import StatsError, TooFewSegments
from .formats import CorpusManifest, EmbeddingTable, RecordingEntry, load_recording
from .interaction import (
    DEFAULT_TOP_K,
    ParticipantProfile,
    WindowVerdict,
    analyze_window,
    participant_profile,
)
from .learn import Forest, ForestConfig
from .spurious import train_spurious_model
from .stats import group_summary, pearson, split_correlation, t_test_welch
from .timeline import DEFAULT_WINDOW_SECS, Timeline, segment_windows

LabeledRecording = tuple[EmbeddingTable, Timeline, bool]


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Ordered map, in a process pool when ``jobs > 1``."""
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _labeled(entry: RecordingEntry):
    t, table = load_recording(entry)
    label = ground_truth_label(t)
    return None if label is GroundTruth.EXCLUDED else (table, t, label is GroundTruth.DYADIC)


def labeled_split(manifest: CorpusManifest, split: str, jobs: int = 1) -> list[LabeledRecording]:
    """Annotated recordings of one split with reference labels; recordings
    too short to score are skipped."""
    entries = [r for r in manifest.split(split) if r.annotated]
    return [x for x in pmap(_labeled, entries, jobs) if x is not None]


# --------------------------------------------------------------------------
# detection


def train_spurious_on(
    dev: Sequence[LabeledRecording],
    thresholds: Iterable[float],
    cfg: ForestConfig = ForestConfig(),
) -> Forest:
    """Fit the spurious-cluster forest on clusterings of the dev recordings
    at each of ``thresholds``."""
    corpus = []
    thresholds = list(thresholds)
    for table, t, _ in dev:
        ids = [s.segment_id for s in t.segments if s.segment_id in table]
        if not ids:
            continue
        tree = linkage_tree(table, ids)
        for thr in thresholds:
            corpus.append((t, table, cut_tree(tree, table, thr)))
    return train_spurious_model(corpus, cfg)


def _detect(args) -> bool:
    table, t, threshold, spurious = args
    return detect_dyadic(table, t, threshold, spurious).is_dyadic


def detection_metrics(
    recs: Sequence[LabeledRecording], threshold: float, spurious, jobs: int = 1
) -> DetectionMetrics:
    preds = pmap(_detect, [(table, t, threshold, spurious) for table, t, _ in recs], jobs)
    return evaluate(preds, [label for _, _, label in recs])


def baseline_rows(recs: Sequence[LabeledRecording]) -> tuple[list, list[bool]]:
    feats, labels = [], []
    for _, t, label in recs:
        try:
            feats.append(compute_vad_features(t))
        except TooFewSegments:
            continue
        labels.append(label)
    return feats, labels


def fit_baseline(dev: Sequence[LabeledRecording], seed: int = 0) -> BaselineModel:
    feats, labels = baseline_rows(dev)
    return train_baseline(feats, labels, seed)


def baseline_metrics(model: BaselineModel, recs: Sequence[LabeledRecording]) -> DetectionMetrics:
    """Recordings with fewer than two segments are called non-dyadic."""
    preds = []
    for _, t, _ in recs:
        try:
            preds.append(predict_baseline(model, compute_vad_features(t))[0])
        except TooFewSegments:
            preds.append(False)
    return evaluate(preds, [label for _, _, label in recs])


# --------------------------------------------------------------------------
# participant analysis


def _recording_windows(args) -> list[WindowVerdict]:
    entry, threshold, spurious, window_secs = args
    t, table = load_recording(entry)
    return [
        analyze_window(w, table, threshold, spurious, entry.recording_id)
        for w in segment_windows(t, window_secs)
    ]


def participant_profiles(
    manifest: CorpusManifest,
    threshold: float,
    spurious=None,
    window_secs: float = DEFAULT_WINDOW_SECS,
    top_k: int = DEFAULT_TOP_K,
    jobs: int = 1,
) -> list[ParticipantProfile]:
    tasks = [
        (manifest.recording(rid), threshold, spurious, window_secs)
        for p in manifest.participants
        for rid in p.recording_ids
    ]
    windows = iter(pmap(_recording_windows, tasks, jobs))
    profiles = []
    for p in manifest.participants:
        verdicts: list[WindowVerdict] = []
        for _ in p.recording_ids:
            verdicts.extend(next(windows))
        if not verdicts:
            profiles.append(ParticipantProfile(p.participant_id, 0, 0, math.nan, None,
                                               p.severity_score, p.item_scores, p.group))
            continue
        profiles.append(participant_profile(p, verdicts, top_k))
    return profiles


@dataclass(frozen=True)
class AnalysisRow:
    analysis: str
    n: int
    statistic: float | None
    p_value: float | None
    status: str = "ok"


def _row(name: str, n: int, fn: Callable) -> AnalysisRow:
    try:
        res = fn()
    except StatsError as exc:
        return AnalysisRow(name, n, None, None, type(exc).__name__)
    if hasattr(res, "r"):
        return AnalysisRow(name, n, res.r, res.p_two_sided)
    return AnalysisRow(name, n, res.t, res.p_two_sided)


def analysis_rows(profiles: Sequence[ParticipantProfile], cut: int = 10) -> list[AnalysisRow]:
    """Correlations of severity with dyadic ratio (split at ``cut``) and
    with timing, plus per-item Welch tests of response time (item score 0
    versus above 0)."""
    scored = [p for p in profiles if p.severity_score is not None and not math.isnan(p.dyadic_ratio)]
    below = [p for p in scored if p.severity_score < cut]
    above = [p for p in scored if p.severity_score >= cut]
    rows = [
        _row("dyadic_ratio~severity", len(scored),
             lambda: pearson([p.severity_score for p in scored], [p.dyadic_ratio for p in scored])),
        _row(f"dyadic_ratio~severity[<{cut}]", len(below),
             lambda: pearson([p.severity_score for p in below], [p.dyadic_ratio for p in below])),
        _row(f"dyadic_ratio~severity[>={cut}]", len(above),
             lambda: pearson([p.severity_score for p in above], [p.dyadic_ratio for p in above])),
    ]
    for feat in ("response_time", "pause_time"):
        have = [p for p in scored if p.timing is not None and getattr(p.timing, feat) is not None]
        rows.append(
            _row(f"{feat}~severity", len(have),
                 lambda have=have, feat=feat: pearson(
                     [p.severity_score for p in have], [getattr(p.timing, feat) for p in have]))
        )
    timed = [
        p for p in scored
        if p.item_scores is not None and p.timing is not None and p.timing.response_time is not None
    ]
    for item in range(9):
        pos = [p.timing.response_time for p in timed if p.item_scores[item] > 0]
        zero = [p.timing.response_time for p in timed if p.item_scores[item] == 0]
        rows.append(
            _row(f"response_time:item{item + 1}>0_vs_0", len(timed),
                 lambda pos=pos, zero=zero: t_test_welch(pos, zero))
        )
    return rows


def analysis_csv(rows: Sequence[AnalysisRow]) -> str:
    def f(x):
        return "" if x is None else f"{x:.6f}"

    lines = ["analysis,n,statistic,p_value,status"]
    lines += [f"{r.analysis},{r.n},{f(r.statistic)},{f(r.p_value)},{r.status}" for r in rows]
    return "\n".join(lines) + "\n"


def analysis_summary(profiles: Sequence[ParticipantProfile], rows: Sequence[AnalysisRow]) -> str:
    """Readable report: correlations, item tests and per-group mean +/- std."""
    out = [f"participants: {len(profiles)}"]
    with_timing = sum(p.timing is not None for p in profiles)
    out.append(f"participants with timing features: {with_timing}")
    out.append("")
    out.append("correlations and tests")
    for r in rows:
        if r.status != "ok":
            out.append(f"  {r.analysis:<36} n={r.n:<3} {r.status}")
        else:
            out.append(f"  {r.analysis:<36} n={r.n:<3} stat={r.statistic:+.3f}  p={r.p_value:.3f}")
    out.append("")
    out.append("groups (mean +/- sample std)")
    groups = sorted({p.group for p in profiles if p.group is not None})
    for g in groups:
        members = [p for p in profiles if p.group == g]
        sev = [float(p.severity_score) for p in members if p.severity_score is not None]
        rt = [p.timing.response_time for p in members
              if p.timing is not None and p.timing.response_time is not None]
        out.append(f"  {g:<11} n={len(members):<3} severity {_mean_std(sev)}  "
                   f"response_time {_mean_std(rt)}")
    return "\n".join(out) + "\n"


def _mean_std(values: Sequence[float]) -> str:
    try:
        m, s = group_summary(values)
    except StatsError:
        return "n/a" if not values else f"{values[0]:.2f} (n=1)"
    return f"{m:.2f}+/-{s:.2f}"


def split_signs(profiles: Sequence[ParticipantProfile], cut: int = 10):
    """Convenience for checks: ``(r_below, r_above)`` or ``None`` per side."""
    lo, hi = split_correlation(profiles, cut)
    return (None if lo is None else lo.r, None if hi is None else hi.r)

