"""Seeded synthetic corpora with known ground truth.

Three layers:

* :func:`gen_conversation` draws a turn-taking timeline,
* :func:`gen_embeddings` draws per-segment speaker embeddings for it,
* :func:`gen_detection_corpus` and :func:`gen_cohort` assemble whole
  corpora (annotated dev/eval recordings, or multi-window participant
  recordings with severity scores) and can write them to disk.

Durations are exponential with the configured means. Every time is
rounded to the millisecond so corpora survive an RTTM round trip
unchanged. Each recording, participant and window gets its own
``SeedSequence`` child, so outputs are pure functions of the seed.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import CentroidPlacementFailure
from .formats import (
    CorpusManifest,
    EmbeddingTable,
    ParticipantEntry,
    RecordingEntry,
    atomic_write_text,
    dump_manifest,
    make_table,
    rekey_timeline,
    write_embeddings,
    write_rttm,
)
from .timeline import SpeechSegment, Timeline, validate_timeline

ROUND_ROBIN = "round_robin"
MARKOV = "markov"


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


@dataclass(frozen=True)
class ConversationSpec:
    n_speakers: int = 2
    duration: float = 600.0
    mean_utterance: float = 2.5
    mean_pause: float = 0.6
    mean_response_gap: float = 0.8
    overlap_prob: float = 0.0
    turn_model: str = ROUND_ROBIN
    self_transition: float = 0.0  # used by the markov turn model
    seed: int = 0
    speakers: tuple[str, ...] | None = None
    start: float = 0.0  # absolute time of the first possible onset
    recording_id: str = "rec"

    def __post_init__(self):
        if self.n_speakers < 1:
            raise ValueError("n_speakers must be >= 1")
        for name in ("duration", "mean_utterance", "mean_pause", "mean_response_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("overlap_prob", "self_transition"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.turn_model not in (ROUND_ROBIN, MARKOV):
            raise ValueError(f"turn_model must be {ROUND_ROBIN!r} or {MARKOV!r}")
        if self.speakers is not None and len(self.speakers) != self.n_speakers:
            raise ValueError("speakers must name exactly n_speakers labels")

    def labels(self) -> tuple[str, ...]:
        return self.speakers or tuple(f"S{i}" for i in range(self.n_speakers))


@dataclass(frozen=True)
class EmbeddingSpec:
    dim: int = 16
    centroid_min_distance: float = 0.8
    intra_noise: float = 0.05
    spurious_rate: float = 0.0
    spurious_max_magnitude: float = 3.0
    seed: int = 0
    max_tries: int = 10_000

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not 0.0 < self.centroid_min_distance <= 2.0:
            raise ValueError("centroid_min_distance must lie in (0, 2]")
        if self.intra_noise < 0:
            raise ValueError("intra_noise must be >= 0")
        if not 0.0 <= self.spurious_rate <= 1.0:
            raise ValueError("spurious_rate must lie in [0, 1]")


def _segments(spec: ConversationSpec, rng: np.random.Generator) -> list[SpeechSegment]:
    labels = spec.labels()
    n = spec.n_speakers
    stop = spec.start + spec.duration
    t = spec.start + rng.exponential(spec.mean_pause)
    s = 0
    out = []
    while True:
        length = max(0.001, round(rng.exponential(spec.mean_utterance), 3))
        onset = round(t, 3)
        if onset + length > stop:
            break
        out.append(SpeechSegment("", onset, length, labels[s]))
        end = onset + length
        if n == 1:
            nxt = s
        elif spec.turn_model == ROUND_ROBIN:
            nxt = (s + 1) % n
        elif rng.random() < spec.self_transition:
            nxt = s
        else:
            nxt = (s + 1 + int(rng.integers(0, n - 1))) % n
        if nxt == s:
            t = end + rng.exponential(spec.mean_pause)
        elif rng.random() < spec.overlap_prob:
            t = max(onset, end - min(rng.exponential(spec.mean_response_gap), 0.9 * length))
        else:
            t = end + rng.exponential(spec.mean_response_gap)
        s = nxt
    return out


def gen_conversation(spec: ConversationSpec) -> Timeline:
    """Draw one annotated conversation spanning ``[spec.start, spec.start + spec.duration]``."""
    segs = _segments(spec, _rng(spec.seed))
    t = validate_timeline(segs, spec.start + spec.duration, spec.recording_id)
    return rekey_timeline(t)


def place_centroids(
    labels: Sequence[str],
    spec: EmbeddingSpec,
    rng: np.random.Generator,
    fixed: Mapping[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Unit centroids with pairwise cosine distance >= the configured minimum.

    Labels in ``fixed`` keep their given direction; the rest are rejection
    sampled against everything already placed.
    """
    placed: dict[str, np.ndarray] = {}
    for label, vec in (fixed or {}).items():
        v = np.asarray(vec, dtype=float)
        placed[label] = v / np.linalg.norm(v)
    for label in labels:
        if label in placed:
            continue
        for _ in range(spec.max_tries):
            v = rng.standard_normal(spec.dim)
            v /= np.linalg.norm(v)
            if all(1.0 - float(v @ c) >= spec.centroid_min_distance for c in placed.values()):
                placed[label] = v
                break
        else:
            raise CentroidPlacementFailure(
                f"could not place {len(labels)} centroids {spec.centroid_min_distance} apart "
                f"in {spec.dim} dimensions after {spec.max_tries} tries"
            )
    return placed


def gen_embeddings(
    t: Timeline,
    spec: EmbeddingSpec,
    fixed_centroids: Mapping[str, np.ndarray] | None = None,
) -> EmbeddingTable:
    """One embedding per segment: its speaker's centroid plus Gaussian noise,
    renormalised. With probability ``spurious_rate`` a segment is also
    pushed along a random unit direction by a magnitude drawn uniformly
    from ``[2 * intra_noise, spurious_max_magnitude]``.

    Raises:
        CentroidPlacementFailure: centroids cannot be spread far enough apart.
    """
    rng = _rng(spec.seed)
    centroids = place_centroids(t.speakers, spec, rng, fixed_centroids)
    lo = 2.0 * spec.intra_noise
    hi = max(lo, spec.spurious_max_magnitude)
    entries = {}
    for seg in t.segments:
        if seg.speaker is None:
            raise ValueError(f"segment {seg.segment_id!r} has no speaker label")
        v = centroids[seg.speaker] + spec.intra_noise * rng.standard_normal(spec.dim)
        if rng.random() < spec.spurious_rate:
            u = rng.standard_normal(spec.dim)
            v = v + rng.uniform(lo, hi) * u / np.linalg.norm(u)
        entries[seg.segment_id] = v / np.linalg.norm(v)
    return make_table(entries)


# --------------------------------------------------------------------------
# corpora


@dataclass
class SyntheticCorpus:
    manifest: CorpusManifest
    timelines: dict[str, Timeline]
    tables: dict[str, EmbeddingTable]


def write_corpus(corpus: SyntheticCorpus, out_dir: str | os.PathLike) -> Path:
    """Write RTTM, embedding and manifest files; returns the manifest path."""
    out = Path(out_dir)
    (out / "rttm").mkdir(parents=True, exist_ok=True)
    (out / "embeddings").mkdir(parents=True, exist_ok=True)
    for rec in corpus.manifest.recordings:
        atomic_write_text(out / "rttm" / f"{rec.recording_id}.rttm",
                          write_rttm([corpus.timelines[rec.recording_id]]))
        atomic_write_text(out / "embeddings" / f"{rec.recording_id}.emb",
                          write_embeddings(corpus.tables[rec.recording_id]))
    manifest = CorpusManifest(
        tuple(
            RecordingEntry(
                r.recording_id,
                out / "rttm" / f"{r.recording_id}.rttm",
                out / "embeddings" / f"{r.recording_id}.emb",
                r.split,
                r.annotated,
                r.duration,
            )
            for r in corpus.manifest.recordings
        ),
        corpus.manifest.participants,
        out,
    )
    path = out / "manifest.json"
    atomic_write_text(path, dump_manifest(manifest))
    return path


@dataclass(frozen=True)
class DetectionCorpusSpec:
    n_recordings: int = 200
    dev_fraction: float = 0.5
    speaker_counts: tuple[int, ...] = (1, 2, 3, 4)
    speaker_weights: tuple[float, ...] = (0.2, 0.4, 0.2, 0.2)
    duration: float = 600.0
    mean_utterance: tuple[float, float] = (1.5, 3.5)
    mean_pause: tuple[float, float] = (0.3, 1.0)
    mean_response_gap: tuple[float, float] = (0.4, 1.5)
    overlap_prob: tuple[float, float] = (0.0, 0.1)
    self_transition: tuple[float, float] = (0.0, 0.5)
    embedding: EmbeddingSpec = field(default_factory=lambda: EmbeddingSpec(spurious_rate=0.05))


def _detection_recording(args):
    k, ss, spec, split = args
    rng = _rng(ss)
    rid = f"rec{k:04d}"
    n = int(rng.choice(spec.speaker_counts, p=np.array(spec.speaker_weights) / sum(spec.speaker_weights)))
    conv = ConversationSpec(
        n_speakers=n,
        duration=spec.duration,
        mean_utterance=float(rng.uniform(*spec.mean_utterance)),
        mean_pause=float(rng.uniform(*spec.mean_pause)),
        mean_response_gap=float(rng.uniform(*spec.mean_response_gap)),
        overlap_prob=float(rng.uniform(*spec.overlap_prob)),
        turn_model=MARKOV,
        self_transition=float(rng.uniform(*spec.self_transition)),
        seed=_child_seed(rng),
        recording_id=rid,
    )
    t = gen_conversation(conv)
    table = gen_embeddings(t, EmbeddingSpec(**{**asdict(spec.embedding), "seed": _child_seed(rng)}))
    entry = RecordingEntry(rid, Path(f"{rid}.rttm"), Path(f"{rid}.emb"), split, True, spec.duration)
    return entry, t, table


def gen_detection_corpus(
    spec: DetectionCorpusSpec = DetectionCorpusSpec(), seed: int = 0, jobs: int = 1
) -> SyntheticCorpus:
    """Annotated 1-4 speaker recordings split into ``dev`` and ``eval``."""
    children = np.random.SeedSequence(seed).spawn(spec.n_recordings)
    n_dev = int(round(spec.n_recordings * spec.dev_fraction))
    tasks = [
        (k, ss, spec, "dev" if k < n_dev else "eval") for k, ss in enumerate(children)
    ]
    results = _map(_detection_recording, tasks, jobs)
    return SyntheticCorpus(
        CorpusManifest(tuple(r[0] for r in results)),
        {r[0].recording_id: r[1] for r in results},
        {r[0].recording_id: r[2] for r in results},
    )


NULL_MODEL_OVERRIDES = dict(
    ratio_slope_below=0.0, ratio_slope_above=0.0, response_slope=0.0, ratio_base=0.35
)


@dataclass(frozen=True)
class CohortModel:
    """Severity-to-behaviour fixture.

    The chance that a window holds a two-person conversation rises by
    ``ratio_slope_below`` per severity point up to ``cut`` and falls by
    ``ratio_slope_above`` per point beyond it. The partner-to-participant
    response gap mean is ``response_base + response_slope * severity``.
    """

    windows_per_participant: int = 24
    window_secs: float = 600.0
    cut: int = 10
    ratio_base: float = 0.15
    ratio_slope_below: float = 0.04
    ratio_slope_above: float = 0.02
    response_base: float = 0.8
    response_slope: float = 0.03
    response_jitter: float = 0.05
    mean_pause: float = 0.6
    mean_utterance: float = 2.5
    self_transition: float = 0.3
    overlap_prob: float = 0.0
    conversation_secs: tuple[float, float] = (240.0, 590.0)
    solo_fraction: float = 0.4
    group_fraction: float = 0.3
    embedding: EmbeddingSpec = field(default_factory=lambda: EmbeddingSpec(spurious_rate=0.05))

    @classmethod
    def null(cls, **kw) -> "CohortModel":
        """Behaviour independent of severity."""
        return cls(**{**NULL_MODEL_OVERRIDES, **kw})

    def dyadic_probability(self, severity: int) -> float:
        p = (
            self.ratio_base
            + self.ratio_slope_below * min(severity, self.cut)
            - self.ratio_slope_above * max(0, severity - self.cut)
        )
        return float(min(0.98, max(0.02, p)))

    def response_gap(self, severity: int) -> float:
        return self.response_base + self.response_slope * severity


def draw_item_scores(total: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Spread ``total`` points over 9 items scored 0-3."""
    items = [0] * 9
    for _ in range(total):
        open_items = [i for i, v in enumerate(items) if v < 3]
        items[open_items[int(rng.integers(0, len(open_items)))]] += 1
    return tuple(items)


def _group_for(severity: int, rng: np.random.Generator) -> str:
    if severity < 5:
        return "healthy"
    return "depression" if rng.random() < 0.6 else "psychosis"


def _window_segments(
    kind: str,
    w: int,
    model: CohortModel,
    rng: np.random.Generator,
    target: str,
    response_gap: float,
) -> list[SpeechSegment]:
    start = w * model.window_secs
    if kind == "quiet":
        return []
    if kind == "dyadic":
        speakers = (target, f"P{w:03d}")
    elif kind == "group":
        n = int(rng.integers(3, 5))
        speakers = (target,) + tuple(f"G{w:03d}_{i}" for i in range(n - 1))
    else:
        speakers = (target,)
    secs = float(rng.uniform(*model.conversation_secs))
    offset = float(rng.uniform(0.0, model.window_secs - secs))
    spec = ConversationSpec(
        n_speakers=len(speakers),
        duration=secs,
        mean_utterance=model.mean_utterance,
        mean_pause=model.mean_pause if kind != "solo" else 4.0 * model.mean_pause,
        mean_response_gap=response_gap,
        overlap_prob=model.overlap_prob,
        turn_model=MARKOV,
        self_transition=model.self_transition,
        seed=_child_seed(rng),
        speakers=speakers,
        start=round(start + offset, 3),
    )
    return _segments(spec, _rng(spec.seed))


def _participant(args):
    k, ss, model = args
    rng = _rng(ss)
    pid = f"p{k:03d}"
    rid = f"{pid}_r0"
    severity = int(rng.integers(0, 28))
    items = draw_item_scores(severity, rng)
    group = _group_for(severity, rng)
    p_dyadic = model.dyadic_probability(severity)
    gap = max(0.05, model.response_gap(severity) + model.response_jitter * rng.standard_normal())
    target = "T"

    segs: list[SpeechSegment] = []
    rest = max(1e-9, 1.0 - model.solo_fraction - model.group_fraction)
    other_p = np.array([model.solo_fraction, model.group_fraction, rest])
    other_p /= other_p.sum()
    for w in range(model.windows_per_participant):
        if rng.random() < p_dyadic:
            kind = "dyadic"
        else:
            kind = ("solo", "group", "quiet")[int(rng.choice(3, p=other_p))]
        segs.extend(_window_segments(kind, w, model, rng, target, gap))

    total = model.windows_per_participant * model.window_secs
    t = rekey_timeline(validate_timeline(segs, total, rid))
    emb_spec = EmbeddingSpec(**{**asdict(model.embedding), "seed": _child_seed(rng)})
    target_centroid = place_centroids([target], emb_spec, _rng(_child_seed(rng)))[target]
    # centroids only need to be apart from speakers sharing their window
    by_window: dict[int, list[SpeechSegment]] = {}
    for seg in t.segments:
        by_window.setdefault(int(seg.onset // model.window_secs), []).append(seg)
    entries: dict[str, np.ndarray] = {}
    for w in sorted(by_window):
        sub = Timeline(rid, tuple(by_window[w]), total)
        spec_w = EmbeddingSpec(**{**asdict(emb_spec), "seed": _child_seed(rng)})
        entries.update(gen_embeddings(sub, spec_w, fixed_centroids={target: target_centroid}).entries)
    table = make_table(entries)
    rec = RecordingEntry(rid, Path(f"{rid}.rttm"), Path(f"{rid}.emb"), None, True, total)
    part = ParticipantEntry(pid, (rid,), severity, items, group)
    return rec, part, t, table


def gen_cohort(
    n_participants: int,
    model: CohortModel = CohortModel(),
    seed: int = 0,
    out_dir: str | os.PathLike | None = None,
    jobs: int = 1,
) -> SyntheticCorpus:
    """Synthetic participants with severity scores and one long recording each.

    Each window of a participant's recording is independently a two-person
    conversation (with a fresh partner) with the model's severity-dependent
    probability; otherwise the participant talks alone, joins a group of 3-4,
    or the window stays silent. The participant's voice uses one fixed
    centroid throughout. Files are written when ``out_dir`` is given.
    """
    children = np.random.SeedSequence(seed).spawn(n_participants)
    results = _map(_participant, [(k, ss, model) for k, ss in enumerate(children)], jobs)
    corpus = SyntheticCorpus(
        CorpusManifest(tuple(r[0] for r in results), tuple(r[1] for r in results)),
        {r[0].recording_id: r[2] for r in results},
        {r[0].recording_id: r[3] for r in results},
    )
    if out_dir is not None:
        write_corpus(corpus, out_dir)
    return corpus


def _map(fn, tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# --------------------------------------------------------------------------
# config files


def _from_dict(cls, doc: Mapping | None):
    doc = dict(doc or {})
    if "embedding" in doc:
        doc["embedding"] = EmbeddingSpec(**doc["embedding"])
    for key, value in list(doc.items()):
        if isinstance(value, list):
            doc[key] = tuple(value)
    return cls(**doc)


def simulate_from_config(config: Mapping, out_dir, seed: int | None = None, jobs: int = 1) -> Path:
    """Generate the corpus a ``simulate`` config describes; returns the manifest path.

    Config keys: ``kind`` (``"cohort"`` or ``"detection"``), ``seed``,
    ``n_participants`` (cohort), ``model`` (CohortModel fields, with
    ``"null": true`` selecting the severity-independent variant) or
    ``corpus`` (DetectionCorpusSpec fields).
    """
    kind = config.get("kind", "cohort")
    seed = int(config.get("seed", 0) if seed is None else seed)
    if kind == "cohort":
        doc = dict(config.get("model") or {})
        if doc.pop("null", False):
            doc = {**NULL_MODEL_OVERRIDES, **doc}
        model = _from_dict(CohortModel, doc)
        corpus = gen_cohort(int(config.get("n_participants", 32)), model, seed, jobs=jobs)
    elif kind == "detection":
        corpus = gen_detection_corpus(_from_dict(DetectionCorpusSpec, config.get("corpus")), seed, jobs)
    else:
        raise ValueError(f"unknown corpus kind {kind!r}")
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    atomic_write_text(Path(out_dir) / "config.json", json.dumps({**config, "seed": seed}, indent=2, sort_keys=True) + "\n")
    return write_corpus(corpus, out_dir)
