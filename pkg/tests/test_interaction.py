import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadnet.detect import DyadicVerdict
from dyadnet.errors import EmptyWindowList, TargetAbsent, TooFewWindows
from dyadnet.formats import ParticipantEntry, make_table
from dyadnet.interaction import (
    TimingFeatures,
    WindowVerdict,
    analyze_window,
    average_timing,
    dyadic_ratio,
    identify_target_speaker,
    participant_profile,
    profiles_csv,
    select_top_windows,
    timing_features,
)
from dyadnet.synthgen import ConversationSpec, EmbeddingSpec, gen_conversation, gen_embeddings, place_centroids
from dyadnet.timeline import SpeechSegment, Window, segment_windows, validate_timeline

from oracles import timing_oracle


def window(segs, index=0, start=0.0, length=600.0):
    ss = tuple(SpeechSegment(f"x{i}", on, d, spk) for i, (on, d, spk) in enumerate(segs))
    return Window(index, start, length, tuple(sorted(ss, key=SpeechSegment.sort_key)))


def verdict(dyadic, pct=0.5, index=0, embs=None, times=None):
    return WindowVerdict(
        window=Window(index, 0.0, 600.0, ()),
        verdict=DyadicVerdict(dyadic, 2 if dyadic else 1),
        speech_pct=pct,
        speaker_embeddings=embs or {},
        speaker_speech_times=times or {},
    )


# --------------------------------------------------------------------------
# timing


def test_hand_enumerated_example():
    w = window([(0, 2, "T"), (3, 1, "T"), (5, 1, "O"), (7, 1, "T")])
    f = timing_features(w, "T")
    assert (f.pause_time, f.response_time, f.n_pause_events, f.n_response_events) == (1.0, 1.0, 1, 1)


def test_back_to_back_monologue():
    w = window([(0, 1, "T"), (1, 2, "T"), (3, 1, "T")])
    f = timing_features(w, "T")
    assert f.pause_time == 0.0 and f.n_response_events == 0 and f.response_time is None


def test_overlapping_response_is_excluded():
    w = window([(0, 6, "O"), (5.5, 1, "T")])
    f = timing_features(w, "T")
    assert f.response_time is None and f.n_overlap == 1


def test_intervening_speaker_blocks_pause():
    w = window([(0, 1, "T"), (2, 1, "O"), (3.5, 1, "T")])
    f = timing_features(w, "T")
    assert f.n_pause_events == 0 and f.response_time == 0.5


def test_target_absent():
    with pytest.raises(TargetAbsent):
        timing_features(window([(0, 1, "O")]), "T")


@st.composite
def random_windows(draw):
    n = draw(st.integers(1, 30))
    segs = []
    for _ in range(n):
        on = draw(st.integers(0, 590_000)) / 1000
        d = draw(st.integers(1, 10_000)) / 1000
        segs.append((on, d, draw(st.sampled_from("TO"))))
    segs.append((draw(st.integers(0, 590_000)) / 1000, 1.0, "T"))
    return window(segs)


def _same(a, b):
    return (a is None and b is None) or (a is not None and b is not None and abs(a - b) <= 1e-9)


@given(random_windows())
def test_matches_pair_scan_oracle(w):
    f = timing_features(w, "T")
    p, r, npause, nresp, nover = timing_oracle(w.segments, "T")
    assert _same(f.pause_time, p) and _same(f.response_time, r)
    assert (f.n_pause_events, f.n_response_events, f.n_overlap) == (npause, nresp, nover)


@given(random_windows(), st.integers(1, 10_000))
def test_time_translation_invariance(w, shift_ms):
    c = shift_ms / 1000
    moved = Window(w.index, w.start + c, w.length, tuple(
        SpeechSegment(s.segment_id, s.onset + c, s.duration, s.speaker) for s in w.segments))
    a, b = timing_features(w, "T"), timing_features(moved, "T")
    assert (a.n_pause_events, a.n_response_events, a.n_overlap) == (b.n_pause_events, b.n_response_events, b.n_overlap)
    for x, y in ((a.pause_time, b.pause_time), (a.response_time, b.response_time)):
        assert (x is None) == (y is None)
        if x is not None:
            assert x == pytest.approx(y, abs=1e-6)


def test_average_timing_skips_missing_kinds():
    avg = average_timing([TimingFeatures(1.0, None, 2, 0), TimingFeatures(3.0, 2.0, 1, 4)])
    assert (avg.pause_time, avg.response_time, avg.n_pause_events, avg.n_response_events) == (2.0, 2.0, 3, 4)


# --------------------------------------------------------------------------
# ratio and window selection


def test_dyadic_ratio():
    assert dyadic_ratio([verdict(True)] * 2 + [verdict(False)] * 6) == 0.25
    assert dyadic_ratio([verdict(True)] * 3) == 1.0
    assert dyadic_ratio([verdict(False)] * 3) == 0.0
    with pytest.raises(EmptyWindowList):
        dyadic_ratio([])


@given(st.lists(st.booleans(), min_size=1, max_size=50))
def test_dyadic_ratio_brute_force(flags):
    assert dyadic_ratio([verdict(f) for f in flags]) == sum(flags) / len(flags)


def test_select_top_windows():
    vs = [verdict(True, 0.9, 0), verdict(True, 0.5, 1), verdict(True, 0.7, 2), verdict(False, 1.0, 3)]
    assert [v.window.index for v in select_top_windows(vs, 10)] == [0, 2, 1]
    assert [v.window.index for v in select_top_windows(vs, 2)] == [0, 2]
    tied = [verdict(True, 0.5, i) for i in range(4)]
    assert [v.window.index for v in select_top_windows(tied, 3)] == [0, 1, 2]
    assert select_top_windows([verdict(False)], 10) == []


# --------------------------------------------------------------------------
# target speaker


def basis(i, dim=8):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


def test_common_speaker_found_in_orthogonal_geometry():
    ws = [
        verdict(True, embs={"spk0": basis(i + 1), "spk1": basis(0)}, times={"spk0": 10, "spk1": 10})
        for i in range(3)
    ]
    chain = identify_target_speaker(ws)
    assert chain.speakers == ["spk1"] * 3
    assert chain.confidence == pytest.approx(0.0, abs=1e-12)


def test_identical_pairs_tie_goes_to_more_speech():
    embs = {"spk0": basis(0), "spk1": basis(1)}
    ws = [verdict(True, embs=embs, times={"spk0": 5, "spk1": 9}),
          verdict(True, embs=embs, times={"spk0": 7, "spk1": 3})]
    assert identify_target_speaker(ws).speakers == ["spk1", "spk0"]


def test_single_window_is_ambiguous():
    with pytest.raises(TooFewWindows):
        identify_target_speaker([verdict(True, embs={"spk0": basis(0), "spk1": basis(1)})])


@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.permutations(range(6)))
def test_target_invariant_to_rotation_and_order(seed, n, perm):
    rng = np.random.default_rng(seed)
    target = rng.normal(size=8)
    ws = []
    for i in range(n):
        a = target + 0.05 * rng.normal(size=8)
        b = rng.normal(size=8)
        pair = {"spk0": a, "spk1": b} if rng.random() < 0.5 else {"spk0": b, "spk1": a}
        ws.append(verdict(True, index=i, embs=pair, times={"spk0": 1.0, "spk1": 2.0}))
    base = identify_target_speaker(ws)
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    rotated = [verdict(True, index=v.window.index,
                       embs={k: q @ e for k, e in v.speaker_embeddings.items()},
                       times=v.speaker_speech_times) for v in ws]
    assert identify_target_speaker(rotated).speakers == base.speakers
    order = [p for p in perm if p < n]
    shuffled = identify_target_speaker([ws[i] for i in order])
    assert shuffled.speakers == [base.speakers[i] for i in order]


# --------------------------------------------------------------------------
# profiles


def test_zero_dyadic_windows_profile():
    p = participant_profile(ParticipantEntry("p", ("r",), 4), [verdict(False)] * 3)
    assert p.dyadic_ratio == 0.0 and p.timing is None
    csv = profiles_csv([p]).splitlines()
    assert csv[1] == "p,3,0,0.000000,,,4,"


def _two_speaker_recording(n_windows, gap, seed):
    """Participant 'T' talks with a fresh partner in every window."""
    rng = np.random.default_rng(seed)
    espec = EmbeddingSpec(seed=seed)
    target = place_centroids(["T"], espec, rng)["T"]
    segs, entries = [], {}
    for w in range(n_windows):
        spec = ConversationSpec(n_speakers=2, duration=590, mean_response_gap=gap, seed=seed * 1000 + w,
                                speakers=("T", f"P{w}"), start=w * 600.0)
        t = gen_conversation(spec)
        t = type(t)(f"w{w}", tuple(SpeechSegment(f"w{w}-{i}", s.onset, s.duration, s.speaker)
                                   for i, s in enumerate(t.segments)), t.total_duration)
        e = gen_embeddings(t, EmbeddingSpec(seed=seed * 1000 + w), fixed_centroids={"T": target})
        segs.extend(t.segments)
        entries.update(e.entries)
    return segs, make_table(entries)


def test_two_identical_windows_average_to_single_window():
    segs, table = _two_speaker_recording(1, 1.0, 3)
    (w,) = segment_windows(validate_timeline(segs, 600.0, "r"))
    v = analyze_window(w, table, 0.4)
    p = participant_profile(ParticipantEntry("p", ("r",)), [v, v])
    spk = identify_target_speaker([v, v]).speakers[0]
    single = timing_features(v.window, spk)
    assert p.timing.pause_time == pytest.approx(single.pause_time)
    assert p.timing.response_time == pytest.approx(single.response_time)


def test_recovers_generated_response_gap():
    segs, table = _two_speaker_recording(10, 1.2, 11)
    t = validate_timeline(segs, 6000.0, "r")
    verdicts = [analyze_window(w, table, 0.4) for w in segment_windows(t)]
    p = participant_profile(ParticipantEntry("p", ("r",)), verdicts)
    assert p.dyadic_ratio == 1.0 and p.n_timing_windows == 10
    assert abs(p.timing.response_time - 1.2) <= 0.15
    assert p.target_confidence < 0.05
    assert p.timing.pause_time is None  # round-robin turns never repeat a speaker
