"""
Measuring turn-taking
=====================

Within a window of a conversation we follow one target speaker and record
two kinds of gaps: the pause before the target resumes after their own
speech, and the response time after somebody else stops talking.
"""

# %%
# A tiny hand-made exchange makes the bookkeeping easy to check by eye.
from dyadnet.interaction import timing_features
from dyadnet.synthgen import ConversationSpec, gen_conversation
from dyadnet.timeline import SpeechSegment, Timeline, segment_windows

segs = [
    SpeechSegment("t", 0.0, 2.0, "mother"),
    SpeechSegment("t", 2.5, 1.0, "child"),   # child answers after 0.5 s
    SpeechSegment("t", 4.5, 1.0, "mother"),  # mother answers after 1.0 s
    SpeechSegment("t", 6.0, 1.5, "mother"),  # mother pauses 0.5 s
    SpeechSegment("t", 7.2, 0.8, "child"),   # overlaps the mother's turn
]
(window,) = segment_windows(Timeline("t", segs, 10.0), 10.0)
for who in ("mother", "child"):
    print(who, timing_features(window, who))

# %%
# Longer synthetic conversations: slower responders give longer response
# times, while the pause time follows the within-speaker gap.
for gap in (0.3, 1.0, 2.0):
    spec = ConversationSpec(n_speakers=2, duration=600.0, mean_response_gap=gap,
                            mean_pause=0.6, turn_model="markov", self_transition=0.3, seed=11)
    (w,) = segment_windows(gen_conversation(spec), 600.0)
    f = timing_features(w, "S0")
    print(f"mean response gap {gap:.1f}: response {f.response_time:.2f} s, pause {f.pause_time:.2f} s, "
          f"{f.n_response_events} responses")
