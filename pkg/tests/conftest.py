import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dyadnet.formats import make_table, rekey_timeline
from dyadnet.timeline import SpeechSegment, validate_timeline

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def ms(x: float) -> float:
    return round(x, 3)


@st.composite
def timelines(draw, max_segments=25, speakers=("A", "B", "C"), total=120.0, labeled=True):
    """Millisecond-grid timelines, possibly overlapping."""
    n = draw(st.integers(0, max_segments))
    segs = []
    for _ in range(n):
        onset = draw(st.integers(0, int(total * 1000) - 2)) / 1000
        dur = draw(st.integers(1, int((total - onset) * 1000))) / 1000
        spk = draw(st.sampled_from(speakers)) if labeled else None
        segs.append(SpeechSegment("", onset, dur, spk))
    return rekey_timeline(validate_timeline(segs, total, draw(st.sampled_from(["r1", "rec-x"]))))


def unit_table(points, prefix="s"):
    return make_table({f"{prefix}{i:03d}": p for i, p in enumerate(points)})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion at the end of the run

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _CRITERIA[number] = (title, status, getattr(item, "detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"criterion {number} {status}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
