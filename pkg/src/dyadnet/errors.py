"""Exception classes raised across the package.

Every error derives from :class:`DyadError`, itself a ``ValueError``, so
callers that only care about "bad input" can catch one thing.
"""

from __future__ import annotations


class DyadError(ValueError):
    """Base class for all data errors raised by dyadnet."""


# timeline
class NonPositiveDuration(DyadError):
    pass


class NegativeOnset(DyadError):
    pass


class SegmentExceedsRecording(DyadError):
    pass


# diarization io
class MalformedLine(DyadError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        msg = f"malformed line {line_no}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class MissingSpeakerLabel(DyadError):
    pass


class DimensionMismatch(DyadError):
    pass


class DuplicateSegmentId(DyadError):
    pass


class ZeroVector(DyadError):
    pass


class ManifestError(DyadError):
    pass


class UnknownRecordingRef(ManifestError):
    pass


class ItemSumMismatch(ManifestError):
    pass


# learning
class EmptyTrainingSet(DyadError):
    pass


class SingleClass(DyadError):
    pass


class SingleClassTrainingSet(SingleClass):
    pass


class RaggedFeatures(DyadError):
    pass


class TooFewSamples(DyadError):
    pass


class TooFewSegments(DyadError):
    pass


# clustering / detection
class EmptyTable(DyadError):
    pass


class EmptyGrid(DyadError):
    pass


class SingleClassDev(DyadError):
    pass


class InconsistentInputs(DyadError):
    pass


class UnlabeledSegments(DyadError):
    pass


class LengthMismatch(DyadError):
    pass


class DegenerateClassForMetric(DyadError):
    pass


# interaction metrics
class EmptyWindowList(DyadError):
    pass


class TooFewWindows(DyadError):
    pass


class TargetAbsent(DyadError):
    pass


# statistics
class StatsError(DyadError):
    pass


class TooFewPoints(StatsError):
    pass


class ConstantInput(StatsError):
    pass


class BothConstantEqual(StatsError):
    pass


class ZeroVariance(StatsError):
    pass


# synthesis
class CentroidPlacementFailure(DyadError):
    pass
