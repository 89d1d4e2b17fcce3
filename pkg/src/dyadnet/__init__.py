"""Dyadic interaction detection from speaker embeddings, and conversational
timing features over long-form recordings."""

from .clustering import cluster_segments, linkage_tree, tune_threshold
from .detect import DetectionMetrics, detect_dyadic, evaluate, ground_truth_label
from .formats import load_embeddings, parse_rttm, read_manifest, write_rttm
from .interaction import participant_profile, timing_features
from .stats import pearson, t_test_welch
from .timeline import SpeechSegment, Timeline, segment_windows

__version__ = "0.1.0"

__all__ = [
    "DetectionMetrics",
    "SpeechSegment",
    "Timeline",
    "cluster_segments",
    "detect_dyadic",
    "evaluate",
    "ground_truth_label",
    "linkage_tree",
    "load_embeddings",
    "parse_rttm",
    "participant_profile",
    "pearson",
    "read_manifest",
    "segment_windows",
    "t_test_welch",
    "timing_features",
    "tune_threshold",
    "write_rttm",
]
