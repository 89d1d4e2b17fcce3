"""``dyadnet`` command-line interface.

Subcommands::

    simulate         generate a synthetic corpus from a JSON config
    tune             pick the clustering threshold on the dev split
    eval             detection metrics on the eval split, table layout
    analyze          per-participant interaction features and statistics
    spurious-train   fit the spurious-cluster forest on the dev split
    baseline-train   fit the segment-timing baseline forest
    baseline-predict apply a baseline forest to recordings

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import pipeline
from .baseline import BaselineModel, compute_vad_features, predict_baseline
from .clustering import default_grid, tune_threshold
from .detect import MetricsRow, format_metrics_table, metrics_csv, parse_spurious_mode
from .errors import DyadError, TooFewSegments
from .formats import CorpusManifest, atomic_write_text, load_recording, read_manifest
from .interaction import DEFAULT_TOP_K, profiles_csv
from .learn import ForestConfig, dumps_forest, loads_forest
from .synthgen import simulate_from_config
from .timeline import DEFAULT_WINDOW_SECS

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

WITH_SECTION = "With Spurious Speaker Detection"
WITHOUT_SECTION = "Without Spurious Speaker Detection"
BASELINE_SECTION = "Baseline RF Model"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def parse_grid(text: str) -> list[float]:
    """``default``, a comma list ``0.2,0.4``, or an inclusive range
    ``start:stop:step``."""
    text = text.strip()
    if text == "default":
        return default_grid()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step))
            return [round(start + i * step, 10) for i in range(n + 1) if start + i * step <= stop + 1e-9]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use default, a,b,c or start:stop:step") from None


def _spurious(text: str) -> str:
    if text in ("off", "heuristic") or text.startswith(("heuristic=", "model=")):
        return text
    raise argparse.ArgumentTypeError(f"bad spurious mode {text!r}; use off, heuristic or model=<path>")


def _common(p: argparse.ArgumentParser, *, manifest=True, jobs=True, seed=False) -> None:
    if manifest:
        p.add_argument("--manifest", required=True, type=Path, help="corpus manifest (JSON)")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    if jobs:
        p.add_argument("--jobs", type=_positive_int, default=1,
                       help="worker processes; output does not depend on it (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyadnet", description="Dyadic interaction detection and analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic corpus",
                       description="Generate a synthetic cohort or detection corpus from a JSON config.")
    p.add_argument("--config", type=Path, help="JSON config; omitted means a default 32-participant cohort")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    _common(p, manifest=False)

    p = sub.add_parser("tune", help="choose the clustering threshold",
                       description="Grid-search the clustering threshold on the dev split; "
                                   "prints the accuracy per threshold as CSV, then the chosen threshold.")
    _common(p)
    p.add_argument("--grid", type=parse_grid, default=None,
                   help="thresholds: default, a,b,c or start:stop:step (default 0.1:1.5:0.05)")
    p.add_argument("--spurious", type=_spurious, default="heuristic",
                   help="off, heuristic, heuristic=<share> or model=<path> (default heuristic)")
    p.add_argument("--out", type=Path, help="also write the CSV to this file")

    p = sub.add_parser("eval", help="detection metrics",
                       description="Detection metrics on the eval split, one row per spurious mode plus "
                                   "the baseline. Without --threshold each mode is tuned on the dev split.")
    _common(p, seed=True)
    p.add_argument("--threshold", type=_positive_float, help="clustering threshold")
    p.add_argument("--grid", type=parse_grid, default=None, help="tuning grid when --threshold is absent")
    p.add_argument("--spurious", type=_spurious, action="append",
                   help="repeatable; default runs heuristic and off")
    p.add_argument("--baseline-model", type=Path, help="baseline forest; default trains one on the dev split")
    p.add_argument("--no-baseline", action="store_true", help="skip the baseline row")
    p.add_argument("--out", type=Path, help="directory for metrics.csv and metrics.txt")

    p = sub.add_parser("analyze", help="participant interaction analysis",
                       description="Window-level dyadic detection, per-participant dyadic ratio and timing, "
                                   "and their correlations with severity scores.")
    _common(p)
    p.add_argument("--threshold", type=_positive_float, required=True, help="clustering threshold")
    p.add_argument("--spurious", type=_spurious, default="heuristic",
                   help="off, heuristic, heuristic=<share> or model=<path> (default heuristic)")
    p.add_argument("--window-secs", type=_positive_float, default=DEFAULT_WINDOW_SECS,
                   help=f"window length in seconds (default {DEFAULT_WINDOW_SECS:g})")
    p.add_argument("--top-k", type=_positive_int, default=DEFAULT_TOP_K,
                   help=f"dyadic windows used for timing (default {DEFAULT_TOP_K})")
    p.add_argument("--cut", type=int, default=10, help="severity split point (default 10)")
    p.add_argument("--out", type=Path, required=True,
                   help="directory for participants.csv, stats.csv and summary.txt")

    p = sub.add_parser("spurious-train", help="fit the spurious-cluster forest",
                       description="Cluster dev recordings at each grid threshold and fit a forest "
                                   "separating spurious from genuine clusters.")
    _common(p, seed=True)
    p.add_argument("--grid", type=parse_grid, default=None,
                   help="clustering thresholds for training rows (default every 4th default threshold)")
    p.add_argument("--out", type=Path, required=True, help="model file (JSON)")

    p = sub.add_parser("baseline-train", help="fit the baseline forest",
                       description="Fit the segment-timing baseline on the dev split.")
    _common(p, seed=True)
    p.add_argument("--out", type=Path, required=True, help="model file (JSON)")

    p = sub.add_parser("baseline-predict", help="apply the baseline forest",
                       description="Predict dyadic/non-dyadic for every recording in the manifest.")
    _common(p)
    p.add_argument("--model", type=Path, required=True, help="model from baseline-train")
    p.add_argument("--out", type=Path, help="CSV file; default prints to stdout")
    return parser


# --------------------------------------------------------------------------
# helpers


def _require_split(m: CorpusManifest, split: str, jobs: int):
    if m.split(split):
        return pipeline.labeled_split(m, split, jobs)
    raise UsageError(f"manifest has no recordings in the {split!r} split")


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(path, text)


def _section(mode: str) -> str:
    return WITHOUT_SECTION if mode == "off" else WITH_SECTION


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(a) -> None:
    config = {}
    if a.config is not None:
        try:
            config = json.loads(a.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{a.config}: invalid JSON ({exc})") from None
        if not isinstance(config, dict):
            raise ValueError(f"{a.config}: config must be a JSON object")
    try:
        path = simulate_from_config(config, a.out, a.seed, a.jobs)
    except TypeError as exc:  # unknown config keys
        raise ValueError(f"bad config: {exc}") from None
    print(path)


def cmd_tune(a) -> None:
    m = read_manifest(a.manifest)
    dev = _require_split(m, "dev", a.jobs)
    report = tune_threshold(dev, a.grid, parse_spurious_mode(a.spurious))
    lines = ["threshold,accuracy"]
    lines += [f"{t:.4f},{acc:.6f}" for t, acc in zip(report.grid, report.accuracy_per_threshold)]
    csv = "\n".join(lines) + "\n"
    if a.out is not None:
        _emit(csv, a.out)
    sys.stdout.write(csv)
    print(f"best_threshold={report.best_threshold:.4f} accuracy={report.best_accuracy:.6f}")


def _mode_label(mode: str, modes: list[str]) -> str:
    # Keep absolute paths out of the report so it is portable between machines.
    if not mode.startswith("model="):
        return mode
    if sum(x.startswith("model=") for x in modes) == 1:
        return "model"
    return f"model {Path(mode[len('model='):]).name}"


def cmd_eval(a) -> None:
    m = read_manifest(a.manifest)
    ev = _require_split(m, "eval", a.jobs)
    needs_dev = a.threshold is None or (not a.no_baseline and a.baseline_model is None)
    dev = _require_split(m, "dev", a.jobs) if needs_dev else []
    modes = a.spurious or ["heuristic", "off"]
    rows = []
    for mode in modes:
        spurious = parse_spurious_mode(mode)
        thr = a.threshold
        if thr is None:
            thr = tune_threshold(dev, a.grid, spurious).best_threshold
        metrics = pipeline.detection_metrics(ev, thr, spurious, a.jobs)
        same_section = sum(_section(x) == _section(mode) for x in modes)
        dataset = "eval" if same_section == 1 else f"eval {_mode_label(mode, modes)}"
        rows.append(MetricsRow(_section(mode), dataset, thr, metrics))
    if not a.no_baseline:
        if a.baseline_model is not None:
            model = BaselineModel(loads_forest(a.baseline_model.read_text(encoding="utf-8")))
        else:
            model = pipeline.fit_baseline(dev, a.seed)
        rows.append(MetricsRow(BASELINE_SECTION, "eval", None, pipeline.baseline_metrics(model, ev)))
    order = {WITH_SECTION: 0, WITHOUT_SECTION: 1, BASELINE_SECTION: 2}
    rows.sort(key=lambda r: order[r.section])
    table = format_metrics_table(rows)
    if a.out is not None:
        a.out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(a.out / "metrics.csv", metrics_csv(rows))
        atomic_write_text(a.out / "metrics.txt", table)
    sys.stdout.write(table)


def cmd_analyze(a) -> None:
    m = read_manifest(a.manifest)
    if not m.participants:
        raise ValueError(f"{a.manifest}: manifest lists no participants")
    profiles = pipeline.participant_profiles(
        m, a.threshold, parse_spurious_mode(a.spurious), a.window_secs, a.top_k, a.jobs
    )
    rows = pipeline.analysis_rows(profiles, a.cut)
    summary = pipeline.analysis_summary(profiles, rows)
    a.out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(a.out / "participants.csv", profiles_csv(profiles))
    atomic_write_text(a.out / "stats.csv", pipeline.analysis_csv(rows))
    atomic_write_text(a.out / "summary.txt", summary)
    sys.stdout.write(summary)


def cmd_spurious_train(a) -> None:
    m = read_manifest(a.manifest)
    dev = _require_split(m, "dev", a.jobs)
    grid = a.grid if a.grid is not None else default_grid()[::4]
    forest = pipeline.train_spurious_on(dev, grid, ForestConfig(seed=a.seed))
    _emit(dumps_forest(forest), a.out)
    print(f"wrote {a.out}")


def cmd_baseline_train(a) -> None:
    m = read_manifest(a.manifest)
    model = pipeline.fit_baseline(_require_split(m, "dev", a.jobs), a.seed)
    _emit(dumps_forest(model.forest), a.out)
    print(f"wrote {a.out}")


def cmd_baseline_predict(a) -> None:
    m = read_manifest(a.manifest)
    model = BaselineModel(loads_forest(a.model.read_text(encoding="utf-8")))
    lines = ["recording_id,is_dyadic,dyadic_vote_share"]
    for entry in m.recordings:
        t, _ = load_recording(entry)
        try:
            dyadic, share = predict_baseline(model, compute_vad_features(t))
        except TooFewSegments:
            dyadic, share = False, 0.0
        lines.append(f"{entry.recording_id},{int(dyadic)},{share:.6f}")
    _emit("\n".join(lines) + "\n", a.out)


COMMANDS = {
    "simulate": cmd_simulate,
    "tune": cmd_tune,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "spurious-train": cmd_spurious_train,
    "baseline-train": cmd_baseline_train,
    "baseline-predict": cmd_baseline_predict,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dyadnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DyadError, OSError, ValueError, KeyError) as exc:
        print(f"dyadnet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
