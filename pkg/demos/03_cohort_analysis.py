"""
From recordings to a cohort-level correlation
=============================================

Each simulated participant has a severity score and several day-long
recordings. We cut recordings into windows, call each window dyadic or
not, track the participant across windows, and correlate the per-person
dyadic ratio and response time with severity.

This uses the command-line interface end to end; expect about half a
minute of runtime.
"""

# %%
import json
import tempfile
from pathlib import Path

from dyadnet.cli import main

root = Path(tempfile.mkdtemp(prefix="dyadnet-cohort-"))
(root / "det.json").write_text(json.dumps({"kind": "detection", "corpus": {"n_recordings": 80}}))
(root / "cohort.json").write_text(json.dumps({"kind": "cohort", "n_participants": 24}))

# %%
# A spurious-cluster model is trained on a labelled detection corpus, then
# applied to the unlabelled cohort.
main(["simulate", "--config", str(root / "det.json"), "--out", str(root / "det"), "--seed", "0"])
main(["spurious-train", "--manifest", str(root / "det" / "manifest.json"), "--out", str(root / "spurious.json")])
main(["simulate", "--config", str(root / "cohort.json"), "--out", str(root / "cohort"), "--seed", "1"])

# %%
# The generator makes dyadic engagement rise with severity up to a cut of 10
# and fall beyond it, so the two halves should show opposite signs.
main(["analyze", "--manifest", str(root / "cohort" / "manifest.json"), "--threshold", "0.4",
      "--spurious", f"model={root / 'spurious.json'}", "--out", str(root / "analysis")])
print((root / "analysis" / "stats.csv").read_text())
