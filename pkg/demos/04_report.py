"""
A full report from the command line
===================================

The same pipeline the ``thriftindex`` command runs, on a synthetic batch.
Outputs go to a temporary directory; re-running gives identical files.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from thriftindex import random_scenarios, simulate
from thriftindex.panel import panels_to_csv

out = Path(tempfile.mkdtemp())
panels = [simulate(s) for kind, seed in [("thrift", 1), ("free_growth", 2)]
          for s in random_scenarios(kind, 6, 25, seed=seed, noise_sd=0.005, prefix=kind[0].upper())]
(out / "panels.csv").write_text(panels_to_csv(panels))

subprocess.run([sys.executable, "-m", "thriftindex", "report",
                "--input", str(out / "panels.csv"), "--out", str(out / "report")], check=True)

print()
print((out / "report" / "table2.txt").read_text())
print((out / "report" / "theta.txt").read_text())
print(sorted(p.name for p in (out / "report").iterdir()))
