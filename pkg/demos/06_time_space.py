"""Time-space export for one horizontal route of the 2x1 grid.

Writes ``timespace.csv`` through the command-line interface and prints a
coarse text rendering: one row per second, ``A`` for AVs and ``o`` for
other vehicles, the junction marked at 100 m.
"""

import csv
import sys
from pathlib import Path

from mixed_autonomy.cli import main

out = Path("runs/timespace_demo")
args = ["timespace", "--config", "configs/desk_2x1.json", "--out", str(out), "--lanes", "0", "--steps", "160"]
if len(sys.argv) > 1:  # a checkpoint lets the learned policy drive the AVs
    args += ["--controller", "learned", "--checkpoint", sys.argv[1]]
else:
    args += ["--controller", "equal_phase"]
if main(args) != 0:
    sys.exit(1)

width, scale = 50, 4.0  # 4 m per character over the 200 m route
frames: dict[float, list[str]] = {}
with open(out / "timespace.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        t = float(row["time_s"])
        if t != int(t):
            continue
        line = frames.setdefault(t, [" "] * width)
        x = min(int(float(row["position_m"]) / scale), width - 1)
        line[x] = "A" if row["class"] == "AV" else "o"
for t, line in sorted(frames.items()):
    line[int(100 / scale)] = "|" if line[int(100 / scale)] == " " else line[int(100 / scale)]
    print(f"{t:5.0f}s {''.join(line)}")
