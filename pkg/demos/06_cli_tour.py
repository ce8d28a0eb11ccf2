"""The command line: run, certify, sweep.

Equivalent shell commands:
    attitrack run --scenario 2 --duration 20 --out /tmp/att
    attitrack certify --run-dir /tmp/att/scenario2 --fd-samples 20
    attitrack sweep --scenario 2 --duration 20 --key delta --values 0.1 0.3 1.0 --jobs 3

Run: python demos/06_cli_tour.py
"""

import os
import tempfile

from attitrack.cli import main

out = tempfile.mkdtemp(prefix="attitrack-")
print("exit", main(["run", "--scenario", "2", "--duration", "20", "--out", out]))
print("files:", sorted(os.listdir(os.path.join(out, "scenario2"))))
code = main(["certify", "--run-dir", os.path.join(out, "scenario2"), "--fd-samples", "20"])
print("certify exit", code)
print("exit", main(["sweep", "--scenario", "2", "--duration", "20", "--key", "delta",
                    "--values", "0.1", "0.3", "1.0", "--jobs", "3", "--out", out]))
with open(os.path.join(out, "sweep_delta.csv")) as fh:
    for line in fh:
        print("  " + ",".join(line.strip().split(",")[:6]))
