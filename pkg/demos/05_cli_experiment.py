"""Driving a complete experiment through the command-line interface.

The driver reads a JSON config (unknown keys are rejected), generates data,
adds noise, inverts, and writes CSV files plus a JSON run report.  The same
thing from a shell:

    parabolic-qr defaults > config.json        # edit as needed
    parabolic-qr run config.json --delta 0.05 --seed 3 -o results/

Run:  python demos/05_cli_experiment.py
"""

import json
import tempfile
from pathlib import Path

from parabolic_qr.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    config = {"test": "test2", "grid": {"nx": 30, "nt": 20}, "delta": 0.05, "seed": 3}
    (tmp / "config.json").write_text(json.dumps(config))

    status = main(["run", str(tmp / "config.json"), "-o", str(tmp / "out")])
    print("exit status:", status)
    for path in sorted((tmp / "out").iterdir()):
        print(f"  {path.name:16s} {path.stat().st_size:8d} bytes")
    print("\nmetrics.csv:")
    print((tmp / "out" / "metrics.csv").read_text())

    report = json.loads((tmp / "out" / "run_report.json").read_text())
    print("summary:", json.dumps(report["summary"], indent=2))

    # A configuration error exits with status 1 and a JSON diagnostic on stderr.
    (tmp / "bad.json").write_text(json.dumps({"grid": {"nx": 30}, "epsilon": -1}))
    print("\nbad config exit status:", main(["run", str(tmp / "bad.json")]))
