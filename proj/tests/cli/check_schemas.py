"""Runs every shipped config with small budgets and checks the outputs.

Configs must validate against schemas/config.schema.json, reports against
schemas/report.schema.json, and every listed CSV must exist with a header row.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

QUICK = {
    "spectrum": ["length=2000", "starts=2"],
    "semiconj-residual": ["points=200"],
    "semiconj-fiber": ["points=3"],
    "growth": ["n_max=10"],
    "disint": ["sampler.samples=50000"],
    "entropy": ["sampler.samples=50000", "base_points=4"],
    "ineq-check": ["exponent_length=2000", "u.sampler.samples=20000", "wu.sampler.samples=20000",
                   "u.base_points=4", "wu.base_points=4"],
    "pliss": ["length=2000"],
    "kan-basins": ["grid=4", "horizon=2000"],
    "kan-singularity": ["samples=4096", "blocks=8", "nodes=64"],
}
EXPECTED_EXIT = {"kan_degenerate.json": 3}


def main(phlab: str, root: str) -> int:
    root_path = Path(root)
    config_schema = json.loads((root_path / "schemas/config.schema.json").read_text())
    report_schema = json.loads((root_path / "schemas/report.schema.json").read_text())
    failures = 0
    for cfg_path in sorted((root_path / "configs").glob("*.json")):
        cfg = json.loads(cfg_path.read_text())
        try:
            jsonschema.validate(cfg, config_schema)
            op = cfg["experiment"]["operation"]
            with tempfile.TemporaryDirectory() as out:
                args = [phlab, "run", "--config", str(cfg_path), "--out", out]
                for kv in QUICK.get(op, []):
                    args += ["-p", kv]
                proc = subprocess.run(args, capture_output=True, text=True, check=False)
                want = EXPECTED_EXIT.get(cfg_path.name, 0)
                if proc.returncode != want:
                    raise AssertionError(f"exit {proc.returncode}, expected {want}: {proc.stderr}")
                report = json.loads(proc.stdout)
                jsonschema.validate(report, report_schema)
                if json.loads((Path(out) / f"{op}.json").read_text()) != report:
                    raise AssertionError("report file differs from stdout")
                for table in report["tables"]:
                    lines = (Path(out) / table).read_text().splitlines()
                    if not lines or not lines[0] or lines[0][0].isdigit():
                        raise AssertionError(f"{table} has no header row")
            print(f"ok   {cfg_path.name}")
        except Exception as exc:  # noqa: BLE001 - report every config
            failures += 1
            print(f"FAIL {cfg_path.name}: {exc}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
