"""Run every subcommand briefly; check summaries against the JSON schema and CSV headers against docs."""

import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

CURVE_COLUMNS = [
    "curve", "abscissa", "x", "raw", "background1", "background2", "net", "raw_error", "net_error",
    "expected_raw", "expected_raw_error", "expected_net", "expected_net_error", "raw_cps", "net_cps",
    "expected_net_cps",
]
COLUMNS = {
    "source-test": CURVE_COLUMNS,
    "hom": CURVE_COLUMNS,
    "teleport": CURVE_COLUMNS,
    "swap": CURVE_COLUMNS,
    "rates": ["quantity", "cps"],
    "validate": ["scenario", "observable", "mu", "exact_probability", "trials", "count", "mc_probability", "z"],
    "sweep": [
        "value", "mu1", "mu2", "rep_rate", "curve", "v_raw", "v_raw_error", "v_net", "v_net_error",
        "v_raw_expected", "v_raw_expected_error", "v_net_expected", "v_net_expected_error",
    ],
}


def main(cli: str, schema_path: str) -> int:
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for command, columns in COLUMNS.items():
            args = [cli, command, "--pulses", "20000", "--seed", "3", "--out-dir", tmp]
            run = subprocess.run(args, capture_output=True, text=True)
            # validate exits 1 when a z-score reaches 3; files are written either way.
            if run.returncode not in (0, 1) or (run.returncode == 1 and command != "validate"):
                print(f"{command}: exit {run.returncode}\n{run.stderr}")
                failures += 1
                continue
            summary = json.loads(pathlib.Path(tmp, f"{command}.summary.json").read_text())
            errors = sorted(validator.iter_errors(summary), key=str)
            for e in errors:
                print(f"{command}: {'/'.join(map(str, e.path))}: {e.message}")
            failures += bool(errors)
            lines = pathlib.Path(tmp, f"{command}.csv").read_text().splitlines()
            if not lines[0].startswith("# manifest="):
                print(f"{command}: missing manifest comment line")
                failures += 1
            rows = list(csv.reader(lines[1:]))
            if rows[0] != columns:
                print(f"{command}: header {rows[0]}")
                failures += 1
            if any(len(r) != len(columns) for r in rows[1:]) or len(rows) < 2:
                print(f"{command}: ragged or empty rows")
                failures += 1
            print(f"{command}: ok" if not failures else f"{command}: checked")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
