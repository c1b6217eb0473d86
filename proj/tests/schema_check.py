"""Validates reports produced by the CLI against the shipped JSON schema.

Exits 77 (ctest skip) when the jsonschema package is unavailable.
"""

import json
import os
import subprocess
import sys
import tempfile

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)


def main(cli, schema_path):
    with open(schema_path) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    cases = [
        ["--height", "5"],
        ["--height", "2", "--subdivisions", "4"],
        ["--count", "0", "--subdivisions", "4"],
        ["--count", "16", "--height", "4", "--profile", "gaussian"],
    ]
    failures = 0
    with tempfile.TemporaryDirectory(prefix="spicula_schema_") as tmp:
        for i, args in enumerate(cases):
            mesh = os.path.join(tmp, f"case{i}.off")
            subprocess.run([cli, "synth", "--out", mesh, *args], check=True)
            extra = ["--radiologist-score", "3"] if i % 2 else []
            proc = subprocess.run([cli, "analyze", mesh, *extra], check=True, capture_output=True, text=True)
            report = json.loads(proc.stdout)
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for e in errors:
                print(f"case {i}: {list(e.path)}: {e.message}")
            failures += bool(errors)
            print(f"case {i} ({' '.join(args)}): {'ok' if not errors else 'INVALID'}, n_spikes={report['n_spikes']}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
