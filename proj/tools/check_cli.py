#!/usr/bin/env python3
"""End-to-end checks of the lagput command line: schemas, exit codes, determinism."""

import argparse
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

MARKET = {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2}


def load_schemas(directory):
    schemas = {}
    for path in sorted(Path(directory).glob("*.schema.json")):
        doc = json.loads(path.read_text())
        schemas[path.name] = doc
    registry = Registry().with_resources(
        (doc["$id"], Resource.from_contents(doc)) for doc in schemas.values())

    def validator(name):
        cls = jsonschema.validators.validator_for(schemas[name])
        cls.check_schema(schemas[name])
        return cls(schemas[name], registry=registry)

    return validator


class Checks:
    def __init__(self):
        self.failed = 0

    def expect(self, ok, what):
        print(f"[{'PASS' if ok else 'FAIL'}] {what}")
        self.failed += not ok


def run(cli, *args, env=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([cli, *args], capture_output=True, text=True, env=full_env)


def write(path, doc):
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schemas", required=True)
    args = ap.parse_args()
    validator = load_schemas(args.schemas)
    checks = Checks()

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        lagged = {"market": MARKET, "contract": {"maturity": 1, "lag": 0.25}, "grid": {"nx": 200, "nt": 200}}
        standard = {"market": MARKET, "contract": {"maturity": 1, "lag": 0}, "grid": {"nx": 200, "nt": 200},
                    "output": {"summary_json": "std.json"}}
        scenario_schema = validator("scenario.schema.json")
        for doc in (lagged, standard):
            checks.expect(scenario_schema.is_valid(doc), "example scenario matches the scenario schema")

        # price: two runs must be byte-identical and every document schema-valid
        for run_dir in ("a", "b"):
            res = run(args.cli, "price", "--scenario", str(write(tmp / "lagged.json", lagged)),
                      "--out", str(tmp / run_dir))
            checks.expect(res.returncode == 0, f"price run {run_dir} exits 0 (got {res.returncode})")
        names = sorted(p.name for p in (tmp / "a").iterdir())
        same = all((tmp / "a" / n).read_bytes() == (tmp / "b" / n).read_bytes() for n in names)
        checks.expect(len(names) == 5 and same, f"price artifacts byte-identical across runs ({names})")
        for name, schema in (("summary.json", "price-summary.schema.json"),
                             ("surface.json", "surface.schema.json"),
                             ("boundary.json", "boundary.schema.json")):
            errors = list(validator(schema).iter_errors(json.loads((tmp / "a" / name).read_text())))
            checks.expect(not errors, f"{name} matches {schema}" + (f": {errors[0].message}" if errors else ""))

        res = run(args.cli, "price", "--scenario", str(write(tmp / "std.json", standard)), "--out", str(tmp / "std"))
        checks.expect(res.returncode == 0 and (tmp / "std" / "std.json").exists(),
                      "zero-lag price honours the output name override")
        if (tmp / "std" / "std.json").exists():
            summary = json.loads((tmp / "std" / "std.json").read_text())
            checks.expect(validator("price-summary.schema.json").is_valid(summary)
                          and summary["data"]["x_bar"] is None and summary["data"]["standard_price"] is not None,
                          "zero-lag summary carries the standard price and null lag fields")

        # studies on small grids; large-maturity is known to fail its value check
        study = {"market": MARKET, "contract": {"maturity": 1, "lag": 0.25}, "grid": {"nx": 200, "nt": 200}}
        for name in ("lag-monotonicity", "small-lag", "large-maturity"):
            out = tmp / f"study-{name}"
            res = run(args.cli, "study", "--name", name, "--scenario", str(write(tmp / "study.json", study)),
                      "--out", str(out), env={"LAGPUT_WORKERS": "2"})
            checks.expect(res.returncode in (0, 4), f"study {name} exits 0 or 4 (got {res.returncode})")
            report_path = out / "report.json"
            if report_path.exists():
                report = json.loads(report_path.read_text())
                errors = list(validator("study-report.schema.json").iter_errors(report))
                checks.expect(not errors, f"{name} report matches the schema"
                              + (f": {errors[0].message}" if errors else ""))
                checks.expect((res.returncode == 0) == report["passed"], f"{name} exit code agrees with 'passed'")

        # input errors
        res = run(args.cli, "price", "--scenario", str(write(tmp / "bad.json", '{"market": {,}')), "--out",
                  str(tmp / "bad"))
        checks.expect(res.returncode == 2 and "line 1" in res.stderr + res.stdout,
                      f"malformed JSON exits 2 with a position (got {res.returncode})")
        extra = dict(lagged, colour="blue")
        res = run(args.cli, "price", "--scenario", str(write(tmp / "extra.json", extra)), "--out", str(tmp / "x"))
        checks.expect(res.returncode == 2 and not scenario_schema.is_valid(extra),
                      "unknown field rejected by both the CLI and the schema")
        bad_q = dict(lagged, market=dict(MARKET, dividend=0.06))
        res = run(args.cli, "price", "--scenario", str(write(tmp / "q.json", bad_q)), "--out", str(tmp / "q"))
        checks.expect(res.returncode == 2, f"dividend above the rate exits 2 (got {res.returncode})")
        res = run(args.cli, "study", "--name", "bogus", "--scenario", str(tmp / "study.json"), "--out", str(tmp / "q"))
        checks.expect(res.returncode == 2, f"unknown study name exits 2 (got {res.returncode})")

        # selftest, clean and with theta sabotaged
        res = run(args.cli, "selftest")
        checks.expect(res.returncode == 0, "selftest passes")
        res = run(args.cli, "selftest", env={"LAGPUT_SELFTEST_CORRUPT_THETA": "1"})
        checks.expect(res.returncode != 0, f"selftest with a sign-flipped theta fails (got {res.returncode})")

    print(f"{checks.failed} check(s) failed")
    return 1 if checks.failed else 0


if __name__ == "__main__":
    sys.exit(main())
