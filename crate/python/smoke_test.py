#!/usr/bin/env python3
"""Smoke test for the Python bindings.

Builds nothing itself: run `cargo build -p xacml-analyzer-py` first (or
`--release`), then `python3 python/smoke_test.py`.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

POLICIES = """\
rule r1 = [permit, target(subject(doctor)), true]
rule r2 = [deny, target(subject(nurse) & action(write)), true]
policy p1 = [null, <r1, r2>, po]
policyset ps1 = [null, <p1>, po]
"""

DOMAINS = """\
subjects: doctor, nurse
actions: read, write
"""


def import_module():
    candidates = [
        REPO / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libxacml_analyzer_py.so", "xacml_analyzer_py.so",
                     "libxacml_analyzer_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the bindings first: cargo build -p xacml-analyzer-py")
    stage = Path(tempfile.mkdtemp(prefix="xacml_py_"))
    shutil.copy(built, stage / "xacml_analyzer_py.so")
    sys.path.insert(0, str(stage))
    import xacml_analyzer_py
    return xacml_analyzer_py


def main():
    mod = import_module()
    engine = mod.PolicyEngine(POLICIES, DOMAINS)

    assert engine.evaluate("{subject(doctor), action(read)}") == "permit"
    assert engine.evaluate("{subject(nurse), action(write)}") == "deny"
    assert engine.evaluate("{subject(nurse), action(read)}") == "not_applicable"
    assert engine.evaluate("{subject(doctor), action(read)}", engine="lp") == "permit"
    assert engine.rule_ids() == ["r1", "r2"]

    report = json.loads(engine.analyze("gap", engine="lp"))
    assert report["task"] == "gap"
    assert report["total"] == 1
    assert report["witnesses"][0]["request"]["subject"] == "nurse"

    schema_path = REPO / "docs" / "report.schema.json"
    try:
        import jsonschema
    except ImportError:
        print("jsonschema not installed; skipping schema validation")
    else:
        schema = json.loads(schema_path.read_text())
        for task in ("gap", "conflict", "reachability"):
            for eng in ("native", "lp"):
                jsonschema.validate(json.loads(engine.analyze(task, engine=eng)), schema)

    program = engine.emit_lp("gap")
    assert "1 { subject(X) : subject_db(X) } 1.\n" in program
    models = mod.solve(program)
    assert len(models) == 1
    assert any(a == "subject(nurse)" for a in models[0])

    canonical = engine.canonical()
    assert canonical.splitlines()[0].startswith("rule r1")

    bad = False
    try:
        mod.PolicyEngine("rule r1 = [allow, null, true]", DOMAINS)
    except ValueError:
        bad = True
    assert bad, "parse errors should raise ValueError"

    print("python bindings smoke test: pass")


if __name__ == "__main__":
    main()
