#!/usr/bin/env python3
"""Regenerates the replay transcripts under data/fixtures/.

Reference transcripts are recorded with `adnctl record`. The pass@k set under
passk/ replays one request over three seeds; the seed-2 code reply is
corrupted with an undeclared variable so that exactly one attempt fails.
"""
import json
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "data" / "fixtures"


def record(adnctl, out, ids, ablations, seeds):
    subprocess.run([adnctl, "record", "--ids", ids, "--ablations", ablations, "--seeds", seeds,
                    "--out", str(out)], check=True)


def corrupt_code_reply(path):
    doc = json.loads(path.read_text())
    code = [r for r in doc["records"] if r["stage"] == "code"]
    if not code:
        sys.exit(f"{path}: no code record")
    code[-1]["response"] += "lin broken.row tag=additional: P_undeclared_0 <= 1\n"
    path.write_text(json.dumps(doc, indent=1) + "\n")


def main():
    adnctl = sys.argv[1] if len(sys.argv) > 1 else str(ROOT / "build" / "adnctl")
    record(adnctl, FIXTURES, "valley-01", "all", "1")
    record(adnctl, FIXTURES / "passk", "hamlet-01", "full", "1,2,3")
    corrupt_code_reply(FIXTURES / "passk" / "hamlet-01__s2__full.json")


if __name__ == "__main__":
    main()
