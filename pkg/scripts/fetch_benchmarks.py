#!/usr/bin/env python3
"""Download the classic orienteering benchmark sets into ./instances.

The published Tsiligirides point sets are distributed by their maintainers
and are not bundled with this repository.  This script fetches them from
the mirrors below; run it on a machine with network access, then point
runs at a file via ``--instance`` or the IMPDR_KOP_INSTANCE environment
variable.

Usage:
    python3 scripts/fetch_benchmarks.py [dest_dir]
"""

import sys
import urllib.request
from pathlib import Path

MIRRORS = [
    # (filename, url)
    ("tsiligirides_problem_1_budget_85.txt",
     "https://www.mech.kuleuven.be/en/cib/op/instances/OP_instances/"
     "tsiligirides_problem_1_budget_85.txt"),
    ("tsiligirides_problem_2_budget_40.txt",
     "https://www.mech.kuleuven.be/en/cib/op/instances/OP_instances/"
     "tsiligirides_problem_2_budget_40.txt"),
    ("tsiligirides_problem_3_budget_110.txt",
     "https://www.mech.kuleuven.be/en/cib/op/instances/OP_instances/"
     "tsiligirides_problem_3_budget_110.txt"),
]


def main(argv):
    dest = Path(argv[1]) if len(argv) > 1 else Path("instances")
    dest.mkdir(parents=True, exist_ok=True)
    failures = 0
    for fname, url in MIRRORS:
        out = dest / fname
        if out.exists():
            print(f"already present: {out}")
            continue
        try:
            print(f"fetching {url}")
            with urllib.request.urlopen(url, timeout=30) as resp:
                out.write_bytes(resp.read())
            print(f"  wrote {out}")
        except OSError as exc:
            failures += 1
            print(f"  FAILED: {exc}")
    if failures:
        print(f"{failures} download(s) failed; if the mirror moved, check "
              "the maintainers' orienteering instance page and place files "
              f"under {dest}/ manually.")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
