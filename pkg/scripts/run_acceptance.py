"""Evaluate acceptance criteria 1-9 and print one PASS/FAIL line each."""

import argparse
import json
import sys

from timeop.acceptance import CRITERIA, evaluate


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    ap.add_argument("--json", help="write the results to this file")
    args = ap.parse_args(argv)
    numbers = args.only or [c.number for c in CRITERIA]
    results = [evaluate(n) for n in numbers]
    for r in results:
        print(r.line())
    if args.json:
        data = [{"criterion": r.criterion.number, "passed": r.passed, "elapsed": r.elapsed,
                 "checks": [c.to_dict() for c in r.checks + r.extra]} for r in results]
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
