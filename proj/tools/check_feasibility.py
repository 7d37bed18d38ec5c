#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Independent feasibility check for maee outputs.

Accepts sweep output directories (designs.csv) and single-run reports
(single.json, or a directory holding one). Every antenna must lie in the
closed square [-X/2, X/2]^2 and every pair must be at least D - 1e-9 apart.
Exits 0 when all designs pass, 1 otherwise, 2 on unreadable input.
"""
import csv
import itertools
import json
import math
import os
import sys
from collections import defaultdict

TOL = 1e-9


def check_layout(points, side, min_dist):
    errors = []
    half = side / 2.0
    for k, (x, y) in enumerate(points):
        if not (-half <= x <= half and -half <= y <= half):
            errors.append(f"antenna {k} at ({x!r}, {y!r}) outside region of side {side!r}")
    for (i, p), (j, q) in itertools.combinations(enumerate(points), 2):
        d = math.hypot(p[0] - q[0], p[1] - q[1])
        if d < min_dist - TOL:
            errors.append(f"antennas {i},{j} only {d!r} apart (min {min_dist!r})")
    return errors


def check_designs_csv(path):
    groups = defaultdict(list)
    meta = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            key = (row["value"], row["scheme"], row["draw"], row["side"])
            groups[key].append((int(row["antenna"]), float(row["x"]), float(row["y"])))
            meta[key] = (float(row["region_side"]), float(row["min_dist"]))
    failures = []
    for key, rows in groups.items():
        pts = [(x, y) for _, x, y in sorted(rows)]
        for e in check_layout(pts, *meta[key]):
            failures.append(f"{path} {key}: {e}")
    return len(groups), failures


def check_single_json(path):
    with open(path) as f:
        rep = json.load(f)
    failures = []
    for name, side in (("final_t", rep["region_tx"]), ("final_r", rep["region_rx"])):
        pts = [tuple(p) for p in rep[name]]
        failures += [f"{path} {name}: {e}" for e in check_layout(pts, side, rep["min_dist"])]
    return 2, failures


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    checked = 0
    failures = []
    for target in argv[1:]:
        paths = []
        if os.path.isdir(target):
            for name in ("designs.csv", "single.json"):
                p = os.path.join(target, name)
                if os.path.exists(p):
                    paths.append(p)
        elif os.path.exists(target):
            paths.append(target)
        if not paths:
            print(f"no design files found in {target}", file=sys.stderr)
            return 2
        for p in paths:
            n, fails = check_designs_csv(p) if p.endswith(".csv") else check_single_json(p)
            checked += n
            failures += fails
    for line in failures:
        print(line)
    print(f"checked {checked} layouts, {len(failures)} violations")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
