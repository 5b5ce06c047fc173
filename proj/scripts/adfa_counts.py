#!/usr/bin/env python3
# Copyright 2026 The scs2s Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Counts traces and sliding windows in an ADFA-LD style tree.

Written separately from the C++ ingest so the two can be compared. Prints
key=value lines; --check FILE compares against a saved copy instead.
"""

import argparse
import pathlib
import re
import sys

LENGTHS = (10, 12, 15, 18, 20, 22, 25, 30)


def traces(folder):
    for f in sorted(p for p in folder.rglob("*") if p.is_file()):
        calls = f.read_text().split()
        if calls:
            yield calls


def windows(n, length, stride):
    return 0 if n < length else (n - length) // stride + 1


def count(root, stride):
    root = pathlib.Path(root)
    out = {}
    lengths_all = []
    distinct = set()
    for key, sub in (("normal_training", "Training_Data_Master"),
                     ("normal_validation", "Validation_Data_Master")):
        ts = list(traces(root / sub))
        out[key] = len(ts)
        lengths_all += [len(t) for t in ts]
        distinct.update(c for t in ts for c in t)
    kinds = {}
    for d in sorted((root / "Attack_Data_Master").iterdir()):
        if not d.is_dir():
            continue
        kind = re.sub(r"_\d+$", "", d.name)
        ts = list(traces(d))
        kinds[kind] = kinds.get(kind, 0) + len(ts)
        lengths_all += [len(t) for t in ts]
        distinct.update(c for t in ts for c in t)
    for kind, n in sorted(kinds.items()):
        out["attack:" + kind] = n
    out["attack_total"] = sum(kinds.values())
    out["vocabulary"] = len(distinct)
    out["too_short"] = sum(1 for n in lengths_all if n < min(LENGTHS))
    total = 0
    for length in LENGTHS:
        w = sum(windows(n, length, stride) for n in lengths_all)
        out["windows:%d" % length] = w
        total += w
    out["windows_total"] = total
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("root")
    ap.add_argument("--stride", type=int, default=10)
    ap.add_argument("--check", help="expected key=value file")
    args = ap.parse_args()
    text = "".join("%s=%s\n" % kv for kv in count(args.root, args.stride).items())
    if args.check:
        want = pathlib.Path(args.check).read_text()
        if want != text:
            sys.stderr.write("counts differ from %s:\n%s" % (args.check, text))
            return 1
        return 0
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
