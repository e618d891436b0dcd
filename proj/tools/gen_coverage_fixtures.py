#!/usr/bin/env python3
# Copyright 2026 The ctga Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic google/nordunet coverage fixtures under data/coverage.

Probe weights are address counts; every fixture totals 1000 addresses over
its successful probes, so weighted fractions are exact thousandths.
"""

import json
import os
import sys

TARGETS = {
    "google": (15169, "216.239.32.0/19", "216.239.34.64"),
    "nordunet": (2603, "194.68.13.0/24", "194.68.13.48"),
}


def transit(i):
    return ("T", i)


def ixp(i):
    return ("X", i)


# (weight, vantage path). T<i> is AS 64500+i; X<i> is IXP i.
FIXTURES = {
    "google": [
        (200, [transit(1)]),
        (116, [transit(5), transit(40)]),
        (300, [transit(40)]),
        (124, [transit(41), transit(45)]),
        (160, [ixp(1), transit(50)]),
        (100, [transit(33), ixp(2), transit(34)]),
    ],
    "nordunet": [
        (400, [transit(2), ixp(3)]),
        (181, [ixp(4), transit(10), transit(51)]),
        (4, [ixp(3), transit(52)]),
        (215, [transit(42), transit(43)]),
        (200, [transit(33)]),
    ],
}


def blocks(weight, base):
    """Aligned prefixes covering exactly |weight| addresses from |base|."""
    out = []
    cursor = base
    for bit in range(31, -1, -1):
        size = 1 << bit
        if weight & size:
            out.append("%s/%d" % (ip(cursor), 32 - bit))
            cursor += size
    return out


def ip(n):
    return ".".join(str((n >> s) & 0xFF) for s in (24, 16, 8, 0))


def hop(vp, k=1):
    kind, i = vp
    if kind == "T":
        return "100.64.%d.%d" % (i, k)
    return "198.18.%d.%d" % (i, k)


def write(outdir, name, groups):
    target_asn, target_prefix, target_addr = TARGETS[name]
    d = os.path.join(outdir, name)
    os.makedirs(d, exist_ok=True)
    rib = ["prefix,asn", "%s,%d" % (target_prefix, target_asn)]
    for i in range(1, 61):
        rib.append("100.64.%d.0/24,%d" % (i, 64500 + i))
    ixps = ["prefix,ixp_id,name"]
    for i in range(1, 6):
        ixps.append("198.18.%d.0/24,%d,IX-%d" % (i, i, i))
    rows = []
    probe = 0
    for g, (weight, path) in enumerate(groups):
        probe += 1
        asn = 65100 + probe
        base = (10 << 24) | (probe << 16)
        for p in blocks(weight, base):
            rib.append("%s,%d" % (p, asn))
        for day in range(20):
            hops = [ip(base + 1)]
            for j, vp in enumerate(path):
                hops.append(hop(vp, 1 + j))
                if j == 0:
                    hops.append(None)  # a silent router
            hops += [target_addr]
            # The first probe moves to a second upstream from day 10 on.
            if g == 0 and day >= 10:
                hops.insert(-1, hop(transit(60)))
            rows.append({"probe_id": probe, "probe_asn": asn, "target": name,
                         "target_address": target_addr, "day": day, "hops": hops})
    # A probe whose measurements all timed out; excluded from every
    # denominator even though its AS has address space.
    probe += 1
    rib.append("10.%d.0.0/16,%d" % (probe, 65100 + probe))
    rows.append({"probe_id": probe, "probe_asn": 65100 + probe, "target": name,
                 "target_address": target_addr, "day": 0, "hops": [None] * 5})
    ranking = ["rank,asn"] + ["%d,%d" % (r, 64500 + r) for r in range(1, 41)]
    with open(os.path.join(d, "rib.csv"), "w") as f:
        f.write("\n".join(rib) + "\n")
    with open(os.path.join(d, "ixp.csv"), "w") as f:
        f.write("\n".join(ixps) + "\n")
    with open(os.path.join(d, "ranking.csv"), "w") as f:
        f.write("\n".join(ranking) + "\n")
    with open(os.path.join(d, "traceroutes.jsonl"), "w") as f:
        for r in rows:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "data", "coverage")
    for name, groups in FIXTURES.items():
        write(outdir, name, groups)


if __name__ == "__main__":
    main()
