"""
Square block in plane-strain tension
====================================

Top edge pulled up by 0.5 mm, bottom on rollers. With perfect plasticity the
reaction levels off at the plane-strain limit load; the element-based scheme
keeps climbing because it locks.
"""

import sys

from nvem.bench import make_tension, tension_limit_load
from nvem.solver import Analysis, AnalysisConfig

n = int(sys.argv[1]) if len(sys.argv) > 1 else 16
pb = make_tension(n)
limit = tension_limit_load(pb.material.initial_yield, 100.0)

runs = {m: Analysis(pb, AnalysisConfig(method=m)).run() for m in ("nvem", "vem")}
print("  u_top     NVEM force      VEM force")
for a, b in zip(runs["nvem"], runs["vem"]):
    u = a.monitors["top"][1]
    print(f"{u:7.4f}  {abs(a.reaction_sum[1]):13.1f}  {abs(b.reaction_sum[1]):13.1f}")
print(f"limit load {limit:.1f}")
