"""
Thick-walled cylinder under internal pressure
=============================================

Quarter of a plane-strain cylinder (r_i = 100, r_o = 200). First an elastic
check against the closed-form radial displacement, then a nearly
incompressible material pushed to collapse, comparing the nodal scheme with
the element-based one.

    python demos/thick_cylinder.py [n]
"""

import sys

import numpy as np

from nvem.bench import cylinder_limit_pressure, lame_solution, make_cylinder
from nvem.solver import Analysis, AnalysisConfig

n = int(sys.argv[1]) if len(sys.argv) > 1 else 24

# elastic: u_r at the bore and the outer surface
pb = make_cylinder(n, n, nu=0.3, p=50.0)
for method in ("nvem", "vem"):
    last = Analysis(pb, AnalysisConfig(method=method, num_steps=1)).run().last
    for label, r in (("A", 100.0), ("B", 200.0)):
        exact = lame_solution(pb.material, 100.0, 200.0, 50.0, r)
        print(f"{method:5s} u_r({r:.0f}) = {last.monitors[label][0]:.6e}  exact {exact:.6e}  "
              f"err {last.monitors[label][0] / exact - 1:+.3%}")

# nearly incompressible, ramped towards the collapse pressure
p_lim = cylinder_limit_pressure(240.0, 100.0, 200.0)
pb = make_cylinder(n, n, nu=0.4999, p=p_lim)
loads = np.concatenate([np.linspace(0.1, 0.9, 9), np.arange(0.92, 1.101, 0.02)])
print(f"\ncollapse pressure {p_lim:.4f}")
print(" p/p_lim   u_r(r_i) NVEM   u_r(r_i) VEM")
runs = {m: Analysis(pb, AnalysisConfig(method=m)).run(loads) for m in ("nvem", "vem")}
vem = {s.load_factor: s.monitors["A"][0] for s in runs["vem"]}
for s in runs["nvem"]:
    other = vem.get(s.load_factor)
    print(f"{s.load_factor:7.3f}   {s.monitors['A'][0]:13.6f}   {'' if other is None else f'{other:12.6f}'}")
res = runs["nvem"]
if res.limit_reached:
    print(f"NVEM stops at {res.last_converged_load:.3f} p_lim (step to {res.failed_load_factor:.3f} failed)")
