"""
Rough rigid punch
=================

A punch of half-width 500 indents a nearly incompressible, perfectly
plastic half-space (symmetry half modelled, polygonal cells). Prints the
mean punch pressure against the slip-line limit and a pressure-roughness
indicator for both schemes. Level 3 takes several minutes.

    python demos/punch.py [level]
"""

import sys
import time

from nvem.bench import checkerboard_indicator, make_prandtl, prandtl_limit_pressure
from nvem.io import step_fields, write_vtk
from nvem.solver import Analysis, AnalysisConfig

level = int(sys.argv[1]) if len(sys.argv) > 1 else 1
pb = make_prandtl(level)
q_lim = prandtl_limit_pressure(pb.material.initial_yield)
a = pb.params["a"]
pairs = pb.mesh.node_neighbour_pairs()
print(f"{pb.mesh.num_elements} cells, {pb.mesh.num_dofs} dof; limit pressure {q_lim:.2f}")

for method in ("nvem", "vem"):
    t0 = time.perf_counter()
    res = Analysis(pb, AnalysisConfig(method=method)).run()
    q = [-s.reaction_sum[1] / a for s in res]
    cb = checkerboard_indicator(res.last.nodal_pressure, pairs)
    print(f"{method}: q = {q[-1]:.2f} ({q[-1] / q_lim - 1:+.1%}), roughness {cb:.3f}, "
          f"{sum(s.newton_iters for s in res)} iterations, {time.perf_counter() - t0:.0f} s")
    write_vtk(pb.mesh, step_fields(res.last), f"punch_{method}.vtk")
