"""Generate the 30-cell Voronoi mesh of the unit square used by the patch tests.

Seeds are mirrored across the four sides so every cell of the original
seeds is bounded and clipped exactly to the square. Run once; the output
is checked in under tests/data.
"""

import sys
from pathlib import Path

import numpy as np
from scipy.spatial import Voronoi
from shapely.geometry import Polygon, box

from nvem.mesh import Mesh, polygon_area, write_mesh


def voronoi_square(n_cells: int, seed: int) -> Mesh:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.05, 0.95, size=(n_cells, 2))
    mirrored = [pts, pts * [-1, 1], pts * [1, -1], [2, 0] + pts * [-1, 1], [0, 2] + pts * [1, -1]]
    vor = Voronoi(np.concatenate(mirrored))
    square = box(0.0, 0.0, 1.0, 1.0)

    coords, elements = {}, []

    def node(xy):
        key = tuple(np.round(xy, 10))
        return coords.setdefault(key, len(coords))

    for k in range(n_cells):
        region = vor.regions[vor.point_region[k]]
        cell = Polygon(vor.vertices[region]).intersection(square)
        xy = np.asarray(cell.exterior.coords)[:-1]
        if polygon_area(xy) < 0:
            xy = xy[::-1]
        elements.append([node(p) for p in xy])

    nodes = np.array(sorted(coords, key=coords.get))
    # drop duplicate consecutive vertices produced by rounding
    elements = [[v for i, v in enumerate(el) if v != el[i - 1]] for el in elements]

    count = {}
    for el in elements:
        for a in range(len(el)):
            e = tuple(sorted((el[a], el[(a + 1) % len(el)])))
            count[e] = count.get(e, 0) + 1
    bedges = []
    for (i, j), c in sorted(count.items()):
        if c == 1:
            mid = 0.5 * (nodes[i] + nodes[j])
            tag = 1 if mid[1] < 1e-9 else 2 if mid[0] > 1 - 1e-9 else 3 if mid[1] > 1 - 1e-9 else 4
            bedges.append((i, j, tag))
    return Mesh(nodes, elements, np.array(bedges))


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "tests" / "data" / "voronoi30.mesh"
    mesh = voronoi_square(30, seed=7)
    write_mesh(mesh, out)
    print(f"{out}: {mesh.num_nodes} nodes, {mesh.num_elements} elements, area {mesh.areas.sum():.15g}")
