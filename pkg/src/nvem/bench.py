"""Benchmark problems, mesh generators and analytic oracles.

Structured generators emit quadrilaterals stored as 4-vertex polygons; the
punch domain uses graded Voronoi cells. Boundary tags
used throughout: 1 bottom, 2 right, 3 top, 4 left, 5 hole / inner arc
where relevant, 6 punch footprint.
"""

from __future__ import annotations

import math
from importlib import resources
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.spatial import Voronoi

from .constitutive import Material
from .mesh import Mesh, polygon_area, read_mesh
from .problem import BenchmarkProblem, DirichletSpec, NeumannSpec

BOTTOM, RIGHT, TOP, LEFT, HOLE, PUNCH = 1, 2, 3, 4, 5, 6

# default load-step counts
DEFAULT_STEPS = {"cylinder": 20, "cook": 20, "tension": 25, "plate": 40, "prandtl": 50}


# ---------------------------------------------------------------------------
# mesh generation


def graded(n: int, ratio: float = 1.0) -> np.ndarray:
    """``n + 1`` points on [0, 1]; consecutive cell sizes grow by ``ratio``."""
    if n < 1:
        raise ValueError("need at least one cell")
    if abs(ratio - 1.0) < 1e-14:
        return np.linspace(0.0, 1.0, n + 1)
    h = ratio ** np.arange(n)
    t = np.concatenate([[0.0], np.cumsum(h)])
    return t / t[-1]


def blocks_to_mesh(blocks: Sequence[np.ndarray], classify: Callable[[np.ndarray], int]) -> Mesh:
    """Merge structured blocks of shape (nj + 1, ni + 1, 2) into a mesh.

    Coincident points on block interfaces are merged. Every topological
    boundary edge gets the tag ``classify(midpoint)``.
    """
    pts = np.concatenate([b.reshape(-1, 2) for b in blocks])
    span = pts.max(axis=0) - pts.min(axis=0)
    tol = 1e-9 * float(np.hypot(*span))
    key = np.round(pts / tol).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    # renumber in order of first appearance so node order follows the blocks
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    nodes = pts[first[order]]
    gid = rank[inverse]

    elements = []
    offset = 0
    for b in blocks:
        nj, ni = b.shape[0] - 1, b.shape[1] - 1
        idx = gid[offset:offset + (nj + 1) * (ni + 1)].reshape(nj + 1, ni + 1)
        offset += (nj + 1) * (ni + 1)
        for j in range(nj):
            for i in range(ni):
                quad = [idx[j, i], idx[j, i + 1], idx[j + 1, i + 1], idx[j + 1, i]]
                if polygon_area(nodes[quad]) < 0.0:
                    quad = quad[::-1]
                elements.append(quad)

    return Mesh(nodes, elements, _tag_boundary(nodes, elements, classify))


def rectangle_mesh(nx: int, ny: int, x0=0.0, x1=1.0, y0=0.0, y1=1.0, xs=None, ys=None) -> Mesh:
    """Structured quad mesh of a rectangle; tags 1-4 bottom/right/top/left.

    ``xs`` / ``ys`` optionally give the normalized grid lines on [0, 1].
    """
    xs = np.linspace(0, 1, nx + 1) if xs is None else np.asarray(xs)
    ys = np.linspace(0, 1, ny + 1) if ys is None else np.asarray(ys)
    X, Y = np.meshgrid(x0 + (x1 - x0) * xs, y0 + (y1 - y0) * ys)
    eps = 1e-9 * max(x1 - x0, y1 - y0)

    def classify(p):
        if abs(p[1] - y0) < eps:
            return BOTTOM
        if abs(p[0] - x1) < eps:
            return RIGHT
        if abs(p[1] - y1) < eps:
            return TOP
        return LEFT

    return blocks_to_mesh([np.stack([X, Y], axis=-1)], classify)


def quarter_annulus_mesh(n_r: int, n_theta: int, r_i: float, r_o: float) -> Mesh:
    """Quarter annulus in the first quadrant.

    Tags: 5 inner arc, 2 outer arc, 1 bottom (y = 0), 4 left (x = 0).
    """
    s = np.linspace(0.0, 1.0, n_r + 1)
    theta = np.linspace(0.0, 0.5 * math.pi, n_theta + 1)
    R, T = np.meshgrid(r_i + (r_o - r_i) * s, theta)
    grid = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
    grid[-1, :, 0] = 0.0  # exact zeros on the x = 0 edge
    eps = 1e-9 * r_o

    def classify(p):
        if abs(p[1]) < eps:
            return BOTTOM
        if abs(p[0]) < eps:
            return LEFT
        return HOLE if np.hypot(*p) < 0.5 * (r_i + r_o) else RIGHT

    return blocks_to_mesh([grid], classify)


def cook_mesh(n: int) -> Mesh:
    """Cook's tapered panel, bilinear map of an n x n grid."""
    corners = np.array([[0.0, 0.0], [48.0, 44.0], [48.0, 60.0], [0.0, 44.0]])
    s = np.linspace(0.0, 1.0, n + 1)
    S, T = np.meshgrid(s, s)
    grid = (
        ((1 - S) * (1 - T))[..., None] * corners[0]
        + (S * (1 - T))[..., None] * corners[1]
        + (S * T)[..., None] * corners[2]
        + ((1 - S) * T)[..., None] * corners[3]
    )

    def classify(p):
        if abs(p[0]) < 1e-9:
            return LEFT
        if abs(p[0] - 48.0) < 1e-9:
            return RIGHT
        return BOTTOM if p[1] < 44.0 * p[0] / 48.0 + 1e-6 else TOP

    return blocks_to_mesh([grid], classify)


def perforated_plate_mesh(
    n_arc: int, n_rad: int, n_top: int, width=100.0, height=180.0, radius=50.0, grading=1.15
) -> Mesh:
    """Quarter plate ``[0, width] x [0, height]`` minus a hole at the origin.

    Two mapped blocks surround the hole (split at 45 degrees), topped by a
    rectangular block. ``n_arc`` cells per 45-degree arc, ``n_rad`` radial
    cells (graded towards the hole), ``n_top`` cells above ``y = width``.
    """
    if radius >= width:
        raise ValueError("hole radius must be smaller than the plate width")
    s = graded(n_rad, grading)[None, :, None]
    t = np.linspace(0.0, 1.0, n_arc + 1)

    th = 0.25 * math.pi * t
    arc = radius * np.column_stack([np.cos(th), np.sin(th)])[:, None, :]
    outer = np.column_stack([np.full_like(t, width), width * t])[:, None, :]
    block_a = (1 - s) * arc + s * outer

    th = 0.25 * math.pi * (1 + t)
    arc = radius * np.column_stack([np.cos(th), np.sin(th)])[:, None, :]
    arc[-1, 0, 0] = 0.0
    outer = np.column_stack([width * (1 - t), np.full_like(t, width)])[:, None, :]
    block_b = (1 - s) * arc + s * outer

    X, Y = np.meshgrid(np.linspace(0, width, n_arc + 1), np.linspace(width, height, n_top + 1))
    block_c = np.stack([X, Y], axis=-1)
    eps = 1e-9 * height

    def classify(p):
        if abs(p[1]) < eps:
            return BOTTOM
        if abs(p[0] - width) < eps:
            return RIGHT
        if abs(p[1] - height) < eps:
            return TOP
        if abs(p[0]) < eps:
            return LEFT
        return HOLE

    return blocks_to_mesh([block_a, block_b, block_c], classify)


def _tag_boundary(nodes: np.ndarray, elements, classify: Callable[[np.ndarray], int]) -> np.ndarray:
    counts = {}
    for verts in elements:
        n = len(verts)
        for a in range(n):
            k = (min(verts[a], verts[(a + 1) % n]), max(verts[a], verts[(a + 1) % n]))
            counts[k] = counts.get(k, 0) + 1
    return np.array([(i, j, classify(0.5 * (nodes[i] + nodes[j])))
                     for (i, j), c in sorted(counts.items()) if c == 1], dtype=int)


def voronoi_rectangle(seeds: np.ndarray, width: float, height: float):
    """Voronoi cells of ``seeds`` clipped to [0, width] x [0, height].

    Seeds are mirrored across the four sides, which makes every cell of an
    original seed bounded and cut exactly by the rectangle. Returns
    ``(nodes, elements)`` with counter-clockwise cells.
    """
    seeds = np.asarray(seeds, dtype=float)
    if np.any(seeds <= 0.0) or np.any(seeds >= [width, height]):
        raise ValueError("seeds must lie strictly inside the rectangle")
    mirrored = [seeds, seeds * [-1, 1], [2 * width, 0] + seeds * [-1, 1],
                seeds * [1, -1], [0, 2 * height] + seeds * [1, -1]]
    vor = Voronoi(np.concatenate(mirrored))
    tol = 1e-9 * math.hypot(width, height)
    key = np.round(vor.vertices / tol).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()

    cells = []
    for k in range(len(seeds)):
        region = [int(inverse[v]) for v in vor.regions[vor.point_region[k]]]
        cells.append([v for i, v in enumerate(region) if v != region[i - 1]])
    used = sorted({v for c in cells for v in c})
    renum = {v: i for i, v in enumerate(used)}
    nodes = np.clip(vor.vertices[first[used]], 0.0, [width, height])
    elements = []
    for c in cells:
        c = [renum[v] for v in c]
        elements.append(c if polygon_area(nodes[c]) > 0.0 else c[::-1])
    return nodes, elements


def punch_mesh(nx_punch: int, nx_out: int, ny: int, half_width=500.0, width=2500.0, depth=1500.0,
               stretch=8.0, jitter=0.35, seed=3) -> Mesh:
    """Polygonal half domain under a punch of half-width ``half_width``.

    Seeds sit at the centres of a graded grid (clustered at the punch edge
    and towards the loaded surface, ``stretch`` = largest / smallest cell)
    and are shifted randomly by up to ``jitter`` of the local cell size.
    Tags: 1 bottom, 2 right, 3 free top, 4 symmetry axis, 6 punch.
    """

    def ratio(n):
        return stretch ** (1.0 / max(n - 1, 1))

    xa = half_width * graded(nx_punch, 1.0 / ratio(nx_out))
    xb = half_width + (width - half_width) * graded(nx_out, ratio(nx_out))
    xs = np.concatenate([xa, xb[1:]])
    ys = depth * (1.0 - graded(ny, ratio(ny))[::-1])
    cx, cy = np.meshgrid(0.5 * (xs[1:] + xs[:-1]), 0.5 * (ys[1:] + ys[:-1]))
    hx, hy = np.meshgrid(np.diff(xs), np.diff(ys))
    rng = np.random.default_rng(seed)
    seeds = np.column_stack([
        (cx + rng.uniform(-jitter, jitter, cx.shape) * hx).ravel(),
        (cy + rng.uniform(-jitter, jitter, cy.shape) * hy).ravel(),
    ])
    nodes, elements = voronoi_rectangle(seeds, width, depth)

    # the punch corner must be a vertex: pull the nearest top vertex onto it
    eps = 1e-9 * width
    top = np.flatnonzero(nodes[:, 1] > depth - eps)
    nodes[top[np.argmin(np.abs(nodes[top, 0] - half_width))], 0] = half_width

    def classify(m):
        if m[1] < eps:
            return BOTTOM
        if m[0] > width - eps:
            return RIGHT
        if m[0] < eps:
            return LEFT
        return PUNCH if m[0] < half_width else TOP

    return Mesh(nodes, elements, _tag_boundary(nodes, elements, classify))


# ---------------------------------------------------------------------------
# problems


def make_cylinder(n_r: int = 16, n_theta: int = 16, nu: float = 0.3, p: float = 180.0,
                  r_i: float = 100.0, r_o: float = 200.0, sigma_y0: float = 240.0) -> BenchmarkProblem:
    if n_r < 2 or n_theta < 2:
        raise ValueError("n_r and n_theta must be >= 2")
    mesh = quarter_annulus_mesh(n_r, n_theta, r_i, r_o)
    material = Material(210000.0, nu, sigma_y0)
    return BenchmarkProblem(
        name="cylinder",
        mesh=mesh,
        material=material,
        dirichlet=[DirichletSpec(BOTTOM, 1), DirichletSpec(LEFT, 0)],
        neumann=[NeumannSpec(HOLE, pressure=p)],
        monitors={"A": (r_i, 0.0), "B": (r_o, 0.0)},
        reaction_tags=(BOTTOM, LEFT),
        num_steps=DEFAULT_STEPS["cylinder"],
        params={"p": p, "r_i": r_i, "r_o": r_o},
    )


def make_cook(n: int = 16, load: float = 3.6) -> BenchmarkProblem:
    if n < 2:
        raise ValueError("n must be >= 2")
    return BenchmarkProblem(
        name="cook",
        mesh=cook_mesh(n),
        material=Material(1500.0, 0.4999, 7.5, iso_hardening=3.25, kin_hardening=0.0),
        dirichlet=[DirichletSpec(LEFT, 0), DirichletSpec(LEFT, 1)],
        neumann=[NeumannSpec(RIGHT, traction=(0.0, load))],
        monitors={"A": (48.0, 60.0)},
        reaction_tags=(LEFT,),
        num_steps=DEFAULT_STEPS["cook"],
        params={"F": load},
    )


def make_tension(n: int = 16, size: float = 100.0, u_top: float = 0.5) -> BenchmarkProblem:
    return BenchmarkProblem(
        name="tension",
        mesh=rectangle_mesh(n, n, 0.0, size, 0.0, size),
        material=Material(200000.0, 0.4999, 150.0),
        dirichlet=[
            DirichletSpec(BOTTOM, 0),
            DirichletSpec(BOTTOM, 1),
            DirichletSpec(TOP, 0),
            DirichletSpec(TOP, 1, u_top),
        ],
        monitors={"top": (0.5 * size, size)},
        reaction_tags=(TOP,),
        num_steps=DEFAULT_STEPS["tension"],
        params={"width": size, "u_top": u_top},
    )


def perforated_plate_file():
    """Path of the bundled quarter-plate mesh (hole radius 50 mm)."""
    return resources.files("nvem") / "data" / "perforated_plate.mesh"


def make_perforated_plate(mesh: Optional[Mesh] = None, n: Optional[int] = None,
                          radius: float = 50.0, u_top: float = 2.0) -> BenchmarkProblem:
    """Quarter perforated plate.

    Uses ``mesh`` if given, else a generated mesh with refinement ``n``,
    else the bundled mesh file.
    """
    if mesh is None:
        if n is not None:
            mesh = perforated_plate_mesh(n, n, max(2, (4 * n) // 5), radius=radius)
        else:
            with resources.as_file(perforated_plate_file()) as path:
                mesh = read_mesh(path)
    r = np.hypot(*mesh.nodes[mesh.nodes_with_tag(HOLE)].T).mean()
    return BenchmarkProblem(
        name="plate",
        mesh=mesh,
        material=Material(68646.55, 0.3, 238.301595),
        dirichlet=[
            DirichletSpec(LEFT, 0),
            DirichletSpec(RIGHT, 0),
            DirichletSpec(BOTTOM, 1),
            DirichletSpec(TOP, 1, u_top),
        ],
        monitors={"A": (r, 0.0), "B": (0.0, r)},
        reaction_tags=(TOP,),
        num_steps=DEFAULT_STEPS["plate"],
        params={"radius": float(r), "u_top": u_top},
    )


PRANDTL_LEVELS = {1: (13, 25, 26), 2: (22, 44, 45), 3: (36, 71, 75)}


def make_prandtl(n: int = 3, a: float = 500.0, u_punch: float = -50.0) -> BenchmarkProblem:
    """Rough rigid punch of half-width ``a`` on a half domain 5a x 3a.

    ``n`` in {1, 2, 3} selects meshes of roughly 4k, 12k and 32k DOF.
    """
    nxp, nxo, ny = PRANDTL_LEVELS[n]
    mesh = punch_mesh(nxp, nxo, ny, half_width=a, width=5 * a, depth=3 * a)
    return BenchmarkProblem(
        name="prandtl",
        mesh=mesh,
        material=Material(1.0e5, 0.499, 1.0e5 / 1000.0),
        dirichlet=[
            DirichletSpec(BOTTOM, 0),
            DirichletSpec(BOTTOM, 1),
            DirichletSpec(RIGHT, 0),
            DirichletSpec(LEFT, 0),
            DirichletSpec(PUNCH, 0),
            DirichletSpec(PUNCH, 1, u_punch),
        ],
        monitors={"edge": (a, 3 * a), "centre": (0.0, 3 * a)},
        reaction_tags=(PUNCH,),
        num_steps=DEFAULT_STEPS["prandtl"],
        params={"a": a, "u_punch": u_punch},
    )


PROBLEMS = {
    "cylinder": make_cylinder,
    "cook": make_cook,
    "tension": make_tension,
    "plate": make_perforated_plate,
    "prandtl": make_prandtl,
}


# ---------------------------------------------------------------------------
# analytic oracles


def lame_stresses(p, r_i, r_o, r, nu):
    """Plane-strain Lamé stresses (radial, hoop, axial) for internal pressure."""
    A = p * r_i**2 / (r_o**2 - r_i**2)
    B = A * r_o**2
    r = np.asarray(r, dtype=float)
    return A - B / r**2, A + B / r**2, 2.0 * nu * A * np.ones_like(r)


def first_yield_pressure(material: Material, r_i: float, r_o: float) -> float:
    """Pressure at which the inner surface first reaches the yield stress."""
    sr, st, sz = lame_stresses(1.0, r_i, r_o, r_i, material.poissons_ratio)
    q = math.sqrt(0.5 * ((sr - st) ** 2 + (st - sz) ** 2 + (sz - sr) ** 2))
    return material.initial_yield / q


def lame_solution(material: Material, r_i: float, r_o: float, p: float, r):
    """Plane-strain radial displacement of an elastic thick cylinder."""
    if p > first_yield_pressure(material, r_i, r_o):
        raise ValueError("inelastic regime: pressure exceeds first-yield pressure")
    G, nu = material.shear_modulus, material.poissons_ratio
    r = np.asarray(r, dtype=float)
    return p * r_i**2 / (2.0 * G * (r_o**2 - r_i**2)) * ((1.0 - 2.0 * nu) * r + r_o**2 / r)


def cylinder_limit_pressure(sigma_y0: float, r_i: float, r_o: float) -> float:
    return 2.0 * sigma_y0 / math.sqrt(3.0) * math.log(r_o / r_i)


def prandtl_limit_pressure(sigma_y0: float) -> float:
    return (2.0 + math.pi) * sigma_y0 / math.sqrt(3.0)


def tension_limit_load(sigma_y0: float, width: float, thickness: float = 1.0) -> float:
    """Plane-strain limit force of a laterally free bar in tension."""
    return 2.0 * sigma_y0 / math.sqrt(3.0) * width * thickness


def checkerboard_indicator(values: np.ndarray, pairs: np.ndarray) -> float:
    """Mean absolute jump between neighbouring samples over mean magnitude."""
    values = np.asarray(values, dtype=float)
    jumps = np.abs(values[pairs[:, 0]] - values[pairs[:, 1]])
    return float(jumps.mean() / np.abs(values).mean())


def richardson(values: Sequence[float], ratio: float = 2.0):
    """Extrapolate three results on meshes refined by ``ratio``.

    Returns ``(extrapolated value, observed order)``.
    """
    f1, f2, f3 = values
    order = math.log(abs((f2 - f1) / (f3 - f2))) / math.log(ratio)
    return f3 + (f3 - f2) / (ratio**order - 1.0), order
