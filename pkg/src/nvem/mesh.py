"""Polygonal meshes, element geometry and nodal patches.

Elements are stored as counter-clockwise vertex lists. Edge ``a`` of an
element runs from vertex ``a`` to vertex ``a + 1`` (cyclic).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np

MESH_MAGIC = "nvem-mesh"
MESH_VERSION = 1


class MeshError(ValueError):
    """Raised for unparsable or invalid mesh data."""


@dataclass(frozen=True)
class ElementGeometry:
    area: float
    centroid_of_vertices: np.ndarray
    coords: np.ndarray  # (n, 2) vertex coordinates
    edge_lengths: np.ndarray
    edge_normals: np.ndarray  # (n, 2) outward unit normals

    @property
    def num_vertices(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class NodalPatch:
    node: int
    elements: np.ndarray
    nodal_area: float
    patch_nodes: np.ndarray

    @property
    def dof_map(self) -> np.ndarray:
        """Global DOF of each patch-local DOF (x then y per patch node)."""
        return np.column_stack([2 * self.patch_nodes, 2 * self.patch_nodes + 1]).ravel()


def polygon_area(xy: np.ndarray) -> float:
    """Signed shoelace area (positive for CCW)."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _is_simple(xy: np.ndarray) -> bool:
    n = len(xy)
    if n <= 3:
        return True
    for a in range(n):
        for b in range(a + 2, n):
            if a == 0 and b == n - 1:
                continue
            if _segments_intersect(xy[a], xy[(a + 1) % n], xy[b], xy[(b + 1) % n]):
                return False
    return True


@dataclass(frozen=True)
class Mesh:
    """Polygonal mesh.

    ``boundary_edges`` holds ``(i, j, tag)`` rows for tagged boundary
    segments. A mesh is validated on construction; invalid input raises
    :class:`MeshError`.
    """

    nodes: np.ndarray
    elements: Tuple[Tuple[int, ...], ...]
    boundary_edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=int))
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.ascontiguousarray(self.nodes, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "elements", tuple(tuple(int(v) for v in e) for e in self.elements))
        be = np.asarray(self.boundary_edges, dtype=int).reshape(-1, 3)
        object.__setattr__(self, "boundary_edges", be)
        if self.validate:
            self._check()

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def num_dofs(self) -> int:
        return 2 * len(self.nodes)

    @cached_property
    def diameter(self) -> float:
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(*span))

    @cached_property
    def edge_owners(self) -> dict:
        """Map undirected edge (min, max) -> list of (element, local edge)."""
        owners: dict = {}
        for e, verts in enumerate(self.elements):
            n = len(verts)
            for a in range(n):
                i, j = verts[a], verts[(a + 1) % n]
                owners.setdefault((min(i, j), max(i, j)), []).append((e, a))
        return owners

    @cached_property
    def areas(self) -> np.ndarray:
        return np.array([polygon_area(self.nodes[list(v)]) for v in self.elements])

    def _check(self):
        nn = len(self.nodes)
        tol = 1e-12 * max(self.diameter, 1e-300)
        for e, verts in enumerate(self.elements):
            if len(verts) < 3:
                raise MeshError(f"element {e}: fewer than 3 vertices")
            if min(verts) < 0 or max(verts) >= nn:
                raise MeshError(f"element {e}: vertex index out of range")
            if len(set(verts)) != len(verts):
                raise MeshError(f"element {e}: repeated vertex")
            xy = self.nodes[list(verts)]
            area = polygon_area(xy)
            if area <= 0.0:
                raise MeshError(f"element {e}: negative area ({area:.6g}); vertices must be CCW")
            lengths = np.linalg.norm(np.roll(xy, -1, axis=0) - xy, axis=1)
            if lengths.min() < tol:
                raise MeshError(f"element {e}: degenerate edge")
            if not _is_simple(xy):
                raise MeshError(f"element {e}: polygon is not simple")
        owners = self.edge_owners
        for k, (i, j, tag) in enumerate(self.boundary_edges):
            key = (min(i, j), max(i, j))
            if len(owners.get(key, ())) != 1:
                raise MeshError(f"boundary edge {k} ({i}, {j}, tag {tag}) is not an edge of exactly one element")
        for key, own in owners.items():
            if len(own) > 2:
                raise MeshError(f"edge {key} shared by more than two elements")
        used = np.zeros(nn, dtype=bool)
        for verts in self.elements:
            used[list(verts)] = True
        if not used.all():
            raise MeshError(f"isolated node {int(np.flatnonzero(~used)[0])}")

    @cached_property
    def boundary_node_indices(self) -> np.ndarray:
        """Nodes lying on topological boundary edges (edges of one element)."""
        nodes = set()
        for (i, j), own in self.edge_owners.items():
            if len(own) == 1:
                nodes.update((i, j))
        return np.array(sorted(nodes), dtype=int)

    def edges_with_tag(self, tag: int) -> np.ndarray:
        """Boundary edges with ``tag``, oriented as in their owning element."""
        out = []
        for i, j, t in self.boundary_edges:
            if t != tag:
                continue
            e, a = self.edge_owners[(min(i, j), max(i, j))][0]
            verts = self.elements[e]
            out.append((verts[a], verts[(a + 1) % len(verts)]))
        return np.array(out, dtype=int).reshape(-1, 2)

    def nodes_with_tag(self, tag: int) -> np.ndarray:
        return np.unique(self.edges_with_tag(tag).ravel())

    def node_at(self, point: Sequence[float], rtol: float = 1e-9) -> int:
        """Index of the node at ``point``; raises if no node within tolerance."""
        dist = np.linalg.norm(self.nodes - np.asarray(point, dtype=float), axis=1)
        k = int(np.argmin(dist))
        if dist[k] > rtol * self.diameter:
            raise MeshError(f"no mesh node at {tuple(point)} (nearest at distance {dist[k]:.3g})")
        return k

    def edge_adjacent_elements(self) -> np.ndarray:
        pairs = [(own[0][0], own[1][0]) for own in self.edge_owners.values() if len(own) == 2]
        return np.array(sorted(pairs), dtype=int).reshape(-1, 2)

    def node_neighbour_pairs(self) -> np.ndarray:
        return np.array(sorted(k for k in self.edge_owners), dtype=int).reshape(-1, 2)


def element_geometry(mesh: Mesh, e: int) -> ElementGeometry:
    verts = list(mesh.elements[e])
    xy = mesh.nodes[verts]
    vec = np.roll(xy, -1, axis=0) - xy
    lengths = np.linalg.norm(vec, axis=1)
    if lengths.min() < 1e-12 * mesh.diameter:
        raise MeshError(f"element {e}: degenerate edge")
    # outward normal of a CCW edge (dx, dy) is (dy, -dx)
    normals = np.column_stack([vec[:, 1], -vec[:, 0]]) / lengths[:, None]
    return ElementGeometry(
        area=polygon_area(xy),
        centroid_of_vertices=xy.mean(axis=0),
        coords=xy,
        edge_lengths=lengths,
        edge_normals=normals,
    )


def build_patches(mesh: Mesh) -> List[NodalPatch]:
    incident: List[list] = [[] for _ in range(mesh.num_nodes)]
    for e, verts in enumerate(mesh.elements):
        for v in verts:
            incident[v].append(e)
    areas = mesh.areas
    patches = []
    for node, elems in enumerate(incident):
        if not elems:
            raise MeshError(f"isolated node {node}")
        nodal_area = 0.0
        for e in elems:
            nodal_area += areas[e] / len(mesh.elements[e])
        patch_nodes = np.unique(np.concatenate([mesh.elements[e] for e in elems]))
        patches.append(NodalPatch(node, np.array(elems, dtype=int), nodal_area, patch_nodes))
    return patches


def nodal_areas(mesh: Mesh) -> np.ndarray:
    out = np.zeros(mesh.num_nodes)
    for e, verts in enumerate(mesh.elements):
        np.add.at(out, list(verts), mesh.areas[e] / len(verts))
    return out


def load_mesh(text: str) -> Mesh:
    """Parse the ASCII ``nvem-mesh`` format.

    Blank lines and ``#`` comments are ignored. Errors carry the 1-based
    line number of the offending line.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            lines.append((lineno, content.split()))
    it = iter(lines)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshError(f"unexpected end of file while reading {what}") from None

    lineno, tok = take("header")
    if len(tok) != 2 or tok[0] != MESH_MAGIC:
        raise MeshError(f"line {lineno}: expected '{MESH_MAGIC} {MESH_VERSION}'")
    if tok[1] != str(MESH_VERSION):
        raise MeshError(f"line {lineno}: unsupported version {tok[1]}")
    lineno, tok = take("counts")
    try:
        nn, ne, nb = (int(t) for t in tok)
    except ValueError:
        raise MeshError(f"line {lineno}: expected '<nnodes> <nelems> <nbedges>'") from None

    nodes = np.empty((nn, 2))
    for k in range(nn):
        lineno, tok = take("nodes")
        try:
            if len(tok) != 2:
                raise ValueError
            nodes[k] = float(tok[0]), float(tok[1])
        except ValueError:
            raise MeshError(f"line {lineno}: expected node coordinates 'x y'") from None

    elements = []
    for k in range(ne):
        lineno, tok = take("elements")
        try:
            vals = [int(t) for t in tok]
            if vals[0] != len(vals) - 1:
                raise ValueError
        except (ValueError, IndexError):
            raise MeshError(f"line {lineno}: expected 'k v1 ... vk'") from None
        elements.append(vals[1:])

    bedges = []
    for k in range(nb):
        lineno, tok = take("boundary edges")
        try:
            if len(tok) != 3:
                raise ValueError
            bedges.append([int(t) for t in tok])
        except ValueError:
            raise MeshError(f"line {lineno}: expected 'i j tag'") from None
    extra = next(it, None)
    if extra is not None:
        raise MeshError(f"line {extra[0]}: trailing data")
    return Mesh(nodes, elements, np.array(bedges, dtype=int).reshape(-1, 3))


def dump_mesh(mesh: Mesh) -> str:
    out = [f"{MESH_MAGIC} {MESH_VERSION}", f"{mesh.num_nodes} {mesh.num_elements} {len(mesh.boundary_edges)}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    out += [" ".join(str(v) for v in (len(e), *e)) for e in mesh.elements]
    out += [f"{i} {j} {t}" for i, j, t in mesh.boundary_edges.tolist()]
    return "\n".join(out) + "\n"


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        return load_mesh(fh.read())


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_mesh(mesh))
