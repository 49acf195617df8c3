"""Linearly-precise virtual element operators.

Strain vectors use Voigt order ``(e11, e22, 2 e12)``. Element DOFs are
ordered ``(u1, u2)`` per vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .mesh import ElementGeometry, Mesh, element_geometry


@dataclass(frozen=True)
class ProjectionSet:
    B: np.ndarray  # (3, 2n)
    H: np.ndarray  # (2n, 3)
    G: np.ndarray  # (2n, 3)
    R: np.ndarray  # (3, 2n)
    P: np.ndarray  # (2n, 2n)
    area: float
    centroid: np.ndarray


def boundary_weights(geom: ElementGeometry) -> np.ndarray:
    """Vertex weights ``q_a`` (n, 2): boundary integral of the hat function
    times the normal, divided by the area (trapezoidal rule, exact)."""
    ln = geom.edge_lengths[:, None] * geom.edge_normals
    # edge a-1 ends at vertex a, edge a starts there
    return (np.roll(ln, 1, axis=0) + ln) / (2.0 * geom.area)


def compute_strain_matrix(geom: ElementGeometry) -> np.ndarray:
    q = boundary_weights(geom)
    n = geom.num_vertices
    B = np.zeros((3, 2 * n))
    B[0, 0::2] = q[:, 0]
    B[1, 1::2] = q[:, 1]
    B[2, 0::2] = q[:, 1]
    B[2, 1::2] = q[:, 0]
    return B


def compute_projection(geom: ElementGeometry, B: np.ndarray) -> ProjectionSet:
    n = geom.num_vertices
    dx = geom.coords - geom.centroid_of_vertices
    q = boundary_weights(geom)

    H = np.zeros((2 * n, 3))
    H[0::2, 0] = dx[:, 0]
    H[0::2, 2] = 0.5 * dx[:, 1]
    H[1::2, 1] = dx[:, 1]
    H[1::2, 2] = 0.5 * dx[:, 0]

    G = np.zeros((2 * n, 3))
    G[0::2, 0] = 1.0
    G[0::2, 2] = 0.5 * dx[:, 1]
    G[1::2, 1] = 1.0
    G[1::2, 2] = -0.5 * dx[:, 0]

    R = np.zeros((3, 2 * n))
    R[0, 0::2] = 1.0 / n
    R[1, 1::2] = 1.0 / n
    R[2, 0::2] = q[:, 1]
    R[2, 1::2] = -q[:, 0]

    P = H @ B + G @ R
    return ProjectionSet(B, H, G, R, P, geom.area, geom.centroid_of_vertices)


def element_projections(mesh: Mesh) -> List[ProjectionSet]:
    out = []
    for e in range(mesh.num_elements):
        geom = element_geometry(mesh, e)
        out.append(compute_projection(geom, compute_strain_matrix(geom)))
    return out


def element_dofs(verts) -> np.ndarray:
    v = np.asarray(verts, dtype=int)
    return np.column_stack([2 * v, 2 * v + 1]).ravel()
