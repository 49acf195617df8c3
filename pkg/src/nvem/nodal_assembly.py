"""Nodal averaging of element operators and load vectors.

Per-node functions return dense matrices over the patch DOFs
(``patch.dof_map``). :func:`build_operators` stacks the same quantities
into global sparse matrices for the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .constitutive import PLANE, Material
from .mesh import Mesh, NodalPatch, build_patches, nodal_areas
from .vem_element import ProjectionSet, element_dofs, element_projections


@dataclass(frozen=True)
class NodalOperator:
    node: int
    nodal_area: float
    B_I: np.ndarray
    IP_I: np.ndarray
    S_I: np.ndarray  # diagonal entries
    dof_map: np.ndarray

    @property
    def stiffness_stab(self) -> np.ndarray:
        return self.IP_I.T @ (self.S_I[:, None] * self.IP_I)


@dataclass(frozen=True)
class NeumannPatch:
    node: int
    edges: np.ndarray  # (k, 2) node pairs
    length: float
    averaged_traction: np.ndarray
    averaged_shape: np.ndarray  # (2, 2 * len(patch_nodes))
    patch_nodes: np.ndarray

    @property
    def dof_map(self) -> np.ndarray:
        return np.column_stack([2 * self.patch_nodes, 2 * self.patch_nodes + 1]).ravel()


def plane_deviatoric_moduli(material: Material) -> np.ndarray:
    return material.deviatoric_moduli()[np.ix_(PLANE, PLANE)]


def plane_elastic_moduli(material: Material) -> np.ndarray:
    return material.elastic_tangent()[np.ix_(PLANE, PLANE)]


def _patch_weights(mesh: Mesh, patch: NodalPatch):
    if len(patch.elements) == 0 or patch.nodal_area <= 0.0:
        raise ValueError(f"empty patch at node {patch.node}")
    areas = mesh.areas
    for e in patch.elements:
        yield e, areas[e] / (len(mesh.elements[e]) * patch.nodal_area)


def _local_index(patch: NodalPatch, verts) -> np.ndarray:
    loc = np.searchsorted(patch.patch_nodes, verts)
    return element_dofs(loc)


def nodal_strain_operator(mesh: Mesh, patch: NodalPatch, projections: Sequence[ProjectionSet]) -> np.ndarray:
    B_I = np.zeros((3, 2 * len(patch.patch_nodes)))
    for e, w in _patch_weights(mesh, patch):
        B_I[:, _local_index(patch, mesh.elements[e])] += w * projections[e].B
    return B_I


def nodal_stability_projector(mesh: Mesh, patch: NodalPatch, projections: Sequence[ProjectionSet]) -> np.ndarray:
    m = 2 * len(patch.patch_nodes)
    IP = np.zeros((m, m))
    for e, w in _patch_weights(mesh, patch):
        idx = _local_index(patch, mesh.elements[e])
        P = projections[e].P
        IP[np.ix_(idx, idx)] += w * (np.eye(len(P)) - P)
    return IP


def nodal_stability_matrix(B_I: np.ndarray, nodal_area: float, material: Material, floor: float = 1.0) -> np.ndarray:
    """Diagonal of the stability matrix (returned as a vector)."""
    Dd = plane_deviatoric_moduli(material)
    diag = nodal_area * np.einsum("ri,rc,ci->i", B_I, Dd, B_I)
    return np.maximum(floor, diag)


def nodal_operator(mesh, patch, projections, material, floor=1.0) -> NodalOperator:
    B_I = nodal_strain_operator(mesh, patch, projections)
    IP_I = nodal_stability_projector(mesh, patch, projections)
    S_I = nodal_stability_matrix(B_I, patch.nodal_area, material, floor)
    return NodalOperator(patch.node, patch.nodal_area, B_I, IP_I, S_I, patch.dof_map)


def nodal_body_force(mesh: Mesh, patch: NodalPatch, body_force: np.ndarray) -> np.ndarray:
    """Body-force vector over the patch DOFs.

    ``body_force`` is the element-average body force, shape (nelem, 2) or
    a constant 2-vector.
    """
    b = np.broadcast_to(np.asarray(body_force, dtype=float), (mesh.num_elements, 2))
    m = 2 * len(patch.patch_nodes)
    N_I = np.zeros((2, m))
    b_I = np.zeros(2)
    for e, w in _patch_weights(mesh, patch):
        verts = mesh.elements[e]
        idx = _local_index(patch, verts)
        N_I[0, idx[0::2]] += w / len(verts)
        N_I[1, idx[1::2]] += w / len(verts)
        b_I += w * b[e]
    return patch.nodal_area * N_I.T @ b_I


def build_neumann_patches(mesh: Mesh, edges: np.ndarray, tractions: np.ndarray) -> List[NeumannPatch]:
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    tractions = np.asarray(tractions, dtype=float).reshape(-1, 2)
    lengths = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    out = []
    for node in np.unique(edges):
        sel = np.flatnonzero((edges[:, 0] == node) | (edges[:, 1] == node))
        length = 0.5 * lengths[sel].sum()
        patch_nodes = np.unique(edges[sel])
        shape = np.zeros((2, 2 * len(patch_nodes)))
        t_hat = np.zeros(2)
        for k in sel:
            w = 0.5 * lengths[k] / length
            for v in edges[k]:
                j = int(np.searchsorted(patch_nodes, v))
                shape[0, 2 * j] += 0.5 * w
                shape[1, 2 * j + 1] += 0.5 * w
            t_hat += w * tractions[k]
        out.append(NeumannPatch(int(node), edges[sel], length, t_hat, shape, patch_nodes))
    return out


def nodal_traction_force(npatch: NeumannPatch) -> np.ndarray:
    return npatch.length * npatch.averaged_shape.T @ npatch.averaged_traction


def edge_tractions(mesh: Mesh, edges: np.ndarray, traction=None, pressure=None) -> np.ndarray:
    """Edge-average tractions for a constant vector or a normal pressure.

    A positive pressure pushes against the outward normal of the edge.
    """
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    if pressure is not None:
        vec = mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]]
        n = np.column_stack([vec[:, 1], -vec[:, 0]]) / np.linalg.norm(vec, axis=1)[:, None]
        return -float(pressure) * n
    return np.broadcast_to(np.asarray(traction, dtype=float), edges.shape).copy()


def assemble_traction(mesh: Mesh, edges, tractions, method: str = "nvem") -> np.ndarray:
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    tractions = np.asarray(tractions, dtype=float).reshape(-1, 2)
    f = np.zeros(mesh.num_dofs)
    if method == "nvem":
        for npatch in build_neumann_patches(mesh, edges, tractions):
            np.add.at(f, npatch.dof_map, nodal_traction_force(npatch))
    else:
        lengths = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
        for (i, j), L, t in zip(edges, lengths, tractions):
            for v in (i, j):
                f[2 * v:2 * v + 2] += 0.5 * L * t
    return f


def assemble_body_force(mesh: Mesh, body_force, method: str = "nvem") -> np.ndarray:
    b = np.broadcast_to(np.asarray(body_force, dtype=float), (mesh.num_elements, 2))
    f = np.zeros(mesh.num_dofs)
    if method == "nvem":
        for patch in build_patches(mesh):
            np.add.at(f, patch.dof_map, nodal_body_force(mesh, patch, b))
    else:
        for e, verts in enumerate(mesh.elements):
            share = mesh.areas[e] / len(verts) * b[e]
            for v in verts:
                f[2 * v:2 * v + 2] += share
    return f


# ---------------------------------------------------------------------------
# global sparse operators


@dataclass
class GlobalOperators:
    """Strain sampling operator, sample weights and frozen stabilization.

    ``strain`` maps the global displacement vector to the stacked
    ``(e11, e22, 2 e12)`` strain of every sample point (nodes for NVEM,
    elements for VEM); ``weights`` are the sample areas.
    """

    method: str
    strain: sp.csr_matrix
    weights: np.ndarray
    stab: sp.csr_matrix
    sample_pairs: np.ndarray  # neighbouring samples, for smoothness indicators

    @property
    def num_samples(self) -> int:
        return len(self.weights)

    def tangent(self, D3: np.ndarray) -> sp.csr_matrix:
        n = self.num_samples
        blocks = self.weights[:, None, None] * D3
        Dg = sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)), shape=(3 * n, 3 * n)).tocsr()
        return (self.strain.T @ Dg @ self.strain + self.stab).tocsr()

    def internal_force(self, sigma3: np.ndarray, d: np.ndarray) -> np.ndarray:
        return self.strain.T @ (self.weights[:, None] * sigma3).ravel() + self.stab @ d


def element_strain_matrix(mesh: Mesh, projections) -> sp.csr_matrix:
    """(3 nelem x ndof) map from displacements to element-average strains."""
    rows, cols, vals = [], [], []
    for e, verts in enumerate(mesh.elements):
        dofs = element_dofs(verts)
        B = projections[e].B
        r, c = np.meshgrid(np.arange(3) + 3 * e, dofs, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(B.ravel())
    shape = (3 * mesh.num_elements, mesh.num_dofs)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)


def averaging_matrix(mesh: Mesh, nodal_area: np.ndarray) -> sp.csr_matrix:
    """(nnodes x nelem) matrix of weights |E| / (N_E |I|)."""
    rows, cols, vals = [], [], []
    for e, verts in enumerate(mesh.elements):
        for v in verts:
            rows.append(v)
            cols.append(e)
            vals.append(mesh.areas[e] / len(verts) / nodal_area[v])
    return sp.csr_matrix((vals, (rows, cols)), shape=(mesh.num_nodes, mesh.num_elements))


def _diag_quadratic(strain: sp.csr_matrix, weights: np.ndarray, D3: np.ndarray) -> sp.csr_matrix:
    """Sparse (nsamples x ndof) matrix of ``w_s * b_sg^T D3 b_sg``."""
    n = len(weights)
    blocks = np.broadcast_to(D3, (n, 3, 3)) * weights[:, None, None]
    Dg = sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)), shape=(3 * n, 3 * n)).tocsr()
    prod = (Dg @ strain).multiply(strain).tocsr()
    summer = sp.kron(sp.identity(n, format="csr"), np.ones((1, 3)), format="csr")
    return (summer @ prod).tocsr()


def build_operators(
    mesh: Mesh,
    material: Material,
    method: str = "nvem",
    stab_floor: float = 1.0,
    projections: Optional[List[ProjectionSet]] = None,
    vem_stab_moduli: str = "elastic",
) -> GlobalOperators:
    """Global operators for ``method`` in {"nvem", "vem"}.

    ``vem_stab_moduli`` selects the moduli of the element-level diagonal
    stabilization in VEM mode: "elastic" (full elastic moduli) or
    "deviatoric". NVEM always uses the deviatoric moduli.
    """
    if projections is None:
        projections = element_projections(mesh)
    Be = element_strain_matrix(mesh, projections)
    ndof = mesh.num_dofs

    if method == "vem":
        D_stab = plane_elastic_moduli(material) if vem_stab_moduli == "elastic" else plane_deviatoric_moduli(material)
        diag = _diag_quadratic(Be, mesh.areas, D_stab)
        rows, cols, vals = [], [], []
        for e, verts in enumerate(mesh.elements):
            dofs = element_dofs(verts)
            IP = np.eye(len(dofs)) - projections[e].P
            S = np.maximum(stab_floor, np.asarray(diag[e, dofs].todense()).ravel())
            Ke = IP.T @ (S[:, None] * IP)
            r, c = np.meshgrid(dofs, dofs, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(Ke.ravel())
        stab = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ndof, ndof))
        return GlobalOperators("vem", Be, mesh.areas.copy(), stab, mesh.edge_adjacent_elements())

    if method != "nvem":
        raise ValueError(f"unknown method {method!r}")

    area_I = nodal_areas(mesh)
    A = averaging_matrix(mesh, area_I)
    Bn = (sp.kron(A, sp.identity(3), format="csr") @ Be).tocsr()

    # stacked averaged stability projector: rows are (node, patch dof) pairs
    ckeys, ccols, cvals = [], [], []
    prow, pcol, pval = [], [], []
    offset = 0
    for e, verts in enumerate(mesh.elements):
        dofs = element_dofs(verts)
        m = len(dofs)
        IP = np.eye(m) - projections[e].P
        r, c = np.meshgrid(np.arange(m) + offset, dofs, indexing="ij")
        prow.append(r.ravel())
        pcol.append(c.ravel())
        pval.append(IP.ravel())
        for v in verts:
            ckeys.append(v * ndof + dofs)
            ccols.append(np.arange(m) + offset)
            cvals.append(np.full(m, mesh.areas[e] / len(verts) / area_I[v]))
        offset += m
    IPe = sp.csr_matrix((np.concatenate(pval), (np.concatenate(prow), np.concatenate(pcol))), shape=(offset, ndof))
    keys = np.concatenate(ckeys)
    ukeys, crow = np.unique(keys, return_inverse=True)
    C = sp.csr_matrix((np.concatenate(cvals), (crow, np.concatenate(ccols))), shape=(len(ukeys), offset))
    IPn = (C @ IPe).tocsr()

    node_of_row, dof_of_row = np.divmod(ukeys, ndof)
    diag = _diag_quadratic(Bn, area_I, plane_deviatoric_moduli(material))
    S = np.maximum(stab_floor, np.asarray(diag[node_of_row, dof_of_row]).ravel())
    stab = (IPn.T @ sp.diags(S) @ IPn).tocsr()
    return GlobalOperators("nvem", Bn, area_I, stab, mesh.node_neighbour_pairs())


def nodal_operators(mesh: Mesh, material: Material, stab_floor: float = 1.0, projections=None) -> Dict[int, NodalOperator]:
    if projections is None:
        projections = element_projections(mesh)
    return {p.node: nodal_operator(mesh, p, projections, material, stab_floor) for p in build_patches(mesh)}
