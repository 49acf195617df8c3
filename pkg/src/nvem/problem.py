"""Boundary-value problem description shared by the solver and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constitutive import Material
from .mesh import Mesh, MeshError


@dataclass(frozen=True)
class DirichletSpec:
    """Prescribe ``component`` (0 or 1) on every node of boundary ``tag``.

    ``value`` is the full-load value; the solver ramps it with the load
    factor.
    """

    tag: int
    component: int
    value: float = 0.0


@dataclass(frozen=True)
class PrescribedNodes:
    """Prescribe both displacement components on explicit nodes."""

    nodes: np.ndarray
    values: np.ndarray  # (k, 2) full-load values


@dataclass(frozen=True)
class NeumannSpec:
    """Traction on boundary ``tag``: a constant vector or a normal pressure."""

    tag: int
    traction: Optional[Tuple[float, float]] = None
    pressure: Optional[float] = None


@dataclass
class BenchmarkProblem:
    name: str
    mesh: Mesh
    material: Material
    dirichlet: List = field(default_factory=list)
    neumann: List[NeumannSpec] = field(default_factory=list)
    body_force: Optional[Sequence[float]] = None
    monitors: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    reaction_tags: Sequence[int] = ()
    num_steps: int = 20
    max_load_factor: float = 1.0
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.monitor_nodes = {label: self.mesh.node_at(xy) for label, xy in self.monitors.items()}

    def prescribed(self) -> Tuple[np.ndarray, np.ndarray]:
        """Constrained DOFs and their full-load values (sorted by DOF)."""
        values: Dict[int, float] = {}

        def put(dof, val):
            dof, val = int(dof), float(val)
            if dof in values and values[dof] != val:
                raise ValueError(f"conflicting prescriptions on dof {dof}: {values[dof]} vs {val}")
            values[dof] = val

        for spec in self.dirichlet:
            if isinstance(spec, DirichletSpec):
                nodes = self.mesh.nodes_with_tag(spec.tag)
                if len(nodes) == 0:
                    raise MeshError(f"no boundary edges with tag {spec.tag}")
                for v in nodes:
                    put(2 * v + spec.component, spec.value)
            else:
                for v, val in zip(np.asarray(spec.nodes, int), np.asarray(spec.values, float).reshape(-1, 2)):
                    put(2 * v, val[0])
                    put(2 * v + 1, val[1])
        dofs = np.array(sorted(values), dtype=int)
        return dofs, np.array([values[k] for k in dofs])

    def reaction_dofs(self, constrained: np.ndarray) -> np.ndarray:
        if not self.reaction_tags:
            return constrained
        nodes = np.unique(np.concatenate([self.mesh.nodes_with_tag(t) for t in self.reaction_tags]))
        dofs = np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()
        return np.intersect1d(dofs, constrained)


def problem_from_config(mesh: Mesh, cfg: dict, name: str = "custom") -> BenchmarkProblem:
    """Build a problem from a parsed boundary-condition document.

    Keys: ``material`` (Material fields), ``dirichlet`` (list of
    ``{tag, component, value}``), ``neumann`` (list of ``{tag, traction}``
    or ``{tag, pressure}``), optional ``body_force``, ``monitors``
    (label -> [x, y]), ``reaction_tags``, ``num_steps``.
    """
    known = {"material", "dirichlet", "neumann", "body_force", "monitors", "reaction_tags", "num_steps"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown keys in boundary-condition file: {sorted(unknown)}")
    if "material" not in cfg:
        raise ValueError("boundary-condition file needs a 'material' entry")
    material = Material(**cfg["material"])
    dirichlet = [DirichletSpec(int(d["tag"]), int(d["component"]), float(d.get("value", 0.0))) for d in cfg.get("dirichlet", [])]
    for d in dirichlet:
        if d.component not in (0, 1):
            raise ValueError("dirichlet component must be 0 or 1")
    neumann = []
    for d in cfg.get("neumann", []):
        tr = d.get("traction")
        neumann.append(NeumannSpec(int(d["tag"]), None if tr is None else tuple(map(float, tr)), d.get("pressure")))
    monitors = {k: tuple(map(float, v)) for k, v in cfg.get("monitors", {}).items()}
    return BenchmarkProblem(
        name=name,
        mesh=mesh,
        material=material,
        dirichlet=dirichlet,
        neumann=neumann,
        body_force=cfg.get("body_force"),
        monitors=monitors,
        reaction_tags=tuple(cfg.get("reaction_tags", ())),
        num_steps=int(cfg.get("num_steps", 20)),
    )
