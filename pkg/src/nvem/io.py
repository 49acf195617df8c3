"""Result emission: legacy VTK fields, CSV response curves, run manifest.

Floats are written in shortest round-trip form (``repr``) so files
re-parse to identical values and identical runs give identical bytes.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .mesh import Mesh

log = logging.getLogger(__name__)

VTK_POLYGON = 7
FIELD_NAMES = ("pressure", "von_mises", "acc_plastic_strain")


def _fmt(x) -> str:
    x = float(x)
    if x == 0.0:
        return "0.0"  # no "-0.0" noise
    return repr(x)


def write_vtk(mesh: Mesh, fields: Mapping[str, np.ndarray], path, title: str = "nvem result") -> Path:
    """Legacy ASCII unstructured grid with polygon cells and point data.

    ``fields`` holds per-node arrays: ``displacement`` (n, 2) or (n, 3) and
    scalars, normally ``pressure``, ``von_mises``, ``acc_plastic_strain``.
    """
    path = Path(path)
    n = mesh.num_nodes
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " "), "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {n} double")
    lines.extend(f"{_fmt(x)} {_fmt(y)} 0.0" for x, y in mesh.nodes)
    size = sum(len(v) + 1 for v in mesh.elements)
    lines.append(f"CELLS {mesh.num_elements} {size}")
    lines.extend(" ".join(map(str, (len(v),) + tuple(v))) for v in mesh.elements)
    lines.append(f"CELL_TYPES {mesh.num_elements}")
    lines.extend([str(VTK_POLYGON)] * mesh.num_elements)
    lines.append(f"POINT_DATA {n}")
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if len(arr) != n:
            raise ValueError(f"field {name!r} has {len(arr)} values for {n} nodes")
        if arr.ndim == 2:
            if arr.shape[1] == 2:
                arr = np.column_stack([arr, np.zeros(n)])
            lines.append(f"VECTORS {name} double")
            lines.extend(" ".join(_fmt(c) for c in row) for row in arr)
        else:
            if not np.all(np.isfinite(arr)):
                log.warning("field %s has non-finite values", name)
            else:
                log.debug("%s min %.6g max %.6g", name, arr.min(), arr.max())
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(c) for c in arr)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk(path) -> Dict[str, object]:
    """Parse files written by :func:`write_vtk`.

    Returns a dict with ``points`` (n, 3), ``cells`` (list of tuples),
    ``cell_types`` and ``point_data`` (name -> array).
    """
    tokens = Path(path).read_text().split("\n")
    k = 4
    out: Dict[str, object] = {"point_data": {}}

    def take(count):
        nonlocal k
        chunk = tokens[k:k + count]
        k += count
        return chunk

    while k < len(tokens):
        line = tokens[k].strip()
        k += 1
        if not line:
            continue
        head = line.split()
        if head[0] == "POINTS":
            n = int(head[1])
            out["points"] = np.array([[float(t) for t in row.split()] for row in take(n)])
        elif head[0] == "CELLS":
            out["cells"] = [tuple(int(t) for t in row.split()[1:]) for row in take(int(head[1]))]
        elif head[0] == "CELL_TYPES":
            out["cell_types"] = [int(t) for t in take(int(head[1]))]
        elif head[0] == "POINT_DATA":
            n = int(head[1])
        elif head[0] == "VECTORS":
            out["point_data"][head[1]] = np.array([[float(t) for t in row.split()] for row in take(n)])
        elif head[0] == "SCALARS":
            take(1)  # lookup table
            out["point_data"][head[1]] = np.array([float(t) for t in take(n)])
        else:
            raise ValueError(f"unexpected VTK line {k}: {line!r}")
    return out


def step_fields(step) -> Dict[str, np.ndarray]:
    """Nodal output arrays of a :class:`LoadStepResult`."""
    return {
        "displacement": step.displacement,
        "pressure": step.nodal_pressure,
        "von_mises": step.nodal_von_mises,
        "acc_plastic_strain": step.nodal_eps_bar_p,
    }


def curve_header(labels: Sequence[str]) -> List[str]:
    cols = ["step", "load_factor"]
    for label in labels:
        cols += [f"monitor_{label}_u1", f"monitor_{label}_u2"]
    return cols + ["reaction_sum_1", "reaction_sum_2", "newton_iters"]


def write_curves(history: Iterable, path, labels: Sequence[str] = None) -> Path:
    """One row per converged step: load factor, monitored displacements,
    reaction sums and Newton iteration count."""
    history = list(history)
    if labels is None:
        labels = list(history[0].monitors) if history else []
    rows = [", ".join(curve_header(labels))]
    for s in history:
        vals = [str(s.step), _fmt(s.load_factor)]
        for label in labels:
            vals += [_fmt(s.monitors[label][0]), _fmt(s.monitors[label][1])]
        vals += [_fmt(s.reaction_sum[0]), _fmt(s.reaction_sum[1]), str(s.newton_iters)]
        rows.append(", ".join(vals))
    path = Path(path)
    path.write_text("\n".join(rows) + "\n")
    return path


def read_curves(path) -> Tuple[List[str], np.ndarray]:
    lines = Path(path).read_text().strip().split("\n")
    header = [c.strip() for c in lines[0].split(",")]
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]]).reshape(-1, len(header))
    return header, data


def write_manifest(path, manifest: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
