"""Command-line entry point: ``nvem run | validate | oracle``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import bench
from .constitutive import Material
from .io import step_fields, write_curves, write_manifest, write_vtk
from .mesh import MeshError, read_mesh
from .problem import problem_from_config
from .solver import Analysis, AnalysisConfig

EXIT_OK, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("nvem")


@dataclass
class RunConfig:
    problem: Optional[str] = None
    mesh: Optional[str] = None
    bc: Optional[str] = None
    method: str = "nvem"
    num_steps: Optional[int] = None
    newton_tol: float = 1e-8
    out: str = "results"
    write_every: int = 1
    refine: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.write_every < 1:
            raise ValueError("--write-every must be >= 1")
        if (self.problem is None) == (self.mesh is None):
            raise ValueError("give exactly one of --problem or --mesh")
        if self.mesh is not None and self.bc is None:
            raise ValueError("--mesh needs --bc")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvem", description="Node-based virtual element elastoplasticity")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark or a mesh + boundary-condition file")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", choices=sorted(bench.PROBLEMS))
    src.add_argument("--mesh")
    run.add_argument("--bc", help="JSON boundary-condition file (with --mesh)")
    run.add_argument("--method", choices=("nvem", "vem"), default="nvem")
    run.add_argument("--steps", type=int, dest="num_steps")
    run.add_argument("--tol", type=float, default=1e-8, dest="newton_tol")
    run.add_argument("--out", default="results")
    run.add_argument("--write-every", type=int, default=1)
    run.add_argument("--refine", type=int, help="generator refinement parameter")
    run.add_argument("--workers", type=int, default=1)

    val = sub.add_parser("validate", help="check a mesh file")
    val.add_argument("--mesh", required=True)

    orc = sub.add_parser("oracle", help="evaluate an analytic reference value")
    orc.add_argument("--name", required=True, choices=("lame", "cyl-limit", "punch-limit", "tension-limit"))
    orc.add_argument("--sigma-y", type=float, default=240.0)
    orc.add_argument("--ratio", type=float, default=2.0, help="r_o / r_i")
    orc.add_argument("--ri", type=float, default=100.0)
    orc.add_argument("--E", type=float, default=210000.0)
    orc.add_argument("--nu", type=float, default=0.3)
    orc.add_argument("--p", type=float, default=50.0)
    orc.add_argument("--r", type=float, help="radius (lame); default inner radius")
    orc.add_argument("--width", type=float, default=100.0)
    return ap


def parse_cli(argv: Optional[Sequence[str]] = None):
    """Returns ``(command, namespace, RunConfig or None)``; argparse exits
    with status 2 on usage errors."""
    ns = _parser().parse_args(argv)
    cfg = None
    if ns.command == "run":
        cfg = RunConfig(ns.problem, ns.mesh, ns.bc, ns.method, ns.num_steps, ns.newton_tol, ns.out, ns.write_every, ns.refine, ns.workers)
    return ns.command, ns, cfg


def _build_problem(cfg: RunConfig):
    if cfg.mesh is not None:
        mesh = read_mesh(cfg.mesh)
        doc = json.loads(Path(cfg.bc).read_text())
        return problem_from_config(mesh, doc, name=Path(cfg.mesh).stem)
    make = bench.PROBLEMS[cfg.problem]
    if cfg.refine is None:
        return make()
    if cfg.problem == "cylinder":
        return make(cfg.refine, cfg.refine)
    if cfg.problem == "plate":
        return make(n=cfg.refine)
    return make(cfg.refine)


def cmd_run(cfg: RunConfig) -> int:
    try:
        problem = _build_problem(cfg)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
    except (MeshError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    acfg = AnalysisConfig(method=cfg.method, num_steps=cfg.num_steps, newton_tol=cfg.newton_tol, workers=cfg.workers)
    analysis = Analysis(problem, acfg)
    result = analysis.run()
    n_total = acfg.num_steps or problem.num_steps
    files = [write_curves(result.steps, out / "curves.csv", list(problem.monitors)).name]
    for s in result.steps:
        if s.step % cfg.write_every == 0 or s is result.steps[-1]:
            files.append(write_vtk(problem.mesh, step_fields(s), out / f"step_{s.step:04d}.vtk").name)
    status = "limit_reached" if result.limit_reached else "completed"
    manifest = {
        "problem": problem.name,
        "mesh": {"nodes": problem.mesh.num_nodes, "elements": problem.mesh.num_elements, "source": cfg.mesh or "generator"},
        "material": asdict(problem.material),
        "run_config": asdict(cfg),
        "analysis_config": asdict(acfg),
        "num_steps": n_total,
        "status": status,
        "limit_reached": result.limit_reached,
        "last_converged_load_factor": result.last_converged_load,
        "failed_load_factor": result.failed_load_factor,
        "converged_steps": len(result),
        "files": sorted(files),
    }
    write_manifest(out / "run.json", manifest)
    print(f"{problem.name}: {status}, {len(result)} steps, last load factor {result.last_converged_load:.6g}")
    return EXIT_SOLVER if result.limit_reached else EXIT_OK


def cmd_validate(path: str) -> int:
    try:
        mesh = read_mesh(path)
    except (MeshError, OSError) as exc:
        print(f"invalid mesh: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"ok: {mesh.num_nodes} nodes, {mesh.num_elements} elements, {len(mesh.boundary_edges)} boundary edges")
    return EXIT_OK


def cmd_oracle(ns) -> int:
    r_i = ns.ri
    r_o = ns.ri * ns.ratio
    if ns.name == "cyl-limit":
        value = bench.cylinder_limit_pressure(ns.sigma_y, r_i, r_o)
    elif ns.name == "punch-limit":
        value = bench.prandtl_limit_pressure(ns.sigma_y)
    elif ns.name == "tension-limit":
        value = bench.tension_limit_load(ns.sigma_y, ns.width)
    else:
        try:
            mat = Material(ns.E, ns.nu, ns.sigma_y)
            value = float(bench.lame_solution(mat, r_i, r_o, ns.p, r_i if ns.r is None else ns.r))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    print(f"{value:.12g}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        command, ns, cfg = parse_cli(argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if command == "run":
        return cmd_run(cfg)
    if command == "validate":
        return cmd_validate(ns.mesh)
    return cmd_oracle(ns)


if __name__ == "__main__":
    sys.exit(main())
