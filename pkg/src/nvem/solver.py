"""Global assembly, Dirichlet elimination and Newton-Raphson load stepping."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constitutive import BatchReturn, Material, StateField, pressure, return_map_batch, von_mises
from .mesh import Mesh, nodal_areas
from .nodal_assembly import (
    GlobalOperators,
    assemble_body_force,
    assemble_traction,
    averaging_matrix,
    build_operators,
    edge_tractions,
)
from .problem import BenchmarkProblem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalysisConfig:
    method: str = "nvem"
    num_steps: Optional[int] = None  # None: problem default
    newton_tol: float = 1e-8
    newton_max_iter: int = 30
    stab_floor: float = 1.0
    vem_stab_moduli: str = "elastic"
    max_load_factor: Optional[float] = None  # None: problem default
    allow_halving: bool = True
    line_search: bool = True
    max_backtracks: int = 8
    workers: int = 1

    def __post_init__(self):
        if self.method not in ("nvem", "vem"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")
        if self.num_steps is not None and self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")


@dataclass
class SystemState:
    d: np.ndarray
    history: StateField
    step: int = 0
    load_factor: float = 0.0
    converged: bool = True
    tangent: Optional[sp.spmatrix] = None  # consistent tangent at convergence


@dataclass
class LoadStepResult:
    step: int
    load_factor: float
    d: np.ndarray
    sigma: np.ndarray  # (nsamples, 6)
    eps_bar_p: np.ndarray  # (nsamples,)
    strain: np.ndarray  # (nsamples, 3)
    nodal_pressure: np.ndarray
    nodal_von_mises: np.ndarray
    nodal_eps_bar_p: np.ndarray
    reactions: np.ndarray  # internal minus external force on constrained dofs
    reaction_sum: np.ndarray  # (2,) over the problem's reaction dofs
    external_force: np.ndarray
    monitors: Dict[str, np.ndarray]
    newton_iters: int
    residual_history: List[float]

    @property
    def displacement(self) -> np.ndarray:
        return self.d.reshape(-1, 2)


@dataclass
class AnalysisResult:
    problem: str
    config: AnalysisConfig
    steps: List[LoadStepResult] = field(default_factory=list)
    limit_reached: bool = False
    failed_load_factor: Optional[float] = None
    failure_history: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, k):
        return self.steps[k]

    @property
    def last(self) -> LoadStepResult:
        return self.steps[-1]

    @property
    def last_converged_load(self) -> float:
        return self.steps[-1].load_factor if self.steps else 0.0


class StepFailure(RuntimeError):
    def __init__(self, msg, residuals):
        super().__init__(msg)
        self.residuals = residuals


def _return_map(material, history, strain3, workers):
    if workers <= 1 or len(strain3) < 2 * workers:
        return return_map_batch(material, history, strain3)
    bounds = np.linspace(0, len(strain3), workers + 1).astype(int)

    def chunk(k):
        s = slice(bounds[k], bounds[k + 1])
        part = StateField(history.eps_p[s], history.beta[s], history.eps_bar_p[s])
        return return_map_batch(material, part, strain3[s])

    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(chunk, range(workers)))
    return BatchReturn(
        np.concatenate([p.sigma for p in parts]),
        np.concatenate([p.tangent6 for p in parts]),
        StateField(
            np.concatenate([p.state.eps_p for p in parts]),
            np.concatenate([p.state.beta for p in parts]),
            np.concatenate([p.state.eps_bar_p for p in parts]),
        ),
        np.concatenate([p.plastic for p in parts]),
        np.concatenate([p.delta_gamma for p in parts]),
    )


def assemble(ops: GlobalOperators, material: Material, history: StateField, d: np.ndarray, f_ext=None, workers=1):
    """Tangent, residual (internal minus external force) and the trial
    return-mapping output at displacement ``d`` against committed ``history``."""
    strain = (ops.strain @ d).reshape(-1, 3)
    ret = _return_map(material, history, strain, workers)
    K = ops.tangent(ret.tangent3)
    r = ops.internal_force(ret.sigma3, d)
    if f_ext is not None:
        r = r - f_ext
    return K, r, ret


def assemble_standard_vem(mesh: Mesh, material: Material, history: StateField, d, stab_floor=1.0, vem_stab_moduli="elastic"):
    ops = build_operators(mesh, material, "vem", stab_floor, vem_stab_moduli=vem_stab_moduli)
    K, r, _ = assemble(ops, material, history, d)
    return K, r


def apply_dirichlet(K: sp.spmatrix, rhs: np.ndarray, constrained: np.ndarray, increments: np.ndarray):
    """Eliminate constrained DOFs.

    Returns ``(K_ff, rhs_f, free)`` for ``K_ff du_f = rhs_f``, where the
    prescribed increments have been moved to the right-hand side.
    """
    constrained = np.asarray(constrained, dtype=int)
    if len(np.unique(constrained)) != len(constrained):
        raise ValueError("duplicate constrained dofs")
    n = K.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[constrained] = False
    free = np.flatnonzero(mask)
    K = K.tocsr()
    K_ff = K[free][:, free]
    rhs_f = rhs[free]
    if np.any(increments):
        rhs_f = rhs_f - K[free][:, constrained] @ increments
    return K_ff.tocsc(), rhs_f, free


def _solve(K_ff, rhs):
    # symmetric tangent: minimum-degree ordering on A^T + A with diagonal pivots
    lu = spla.splu(K_ff, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("singular tangent")
    return x


class Analysis:
    """Incremental elastoplastic analysis of a :class:`BenchmarkProblem`."""

    def __init__(self, problem: BenchmarkProblem, config: AnalysisConfig = AnalysisConfig()):
        self.problem = problem
        self.config = config
        mesh = problem.mesh
        self.mesh = mesh
        self.material = problem.material
        self.ops = build_operators(mesh, problem.material, config.method, config.stab_floor, vem_stab_moduli=config.vem_stab_moduli)
        self.f_ref = np.zeros(mesh.num_dofs)
        for spec in problem.neumann:
            edges = mesh.edges_with_tag(spec.tag)
            t = edge_tractions(mesh, edges, traction=spec.traction, pressure=spec.pressure)
            self.f_ref += assemble_traction(mesh, edges, t, config.method)
        if problem.body_force is not None:
            self.f_ref += assemble_body_force(mesh, problem.body_force, config.method)
        self.constrained, self.prescribed_values = problem.prescribed()
        free = np.ones(mesh.num_dofs, dtype=bool)
        free[self.constrained] = False
        self.free = np.flatnonzero(free)
        self.reaction_dofs = problem.reaction_dofs(self.constrained)
        self._reaction_pos = np.searchsorted(self.constrained, self.reaction_dofs)
        self._to_nodes = None
        if config.method == "vem":
            self._to_nodes = averaging_matrix(mesh, nodal_areas(mesh))
        self.state = SystemState(np.zeros(mesh.num_dofs), StateField.virgin(self.ops.num_samples))

    # -- single load step --------------------------------------------------

    def _newton(self, d0: np.ndarray, history: StateField, load: float):
        cfg = self.config
        c, free = self.constrained, self.free
        f_ext = load * self.f_ref
        target = load * self.prescribed_values
        d = d0.copy()

        K, r, ret = assemble(self.ops, self.material, history, d, f_ext, cfg.workers)
        if self.state.tangent is not None:
            # points sitting on the yield surface would otherwise predict elastically
            K = self.state.tangent
        K_ff, rhs, _ = apply_dirichlet(K, -r, c, target - d[c])
        try:
            d[free] += _solve(K_ff, rhs)
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            raise StepFailure(f"linear solve failed: {exc}", [])
        d[c] = target
        iters = 1
        residuals = []
        K, r, ret = assemble(self.ops, self.material, history, d, f_ext, cfg.workers)
        while True:
            res = float(np.linalg.norm(r[free]))
            ref = max(float(np.linalg.norm(f_ext)), float(np.linalg.norm(r[c])), 1.0)
            residuals.append(res / ref)
            if not np.isfinite(res):
                raise StepFailure("non-finite residual", residuals)
            if res <= cfg.newton_tol * ref:
                return d, ret, r, K, iters, residuals
            if iters >= cfg.newton_max_iter:
                raise StepFailure(f"no convergence in {iters} iterations", residuals)
            K_ff = K.tocsr()[free][:, free].tocsc()
            try:
                dx = _solve(K_ff, -r[free])
            except (RuntimeError, np.linalg.LinAlgError) as exc:
                raise StepFailure(f"linear solve failed: {exc}", residuals)
            # backtracking on the residual norm; the full step is kept
            # whenever it reduces the residual
            s = 1.0
            for k in range(cfg.max_backtracks + 1 if cfg.line_search else 1):
                trial = d.copy()
                trial[free] += s * dx
                K_t, r_t, ret_t = assemble(self.ops, self.material, history, trial, f_ext, cfg.workers)
                if np.linalg.norm(r_t[free]) < (1.0 - 1e-4 * s) * res:
                    break
                s *= 0.5
            d, K, r, ret = trial, K_t, r_t, ret_t
            iters += 1

    def _commit(self, d, ret, r, K, load, iters, residuals) -> LoadStepResult:
        self.state = SystemState(d, ret.state, self.state.step + 1, load, True, K)
        reactions = r[self.constrained].copy()
        rsum = np.zeros(2)
        sel = reactions[self._reaction_pos]
        rdofs = self.reaction_dofs
        rsum[0] = sel[rdofs % 2 == 0].sum()
        rsum[1] = sel[rdofs % 2 == 1].sum()
        p = pressure(ret.sigma)
        vm = von_mises(ret.sigma)
        ebar = ret.state.eps_bar_p
        if self._to_nodes is not None:
            p, vm, ebar_n = (self._to_nodes @ x for x in (p, vm, ebar))
        else:
            ebar_n = ebar
        disp = d.reshape(-1, 2)
        return LoadStepResult(
            step=self.state.step,
            load_factor=load,
            d=d.copy(),
            sigma=ret.sigma,
            eps_bar_p=ebar.copy(),
            strain=(self.ops.strain @ d).reshape(-1, 3),
            nodal_pressure=p,
            nodal_von_mises=vm,
            nodal_eps_bar_p=ebar_n.copy(),
            reactions=reactions,
            reaction_sum=rsum,
            external_force=load * self.f_ref,
            monitors={k: disp[v].copy() for k, v in self.problem.monitor_nodes.items()},
            newton_iters=iters,
            residual_history=residuals,
        )

    def step_to(self, load: float) -> LoadStepResult:
        """Advance the committed state to ``load``; raises :class:`StepFailure`."""
        d, ret, r, K, iters, residuals = self._newton(self.state.d, self.state.history, load)
        return self._commit(d, ret, r, K, load, iters, residuals)

    # -- driver -------------------------------------------------------------

    def run(self, loads: Optional[np.ndarray] = None) -> AnalysisResult:
        cfg = self.config
        if loads is None:
            n = cfg.num_steps or self.problem.num_steps
            top = cfg.max_load_factor if cfg.max_load_factor is not None else self.problem.max_load_factor
            loads = top * np.arange(1, n + 1) / n
        out = AnalysisResult(self.problem.name, cfg)
        for load in loads:
            try:
                out.steps.append(self.step_to(float(load)))
                continue
            except StepFailure as exc:
                history = exc.residuals
                log.info("step to %.6g failed (%s)", load, exc)
            ok = False
            failed_at = float(load)
            if cfg.allow_halving:
                mid = 0.5 * (self.state.load_factor + float(load))
                failed_at = mid
                try:
                    out.steps.append(self.step_to(mid))
                    failed_at = float(load)
                    out.steps.append(self.step_to(float(load)))
                    ok = True
                except StepFailure as exc:
                    history = exc.residuals
            if not ok:
                out.limit_reached = True
                out.failed_load_factor = failed_at
                out.failure_history = history
                break
        return out


def solve_load_step(analysis: Analysis, load: float) -> SystemState:
    analysis.step_to(load)
    return analysis.state


def run_analysis(problem: BenchmarkProblem, config: AnalysisConfig = AnalysisConfig(), loads=None) -> AnalysisResult:
    return Analysis(problem, config).run(loads)
