import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvem.bench import cylinder_limit_pressure, lame_solution, make_cylinder, make_tension, rectangle_mesh
from nvem.constitutive import Material, StateField
from nvem.nodal_assembly import build_operators, plane_elastic_moduli
from nvem.problem import BenchmarkProblem, DirichletSpec, NeumannSpec, PrescribedNodes
from nvem.solver import (
    Analysis,
    AnalysisConfig,
    StepFailure,
    apply_dirichlet,
    assemble,
    assemble_standard_vem,
    run_analysis,
    solve_load_step,
)

MAT = Material(1000.0, 0.3, 1.0)


def patch_problem(mesh, A, c, material=MAT):
    nodes = mesh.boundary_node_indices
    values = mesh.nodes[nodes] @ np.asarray(A).T + c
    return BenchmarkProblem("patch", mesh, material, [PrescribedNodes(nodes, values)], num_steps=1)


def test_config_validation():
    with pytest.raises(ValueError):
        AnalysisConfig(method="fem")
    with pytest.raises(ValueError):
        AnalysisConfig(newton_tol=0.0)
    with pytest.raises(ValueError):
        AnalysisConfig(num_steps=0)


def test_zero_state_residual_and_tangent(grid3):
    ops = build_operators(grid3, MAT)
    K, r, ret = assemble(ops, MAT, StateField.virgin(ops.num_samples), np.zeros(grid3.num_dofs))
    np.testing.assert_array_equal(r, 0.0)
    D = np.broadcast_to(plane_elastic_moduli(MAT), (ops.num_samples, 3, 3))
    np.testing.assert_allclose(K.toarray(), ops.tangent(D).toarray(), rtol=1e-12, atol=1e-12 * abs(K).max())


@pytest.mark.parametrize("method", ["nvem", "vem"])
def test_patch_test_interior_residual(grid3, method):
    A = np.array([[0.01, 0.02], [-0.005, 0.015]])
    res = run_analysis(patch_problem(grid3, A, [0.1, -0.2]), AnalysisConfig(method=method))
    d = res.last.d
    np.testing.assert_allclose(d, (grid3.nodes @ A.T + [0.1, -0.2]).ravel(), rtol=1e-9, atol=1e-12)
    assert res.last.newton_iters == 1


def test_fully_fixed_no_load(grid3):
    pb = BenchmarkProblem("fixed", grid3, MAT, [DirichletSpec(t, c) for t in (1, 2, 3, 4) for c in (0, 1)], num_steps=1)
    res = run_analysis(pb)
    np.testing.assert_array_equal(res.last.d, 0.0)


def test_single_element_dense_oracle(unit_square):
    mat = Material(100.0, 0.25, 1e9)
    dirichlet = [DirichletSpec(1, 0), DirichletSpec(1, 1), DirichletSpec(3, 1, 0.01)]
    pb = BenchmarkProblem("one", unit_square, mat, dirichlet, num_steps=1)
    for method in ("nvem", "vem"):
        an = Analysis(pb, AnalysisConfig(method=method))
        d = an.run().last.d
        ops = an.ops
        K = ops.tangent(np.broadcast_to(plane_elastic_moduli(mat), (ops.num_samples, 3, 3))).toarray()
        c, vals = pb.prescribed()
        free = np.setdiff1d(np.arange(8), c)
        expected = np.zeros(8)
        expected[c] = vals
        expected[free] = np.linalg.solve(K[np.ix_(free, free)], -K[np.ix_(free, c)] @ vals)
        np.testing.assert_allclose(d, expected, rtol=1e-12, atol=1e-15)


def test_equilibrium_reactions_balance():
    pb = make_cylinder(6, 6, p=60.0)
    an = Analysis(pb, AnalysisConfig(num_steps=2))
    for s in an.run():
        reac = np.zeros(pb.mesh.num_dofs)
        reac[an.constrained] = s.reactions
        bal = reac.reshape(-1, 2).sum(axis=0) + s.external_force.reshape(-1, 2).sum(axis=0)
        assert np.all(np.abs(bal) <= 1e-8 * np.linalg.norm(s.external_force))


def test_apply_dirichlet_rejects_duplicates(grid3):
    ops = build_operators(grid3, MAT)
    K, r, _ = assemble(ops, MAT, StateField.virgin(ops.num_samples), np.zeros(grid3.num_dofs))
    with pytest.raises(ValueError):
        apply_dirichlet(K, -r, np.array([0, 0]), np.zeros(2))


def test_conflicting_prescriptions(grid3):
    pb = BenchmarkProblem("bad", grid3, MAT, [DirichletSpec(1, 0, 0.0), DirichletSpec(4, 0, 1.0)])
    with pytest.raises(ValueError, match="conflicting"):
        pb.prescribed()


def test_elastic_step_single_iteration_and_path_independence():
    pb = make_cylinder(8, 8, p=50.0)
    one = run_analysis(pb, AnalysisConfig(num_steps=1))
    ten = run_analysis(pb, AnalysisConfig(num_steps=10))
    assert one.last.newton_iters == 1
    assert all(s.newton_iters == 1 for s in ten)
    np.testing.assert_allclose(ten.last.d, one.last.d, rtol=1e-10, atol=1e-14)


def test_lame_coarse():
    pb = make_cylinder(8, 8, p=50.0)
    u = run_analysis(pb, AnalysisConfig(num_steps=1)).last.monitors["A"][0]
    assert u == pytest.approx(lame_solution(pb.material, 100, 200, 50.0, 100.0), rel=0.01)


def test_tangent_residual_consistency():
    pb = make_tension(4)
    an = Analysis(pb, AnalysisConfig(num_steps=5, max_load_factor=0.4))
    an.run()
    rng = np.random.default_rng(1)
    d = an.state.d + 1e-3 * rng.standard_normal(pb.mesh.num_dofs)
    K, r, ret = assemble(an.ops, pb.material, an.state.history, d)
    assert ret.plastic.any()
    v = rng.standard_normal(len(d))
    h = 1e-7
    _, rp, _ = assemble(an.ops, pb.material, an.state.history, d + h * v)
    _, rm, _ = assemble(an.ops, pb.material, an.state.history, d - h * v)
    fd = (rp - rm) / (2 * h)
    assert np.linalg.norm(fd - K @ v) <= 1e-5 * np.linalg.norm(K @ v)


def test_commit_is_deterministic():
    pb = make_tension(4)
    a = Analysis(pb, AnalysisConfig(num_steps=10))
    for k in range(1, 6):
        a.step_to(0.1 * k)
    saved = (a.state.d.copy(), a.state.history.copy(), a.state.tangent, a.state.load_factor, a.state.step)
    first = a.step_to(0.6)
    a.state.d, a.state.history, a.state.tangent, a.state.load_factor, a.state.step = saved
    a.state.d = saved[0].copy()
    again = a.step_to(0.6)
    np.testing.assert_array_equal(first.d, again.d)
    np.testing.assert_array_equal(first.sigma, again.sigma)


def test_quadratic_convergence_in_plastic_step():
    pb = make_cylinder(8, 8, p=170.0)
    res = run_analysis(pb, AnalysisConfig(num_steps=10))
    hist = max((s.residual_history for s in res), key=len)
    assert len(hist) >= 3
    tail = [h for h in hist if h > 1e-14]
    rates = [tail[k + 1] / tail[k] ** 2 for k in range(len(tail) - 1) if tail[k] < 1e-2]
    assert rates and max(rates) < 1e3


def test_limit_load_failure_signal():
    # pressure ramped past the collapse pressure must end in a Newton failure
    p_lim = cylinder_limit_pressure(240.0, 100.0, 200.0)
    pb = make_cylinder(16, 16, nu=0.4999, p=1.1 * p_lim)
    res = run_analysis(pb, AnalysisConfig(num_steps=22))
    assert res.limit_reached
    assert res.failure_history
    assert 0.9 * p_lim <= 1.1 * p_lim * res.last_converged_load <= 1.04 * p_lim


def test_solve_load_step_wrapper(grid3):
    pb = patch_problem(grid3, np.eye(2) * 1e-3, [0, 0])
    an = Analysis(pb)
    state = solve_load_step(an, 1.0)
    assert state.step == 1 and state.converged


def test_assemble_standard_vem_matches_operators(grid3):
    d = np.random.default_rng(0).standard_normal(grid3.num_dofs) * 1e-4
    K, r = assemble_standard_vem(grid3, MAT, StateField.virgin(grid3.num_elements), d)
    ops = build_operators(grid3, MAT, "vem")
    K2, r2, _ = assemble(ops, MAT, StateField.virgin(grid3.num_elements), d)
    np.testing.assert_array_equal(K.toarray(), K2.toarray())
    np.testing.assert_array_equal(r, r2)


def test_parallel_return_map_identical():
    pb = make_tension(6)
    a = run_analysis(pb, AnalysisConfig(num_steps=6, max_load_factor=0.5))
    b = run_analysis(pb, AnalysisConfig(num_steps=6, max_load_factor=0.5, workers=3))
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.d, t.d)
        np.testing.assert_array_equal(s.reactions, t.reactions)


@pytest.mark.parametrize("method", ["nvem", "vem"])
def test_vem_vs_nvem_compressible_agreement(method):
    pb = make_cylinder(12, 12, nu=0.3)
    res = run_analysis(pb, AnalysisConfig(method=method, num_steps=10))
    assert not res.limit_reached
    uA = [s.monitors["A"][0] for s in res]
    assert np.all(np.diff(uA) > 0)
