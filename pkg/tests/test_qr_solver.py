import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parabolic_qr.errors import DomainError, PreconditionError
from parabolic_qr.fields import FLUX, FLUX_RATE, BoundaryFluxSeries, SpaceTimeField, SpatialField, sample
from parabolic_qr.grid import GridSpec, boundary_index_arrays, lineup
from parabolic_qr.qr_solver import (
    QrProblem, assemble_dirichlet_K1, assemble_gradient, assemble_neumann_K2, assemble_operator_D,
    assemble_system, objective_terms, solve_qr,
)

import oracles

SPEC = GridSpec(1.0, 6, 5, 0.2)


def random_inputs(seed, spec=SPEC):
    rng = np.random.default_rng(seed)
    c = SpatialField(spec, rng.normal(size=spec.spatial_shape))
    f = SpaceTimeField(spec, 1.0 + rng.random(spec.shape))
    gt = BoundaryFluxSeries(spec, rng.normal(size=(4 * spec.nx, spec.nt + 1)), FLUX_RATE)
    return c, f, gt


@pytest.mark.parametrize("seed", range(3))
def test_matrices_match_loop_oracles(seed):
    c, f, _ = random_inputs(seed)
    f_t = oracles.dense_time_derivative(f.values, SPEC.dt)
    assert np.max(np.abs(assemble_operator_D(SPEC, c, f).toarray() - oracles.dense_D(SPEC, c.values, f.values, f_t))) <= 1e-12
    Dx, Dy = assemble_gradient(SPEC)
    ox, oy = oracles.dense_gradients(SPEC)
    assert np.max(np.abs(Dx.toarray() - ox)) <= 1e-12 and np.max(np.abs(Dy.toarray() - oy)) <= 1e-12
    assert np.array_equal(assemble_dirichlet_K1(SPEC).toarray(), oracles.dense_K1(SPEC))
    assert np.max(np.abs(assemble_neumann_K2(SPEC).toarray() - oracles.dense_K2(SPEC))) <= 1e-12


def test_D_structure():
    c, f, _ = random_inputs(0)
    D = assemble_operator_D(SPEC, c, f).tocsr()
    nonzero_rows = np.flatnonzero(np.diff(D.indptr))
    assert len(nonzero_rows) == (SPEC.nx - 1) ** 2 * SPEC.nt
    # row for (2,2,2) couples to level 1 with -1/dt - f_t/f0 in one entry
    r, col = lineup(SPEC, (2, 2, 2)) - 1, lineup(SPEC, (2, 2, 1)) - 1
    f_t = oracles.dense_time_derivative(f.values, SPEC.dt)
    assert D[r, col] == pytest.approx(-1 / SPEC.dt - f_t[1, 1, 1] / f.values[1, 1, 0])


def test_D_annihilates_constants():
    zero_c = SpatialField(SPEC, np.zeros(SPEC.spatial_shape))
    f = SpaceTimeField(SPEC, np.full(SPEC.shape, 1.2))
    D = assemble_operator_D(SPEC, zero_c, f)
    assert np.allclose(D @ np.full(SPEC.size, 3.0), 0.0, atol=1e-10)


def test_D_matches_pointwise_stencil():
    spec = GridSpec(1.0, 8, 6, 0.3)
    c = sample(lambda x, y: 0.2 * (x**2 + y**2), spec)
    fn = lambda x, y, t: 1 + 0.2 * np.exp(t * (x**2 + y**2))
    ftn = lambda x, y, t: 0.2 * (x**2 + y**2) * np.exp(t * (x**2 + y**2))
    f, f_t = sample(fn, spec, True), sample(ftn, spec, True)
    v = sample(lambda x, y, t: np.sin(x + 2 * y) * np.exp(t), spec, True).values
    Dv = (assemble_operator_D(spec, c, f, f_t) @ v.ravel()).reshape(spec.shape)
    dt, h2 = spec.dt, spec.dx**2
    lap = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4 * v[1:-1, 1:-1]) / h2
    expect = ((v[1:-1, 1:-1, 1:] - v[1:-1, 1:-1, :-1]) / dt - lap[..., 1:]
              - c.values[1:-1, 1:-1, None] * v[1:-1, 1:-1, 1:]
              - f_t.values[1:-1, 1:-1, 1:] / f.values[1:-1, 1:-1, :1] * v[1:-1, 1:-1, :1])
    assert np.max(np.abs(Dv[1:-1, 1:-1, 1:] - expect)) <= 1e-12 * np.max(np.abs(expect))
    assert np.all(Dv[:, :, 0] == 0) and np.all(Dv[0] == 0) and np.all(Dv[:, -1] == 0)


def test_gradient_and_boundary_examples():
    v = sample(lambda x, y, t: x + 0 * y + 0 * t, SPEC, True).values.ravel()
    Dx, Dy = assemble_gradient(SPEC)
    populated = np.zeros(SPEC.shape, dtype=bool)
    populated[1:, 1:, :] = True
    assert np.allclose((Dx @ v).reshape(SPEC.shape)[populated], 1.0)
    assert np.allclose(Dy @ v, 0.0)
    assert np.allclose(Dx @ np.ones(SPEC.size), 0.0)
    K1 = assemble_dirichlet_K1(SPEC)
    assert K1.nnz == 4 * SPEC.nx * (SPEC.nt + 1)
    assert np.array_equal((K1 @ K1).toarray(), K1.toarray())
    K2 = assemble_neumann_K2(SPEC)
    k2v = (K2 @ v).reshape(SPEC.shape)
    assert np.allclose(k2v[-1, :, :], 1.0) and np.allclose(k2v[0, :, :], -1.0)
    assert np.allclose(k2v[1:-1, 0, :], 0.0)
    assert np.allclose(K2 @ np.ones(SPEC.size), 0.0)


@pytest.mark.parametrize("seed", range(2))
def test_dense_least_squares_oracle(seed):
    c, f, gt = random_inputs(seed)
    eps = 1e-4
    sol = solve_qr(QrProblem(SPEC, c, f, gt, eps))
    ref = oracles.dense_qr_minimizer(SPEC, c.values, f.values, gt.to_lineup(), eps)
    assert np.linalg.norm(sol.v.values.ravel() - ref) <= 1e-8 * np.linalg.norm(ref)
    assert np.allclose(sol.p.values, sol.v.values[:, :, 0] / f.values[:, :, 0])


def test_cg_solver_agrees_with_direct():
    c, f, gt = random_inputs(5)
    a = solve_qr(QrProblem(SPEC, c, f, gt, 1e-2, solver="direct"))
    b = solve_qr(QrProblem(SPEC, c, f, gt, 1e-2, solver="cg", tol=1e-12))
    assert np.allclose(a.v.values, b.v.values, rtol=1e-8, atol=1e-10)
    assert b.iterations > 0 and b.residual <= 1e-12


def test_quadratic_form_consistency():
    c, f, gt = random_inputs(1)
    sysm = assemble_system(QrProblem(SPEC, c, f, gt, 1e-3))
    x = np.random.default_rng(9).normal(size=SPEC.size)
    for M in (sysm.D, sysm.K1, sysm.K2, sysm.Dx, sysm.Dy):
        lhs = x @ ((M.T @ M) @ x)
        assert lhs == pytest.approx(np.sum((M @ x) ** 2), rel=1e-12)
    misfit, penalty = objective_terms(sysm, x)
    quad = x @ (sysm.A @ x) - 2 * sysm.b @ x + sysm.g @ sysm.g
    assert quad == pytest.approx(misfit + sysm.epsilon * penalty, rel=1e-10)
    assert x @ (sysm.A @ x) > 0


def test_optimality_and_symmetry():
    c, f, gt = random_inputs(2)
    prob = QrProblem(SPEC, c, f, gt, 1e-6)
    sysm = assemble_system(prob)
    A = sysm.A
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()
    sol = solve_qr(prob)
    assert np.linalg.norm(A @ sol.v.values.ravel() - sysm.b) / np.linalg.norm(sysm.b) <= prob.tol


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**31))
def test_epsilon_monotonicity(seed):
    c, f, gt = random_inputs(seed)
    terms = []
    for eps in 10.0 ** np.arange(-9, -3):
        prob = QrProblem(SPEC, c, f, gt, float(eps))
        terms.append(objective_terms(assemble_system(prob), solve_qr(prob).v.values.ravel()))
    misfit, penalty = np.array(terms).T
    assert np.all(np.diff(misfit) >= -1e-9 * misfit[1:])
    assert np.all(np.diff(penalty) <= 1e-9 * penalty[:-1])


def test_zero_data_gives_zero():
    c, f, _ = random_inputs(0)
    zero = BoundaryFluxSeries(SPEC, np.zeros((24, 6)), FLUX_RATE)
    sol = solve_qr(QrProblem(SPEC, c, f, zero))
    assert np.array_equal(sol.v.values, np.zeros(SPEC.shape)) and np.array_equal(sol.p.values, np.zeros((7, 7)))


def test_exact_data_recovery():
    """v built to satisfy D v = 0 with zero boundary trace is recovered from K2 v."""
    spec = SPEC
    c = sample(lambda x, y: 0.2 * (x**2 + y**2), spec)
    f = sample(lambda x, y, t: 1 + 0.2 * np.exp(t * (x**2 + y**2)), spec, True)
    f_t = oracles.dense_time_derivative(f.values, spec.dt)
    m = spec.nx - 1
    v = np.zeros(spec.shape)
    X, Y = spec.mesh()
    v[:, :, 0] = np.cos(np.pi * X / 2) * np.cos(np.pi * Y / 2) * (1 + 0.5 * X)
    v[0, :, 0] = v[-1, :, 0] = v[:, 0, 0] = v[:, -1, 0] = 0.0
    T = np.diag(-2 * np.ones(m)) + np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)
    lap = (np.kron(T, np.eye(m)) + np.kron(np.eye(m), T)) / spec.dx**2
    M = np.eye(m * m) / spec.dt - lap - np.diag(c.values[1:-1, 1:-1].ravel())
    for l in range(1, spec.nt + 1):
        rhs = v[1:-1, 1:-1, l - 1] / spec.dt + f_t[1:-1, 1:-1, l] / f.values[1:-1, 1:-1, 0] * v[1:-1, 1:-1, 0]
        v[1:-1, 1:-1, l] = np.linalg.solve(M, rhs.ravel()).reshape(m, m)
    vec = v.ravel()
    D = assemble_operator_D(spec, c, f)
    assert np.max(np.abs(D @ vec)) <= 1e-9 * np.max(np.abs(v)) / spec.dt
    ii, jj = boundary_index_arrays(spec)
    g = (assemble_neumann_K2(spec) @ vec).reshape(spec.shape)[ii, jj, :]
    sol = solve_qr(QrProblem(spec, c, f, BoundaryFluxSeries(spec, g, FLUX_RATE), 1e-12))
    assert np.linalg.norm(sol.v.values.ravel() - vec) <= 1e-4 * np.linalg.norm(vec)


def test_preconditions():
    c, f, gt = random_inputs(0)
    with pytest.raises(PreconditionError):
        QrProblem(SPEC, c, f, gt, 0.0)
    with pytest.raises(PreconditionError):
        QrProblem(SPEC, c, f, BoundaryFluxSeries(SPEC, gt.values, FLUX))
    bad = f.values.copy()
    bad[3, 2, 0] = 0.0
    with pytest.raises(PreconditionError, match=r"\(4, 3\)"):
        QrProblem(SPEC, c, SpaceTimeField(SPEC, bad), gt)
    with pytest.raises(PreconditionError):
        assemble_operator_D(SPEC, c, SpaceTimeField(SPEC, bad))
    other = GridSpec(1.0, 6, 5, 0.3)
    with pytest.raises(DomainError):
        QrProblem(SPEC, SpatialField(other, c.values), f, gt)
    with pytest.raises(PreconditionError):
        QrProblem(SPEC, c, f, gt, solver="qr")


def test_report_and_weighting():
    c, f, gt = random_inputs(3)
    sol = solve_qr(QrProblem(SPEC, c, f, gt, 1e-6, weighted_gram=True))
    for key in ("epsilon", "solver", "weighted_gram", "unknowns", "nnz", "iterations", "residual",
                "assembly_seconds", "solve_seconds"):
        assert key in sol.report
    assert sol.report["weighted_gram"] is True and sol.report["unknowns"] == SPEC.size
    w = assemble_system(QrProblem(SPEC, c, f, gt, 1e-6, weighted_gram=True)).interior_weight
    assert w == pytest.approx(SPEC.dt * SPEC.dx**2)
