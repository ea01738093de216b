import dataclasses

import numpy as np
import pytest

from heomheat.dynamics import (PropagationError, SolverOptions,
                               SteadyStateError, augmented_system,
                               converged_steady_state, default_time_step,
                               propagate, steady_state)
from heomheat.hierarchy import AdoState, apply_heom_rhs, assemble_operator, \
    build_space
from heomheat.models import SIGMA_X, Drive, gibbs_state, two_level_model


@pytest.fixture(scope="module")
def model():
    return two_level_model(0.2, n_terms=1)


def test_augmented_system_trace_row(model):
    space = build_space(model.decompositions(), 2)
    A = assemble_operator(space, model)
    M, b = augmented_system(A, 2)
    row = M.getrow(0).toarray().ravel()
    assert row[0] == 1 and row[3] == 1 and np.count_nonzero(row) == 2
    assert b[0] == 1 and np.count_nonzero(b) == 1


@pytest.mark.parametrize("method,prec", [
    ("bicgstab", "block-jacobi"), ("gmres", "block-jacobi"),
    ("lgmres", "block-jacobi"), ("direct", "none"), ("bicgstab", "ilu")])
def test_solvers_agree(model, method, prec):
    ref = steady_state(model, SolverOptions(depth=4, method="direct"))
    st, info = steady_state(model, SolverOptions(depth=4, method=method,
                                                 preconditioner=prec),
                            return_info=True)
    assert info.residual <= 1e-10
    np.testing.assert_allclose(st.matrices, ref.matrices, atol=1e-8)
    assert np.trace(st.rho).real == pytest.approx(1.0, abs=1e-12)


def test_steady_state_is_stationary(model):
    st = steady_state(model, SolverOptions(depth=5))
    rhs = apply_heom_rhs(st.space, model, st)
    assert np.linalg.norm(rhs.matrices) / np.linalg.norm(st.matrices) < 1e-9
    np.testing.assert_allclose(st.rho, st.rho.conj().T, atol=1e-14)
    assert np.all(np.linalg.eigvalsh(st.rho) > 0)


def test_unscaled_solution_matches_scaled(model):
    a = steady_state(model, SolverOptions(depth=4))
    b = steady_state(model, SolverOptions(depth=4, scaled=False))
    np.testing.assert_allclose(a.unscaled(), b.matrices, atol=1e-8)


def test_nonconvergence_reports_residuals(model):
    with pytest.raises(SteadyStateError) as err:
        steady_state(model, SolverOptions(depth=6, maxiter=2,
                                          preconditioner="none"))
    assert err.value.residuals


def test_bad_options(model):
    with pytest.raises(ValueError):
        steady_state(model, SolverOptions(depth=2, method="cg"))
    with pytest.raises(ValueError):
        steady_state(model, SolverOptions(depth=2, preconditioner="amg"))
    driven = model.replace(drives=(Drive(SIGMA_X, amplitude=0.1, frequency=1),))
    with pytest.raises(ValueError, match="time-independent"):
        steady_state(driven)


def test_propagation_relaxes_to_steady_state(model):
    opts = SolverOptions(depth=4)
    ss = steady_state(model, opts)
    rho0 = gibbs_state(model.hamiltonian, 3.0)
    traj = propagate(model, AdoState.factorized(ss.space, rho0), [0, 40, 80],
                     dt=0.01)
    assert len(traj) == 3
    assert np.max(np.abs(traj.final.matrices - ss.matrices)) < 1e-7
    for s in traj.states:
        assert np.trace(s.rho).real == pytest.approx(1.0, abs=1e-12)


def test_rk4_fourth_order(model):
    space = build_space(model.decompositions(), 3)
    s0 = AdoState.factorized(space, np.diag([0.0, 1.0]).astype(complex))
    ref = propagate(model, s0, [0, 1.0], dt=0.0025).final.matrices
    e1 = np.max(np.abs(propagate(model, s0, [0, 1.0], dt=0.04).final.matrices - ref))
    e2 = np.max(np.abs(propagate(model, s0, [0, 1.0], dt=0.02).final.matrices - ref))
    assert 10 < e1 / e2 < 22


def test_adaptive_matches_fixed(model):
    space = build_space(model.decompositions(), 3)
    s0 = AdoState.factorized(space, np.diag([0.0, 1.0]).astype(complex))
    times = np.linspace(0, 3, 4)
    a = propagate(model, s0, times, adaptive=True, atol=1e-10, dt=0.05)
    f = propagate(model, s0, times, dt=0.002)
    np.testing.assert_allclose(a.rhos, f.rhos, atol=1e-8)


def test_step_underflow(model):
    space = build_space(model.decompositions(), 3)
    s0 = AdoState.factorized(space, np.diag([0.0, 1.0]).astype(complex))
    with pytest.raises(PropagationError, match="underflow"):
        propagate(model, s0, [0, 1], adaptive=True, atol=1e-30, dt=0.1,
                  min_dt=1e-3)


def test_blow_up_detected(model):
    space = build_space(model.decompositions(), 3)
    s0 = AdoState.factorized(space, np.diag([0.0, 1.0]).astype(complex))
    with pytest.raises(PropagationError, match="non-finite"):
        propagate(model, s0, [0, 200], dt=5.0)


def test_times_validation(model):
    space = build_space(model.decompositions(), 1)
    s0 = AdoState.factorized(space, np.eye(2) / 2)
    with pytest.raises(ValueError):
        propagate(model, s0, [1.0, 0.5])


def test_default_time_step(model):
    space = build_space(model.decompositions(), 2)
    assert default_time_step(space, model) == pytest.approx(0.01 / np.max(space.rates))


def test_converged_steady_state(model):
    res = converged_steady_state(model, SolverOptions(depth=2), rtol=1e-4)
    assert res.rel_change < 1e-4
    assert res.depth == res.state.space.depth
    assert [h[0] for h in res.history][-1] == res.depth + 2
    with pytest.raises(SteadyStateError, match="not converged"):
        converged_steady_state(model, SolverOptions(depth=2), rtol=1e-14,
                               max_depth=4)


def test_solver_options_defaults():
    o = SolverOptions()
    assert o.preconditioner == "block-jacobi" and o.tol == 1e-10
    assert dataclasses.replace(o, depth=3).depth == 3
