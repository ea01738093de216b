"""
Time propagation of the ADO hierarchy and direct steady-state solution.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hierarchy import AdoState, assemble_operator, commutator_super, \
    build_space
from .models import gibbs_state

__all__ = [
    "SolverOptions", "SteadyStateError", "PropagationError", "Trajectory",
    "steady_state", "propagate", "default_time_step", "initial_guess",
    "augmented_system", "converged_steady_state", "DepthConvergence",
]

log = logging.getLogger(__name__)


class SteadyStateError(RuntimeError):
    """The steady-state solver did not converge.

    Attributes
    ----------
    residuals : list of float
        Relative residual after each iteration.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class PropagationError(RuntimeError):
    """Time stepping produced non-finite values or the step underflowed."""


@dataclass
class SolverOptions:
    """Steady-state solver settings.

    ``method`` is ``"bicgstab"``, ``"gmres"``, ``"lgmres"`` or ``"direct"``;
    ``preconditioner`` is ``"ilu"``, ``"block-jacobi"`` or ``"none"``.
    """

    depth: int = 6
    tol: float = 1e-10
    method: str = "bicgstab"
    preconditioner: str = "block-jacobi"
    maxiter: int = 5000
    scaled: bool = True
    ilu_drop_tol: float = 1e-8
    ilu_fill_factor: float = 30.0
    max_ados: int = 2_000_000


def initial_guess(space, system, scaled=True):
    """Gibbs state of ``H_s`` at the mean bath temperature, higher ADOs zero."""
    temps = [1.0 / b.beta for b in system.baths] or [1.0]
    beta = 1.0 / float(np.mean(temps))
    rho = gibbs_state(system.hamiltonian_at(0.0), beta)
    return AdoState.factorized(space, rho, scaled)


def augmented_system(A, dim):
    """Replace the ``rho_0[0, 0]`` row of ``A`` by the trace constraint.

    Returns the modified matrix and the right-hand side ``e_0``.
    """
    n = A.shape[0]
    keep = np.ones(n)
    keep[0] = 0.0
    trace_cols = np.arange(dim) * (dim + 1)
    trace_row = sp.csr_matrix((np.ones(dim), (np.zeros(dim, int), trace_cols)),
                              shape=(n, n))
    M = (sp.diags(keep) @ A + trace_row).tocsr()
    b = np.zeros(n, dtype=complex)
    b[0] = 1.0
    return M, b


def _block_jacobi(M, block):
    n = M.shape[0]
    coo = M.tocoo()
    rb, cb = coo.row // block, coo.col // block
    on_diag = rb == cb
    r, c, v = coo.row[on_diag], coo.col[on_diag], coo.data[on_diag]
    blocks = np.zeros((n // block, block, block), dtype=complex)
    np.add.at(blocks, (r // block, r % block, c % block), v)
    cond = np.linalg.cond(blocks)
    bad = ~np.isfinite(cond) | (cond > 1e12)
    inv = np.empty_like(blocks)
    if np.any(~bad):
        inv[~bad] = np.linalg.inv(blocks[~bad])
    if np.any(bad):
        inv[bad] = np.linalg.pinv(blocks[bad])
    # Without a delta term the rho_0 block is only -i[H_s, .] and singular;
    # its Schur complement against the first tier (a second-order
    # dissipator) is not, and makes a far better preconditioner block.
    if bad[0] and n > block:
        tier = np.unique(np.concatenate([cb[(rb == 0) & (cb > 0)],
                                         rb[(cb == 0) & (rb > 0)]]))
        S = blocks[0].copy()
        Mc = M.tocsr()
        for j in tier:
            up = Mc[:block, j * block:(j + 1) * block].toarray()
            down = Mc[j * block:(j + 1) * block, :block].toarray()
            S -= up @ inv[j] @ down
        if np.linalg.cond(S) < 1e12:
            inv[0] = np.linalg.inv(S)

    def apply(v):
        w = v.reshape(-1, block)
        return np.einsum("nij,nj->ni", inv, w).reshape(v.shape)

    return spla.LinearOperator(M.shape, matvec=apply, dtype=complex)


def _preconditioner(M, kind, dim, opts):
    if kind == "none":
        return None
    if kind == "block-jacobi":
        return _block_jacobi(M, dim * dim)
    if kind == "ilu":
        ilu = spla.spilu(M.tocsc(), drop_tol=opts.ilu_drop_tol,
                         fill_factor=opts.ilu_fill_factor)
        return spla.LinearOperator(M.shape, matvec=ilu.solve, dtype=complex)
    raise ValueError(f"unknown preconditioner {kind!r}")


@dataclass
class SteadyStateInfo:
    residual: float
    iterations: int
    residuals: list = field(default_factory=list)


def steady_state(system, options=None, space=None, return_info=False):
    """Nonequilibrium steady state of the hierarchy.

    Solves ``A x = 0`` with ``Tr rho_0 = 1`` for the time-independent
    generator ``A`` and returns the state with ``|A x| <= tol |x|``.

    Parameters
    ----------
    system : SystemModel
    options : SolverOptions, optional
    space : HierarchySpace, optional
        Reuse an existing index space (built from ``system`` otherwise).
    return_info : bool
        Also return a :class:`SteadyStateInfo`.
    """
    opts = options or SolverOptions()
    if system.is_time_dependent:
        raise ValueError("steady_state needs a time-independent Hamiltonian")
    if space is None:
        space = build_space(system.decompositions(), opts.depth,
                            max_ados=opts.max_ados)
    d = system.dim
    A = assemble_operator(space, system, scaled=opts.scaled)
    M, b = augmented_system(A, d)
    x0 = initial_guess(space, system, opts.scaled).vector()
    history = []

    if opts.method == "direct":
        x = spla.spsolve(M.tocsc(), b)
        iterations = 1
    else:
        P = _preconditioner(M, opts.preconditioner, d, opts)
        solver = {"bicgstab": spla.bicgstab, "gmres": spla.gmres,
                  "lgmres": spla.lgmres}.get(opts.method)
        if solver is None:
            raise ValueError(f"unknown steady-state method {opts.method!r}")

        def record(xk):
            history.append(float(np.linalg.norm(M @ xk - b)))

        kwargs = dict(x0=x0, rtol=0.1 * opts.tol, atol=0.0,
                      maxiter=opts.maxiter, M=P)
        if opts.method == "gmres":
            kwargs["callback_type"] = "x"
        x, status = solver(M, b, callback=record, **kwargs)
        iterations = len(history)
        if status < 0:
            raise SteadyStateError(f"{opts.method} breakdown (status {status})",
                                   history)
    xnorm = np.linalg.norm(x)
    residual = float(np.linalg.norm(A @ x) / xnorm) if xnorm else math.inf
    if not np.isfinite(residual) or residual > opts.tol:
        raise SteadyStateError(
            f"{opts.method} stopped after {iterations} iterations with "
            f"relative residual {residual:.3e} > {opts.tol:.1e}", history)
    log.debug("steady state: %d ADOs, %d iterations, residual %.2e",
              len(space), iterations, residual)
    state = AdoState.from_vector(space, x, d, opts.scaled)
    # the trace row fixes Tr rho_0 = 1; symmetrize away rounding
    state.matrices[0] = 0.5 * (state.rho + state.rho.conj().T)
    if return_info:
        return state, SteadyStateInfo(residual, iterations, history)
    return state


@dataclass
class DepthConvergence:
    """Outcome of :func:`converged_steady_state`."""

    state: AdoState
    depth: int
    rel_change: float
    history: list = field(default_factory=list)


def _steady_observables(system, state):
    from .observables import heat_current, system_energy_current
    n = len(system.baths)
    return np.array([heat_current(system, state, k) for k in range(n)]
                    + [system_energy_current(system, state, k)
                       for k in range(n)])


def converged_steady_state(system, options=None, rtol=1e-3, step=2,
                           max_depth=40):
    """Steady state at the smallest depth whose currents are converged.

    Starting from ``options.depth`` the depth is raised by ``step`` until
    all heat and system energy currents change by less than ``rtol``
    relative to the largest of them; the state at the lower depth of the
    final pair is returned. ``history`` lists ``(depth, n_ados, currents)``.

    Raises
    ------
    SteadyStateError
        If ``max_depth`` is reached first.
    """
    opts = options or SolverOptions()
    depth = max(1, opts.depth)
    history = []
    prev = None
    while depth <= max_depth:
        o = replace(opts, depth=depth)
        state = steady_state(system, o)
        obs = _steady_observables(system, state)
        history.append((depth, len(state.space), obs))
        if prev is not None:
            scale = max(np.max(np.abs(obs)), 1e-300)
            change = float(np.max(np.abs(obs - prev[1])) / scale)
            if change < rtol:
                return DepthConvergence(prev[0], depth - step, change, history)
        prev = (state, obs)
        depth += step
    raise SteadyStateError(
        f"currents not converged to {rtol:.1e} by depth {max_depth}")


def default_time_step(space, system):
    """``0.01 / max(gamma_kl, spectral radius of H_s)``."""
    h = np.max(np.abs(np.linalg.eigvalsh(system.hamiltonian_at(0.0))))
    g = np.max(space.rates) if space.n_axes else 0.0
    return 0.01 / max(g, h, 1e-12)


@dataclass
class Trajectory:
    """ADO states sampled at ``times`` (immutable once returned)."""

    times: np.ndarray
    states: list
    system: object

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def rhos(self):
        return np.array([s.rho for s in self.states])

    @property
    def final(self):
        return self.states[-1]


class _Generator:
    """``x -> A(t) x`` with a static sparse part and drive commutators."""

    def __init__(self, space, system, scaled):
        self.system = system
        H0 = system.hamiltonian
        self.static = assemble_operator(space, system, scaled=scaled,
                                        hamiltonian=H0)
        eye = sp.identity(len(space), format="csr")
        self.drives = [(drv, sp.kron(eye, -1j * commutator_super(drv.operator),
                                     format="csr"))
                       for drv in system.drives]

    def __call__(self, t, x):
        y = self.static @ x
        for drv, op in self.drives:
            f = drv.value(t)
            if f != 0.0:
                y = y + f * (op @ x)
        return y


def _rk4(f, t, x, dt):
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate(system, state0, times, dt=None, adaptive=False, atol=1e-10,
              min_dt=1e-12, space=None):
    """Integrate the hierarchy with classical fourth-order Runge-Kutta.

    Parameters
    ----------
    system : SystemModel
        May carry drives (time-dependent ``H_s``).
    state0 : AdoState
        Initial ADOs, usually :meth:`AdoState.factorized`.
    times : array_like
        Increasing output times; the first is the initial time.
    dt : float, optional
        Fixed step (:func:`default_time_step` when omitted); with
        ``adaptive=True`` it is the initial step.
    adaptive : bool
        Step-doubling error control with absolute tolerance ``atol``.

    Returns
    -------
    Trajectory
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-empty increasing 1-d array")
    space = state0.space if space is None else space
    f = _Generator(space, system, state0.scaled)
    if dt is None:
        dt = default_time_step(space, system)
    x = state0.vector().copy()
    t = float(times[0])
    d = state0.dim
    states = [AdoState.from_vector(space, x.copy(), d, state0.scaled)]
    for t_out in times[1:]:
        if not adaptive:
            n_steps = max(1, math.ceil((t_out - t) / dt - 1e-9))
            h = (t_out - t) / n_steps
            for i in range(n_steps):
                with np.errstate(over="ignore", invalid="ignore"):
                    x = _rk4(f, t + i * h, x, h)
                if not np.all(np.isfinite(x)):
                    raise PropagationError(
                        f"non-finite ADOs at t={t + (i + 1) * h:.6g}")
            t = float(t_out)
        else:
            while t_out - t > 0:
                h = min(dt, t_out - t)
                if t_out - t - h < 1e-9 * h:
                    h = t_out - t
                with np.errstate(over="ignore", invalid="ignore"):
                    full = _rk4(f, t, x, h)
                    half = _rk4(f, t + 0.5 * h, _rk4(f, t, x, 0.5 * h),
                                0.5 * h)
                    err = np.max(np.abs(half - full)) / 15.0
                if not np.isfinite(err):
                    raise PropagationError(f"non-finite ADOs at t={t + h:.6g}")
                if err > atol:
                    dt = 0.5 * h
                    if dt < min_dt:
                        raise PropagationError(
                            f"time step underflow at t={t:.6g}")
                    continue
                x = half + (half - full) / 15.0
                t = t_out if h == t_out - t else t + h
                if err < atol / 64 and h >= dt:
                    dt = 2.0 * dt
        states.append(AdoState.from_vector(space, x.copy(), d, state0.scaled))
    return Trajectory(times, states, system)
