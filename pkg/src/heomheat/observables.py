"""
Thermodynamic readouts from the ADO hierarchy.

All currents are energy per unit time and positive when energy flows out of
the bath into the rest of the total system.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .hierarchy import apply_heom_rhs

__all__ = [
    "heat_current", "system_energy_current", "interaction_energy",
    "tpc_residual", "power", "internal_energy", "stationarity_residual",
    "CurrentsReport", "currents_report", "report_columns", "CycleResult",
    "cycle_accumulate", "fidelity", "NotStationaryError", "NotPeriodicError",
]


class NotStationaryError(ValueError):
    """A steady-state-only quantity was requested on a non-stationary state."""


class NotPeriodicError(ValueError):
    """The trajectory has not converged to a limit cycle."""


def _bath(system, bath):
    if isinstance(bath, str):
        return system.bath_index(bath)
    if not 0 <= bath < len(system.baths):
        raise IndexError(f"bath index {bath} out of range")
    return bath


def _require_tier(state, k):
    space = state.space
    if space.depth < 1:
        raise ValueError("currents need the first-tier ADOs; depth N=0 has "
                         "none")
    if space.baths[k] is None:
        raise ValueError(f"bath {k} is disabled and has no ADOs")


def _dissipator(V, delta, X):
    """Markovian part ``-delta [V, [V, X]]``."""
    c = V @ X - X @ V
    return -delta * (V @ c - c @ V)


def heat_current(system, state, bath, t=0.0):
    """Heat current out of ``bath``: ``-d<H_B>/dt`` from the first-tier ADOs.

    ``-sum_l gamma_l Tr[V rho_{e_l}] + 2 Im C(0) Tr[V^2 rho]`` plus the energy
    the delta-correction term of this bath injects into the system and the
    other interactions.
    """
    k = _bath(system, bath)
    _require_tier(state, k)
    dec = state.space.baths[k]
    V = system.couplings[k]
    rho = state.rho
    q = sum(-dec.rates[l] * np.trace(V @ state.first_tier(k, l))
            for l in range(dec.n_terms))
    q += 2.0 * dec.im_c0 * np.trace(V @ V @ rho)
    if dec.delta:
        H = system.hamiltonian_at(t)
        q += np.trace(H @ _dissipator(V, dec.delta, rho))
        for j, Vj in enumerate(system.couplings):
            if j != k and state.space.baths[j] is not None:
                q += np.trace(Vj @ _dissipator(V, dec.delta,
                                               state.bath_moment(j)))
    return float(q.real)


def system_energy_current(system, state, bath, t=0.0):
    """Energy current into the system through ``bath``: ``<i[H_int, H_s]>``."""
    k = _bath(system, bath)
    _require_tier(state, k)
    H = system.hamiltonian_at(t)
    V = system.couplings[k]
    dec = state.space.baths[k]
    q = np.trace(1j * (V @ H - H @ V) @ state.bath_moment(k))
    if dec.delta:
        q += np.trace(H @ _dissipator(V, dec.delta, state.rho))
    return float(q.real)


def interaction_energy(system, state, bath):
    """``<H_int,k> = Tr[V_k B_k]``."""
    k = _bath(system, bath)
    _require_tier(state, k)
    return float(np.trace(system.couplings[k] @ state.bath_moment(k)).real)


def internal_energy(system, state, t=0.0):
    """``<H_s> + sum_k <H_int,k>``."""
    e = np.trace(system.hamiltonian_at(t) @ state.rho).real
    for k, b in enumerate(state.space.baths):
        if b is not None and state.space.depth >= 1:
            e += interaction_energy(system, state, k)
    return float(e)


def power(system, state, t=0.0):
    """``Tr[(dH_s/dt) rho]``."""
    return float(np.trace(system.dhdt(t) @ state.rho).real)


def stationarity_residual(system, state, t=0.0):
    """``|d/dt x| / |x|`` for the full ADO vector."""
    rhs = apply_heom_rhs(state.space, system, state, t)
    return float(np.linalg.norm(rhs.matrices) / np.linalg.norm(state.matrices))


def tpc_residual(system, state, bath, tol=1e-8):
    """Tri-partite correlation current ``HC_k - SEC_k`` of a steady state.

    Raises
    ------
    NotStationaryError
        If the hierarchy residual exceeds ``tol`` (the neglected
        ``d<H_int>/dt`` would not vanish).
    """
    r = stationarity_residual(system, state)
    if r > tol:
        raise NotStationaryError(
            f"state is not stationary (residual {r:.2e} > {tol:.1e}); the "
            "interaction-energy derivative is not computed")
    return (heat_current(system, state, bath)
            - system_energy_current(system, state, bath))


def report_columns(bath_names):
    cols = []
    for prefix in ("hc", "sec", "eint", "tpc"):
        cols += [f"{prefix}_{n}" for n in bath_names]
    return cols + ["power", "entropy_production", "first_law_residual"]


@dataclass
class CurrentsReport:
    """Per-bath currents and global balances at one instant."""

    hc: dict
    sec: dict
    eint: dict
    tpc: dict
    power: float
    entropy_production: float
    first_law_residual: float
    betas: dict = field(default_factory=dict, repr=False)

    @property
    def bath_names(self):
        return list(self.hc)

    def row(self):
        out = {}
        for prefix in ("hc", "sec", "eint", "tpc"):
            for n, v in getattr(self, prefix).items():
                out[f"{prefix}_{n}"] = v
        out["power"] = self.power
        out["entropy_production"] = self.entropy_production
        out["first_law_residual"] = self.first_law_residual
        return out

    def first_law_ok(self, rtol=1e-8):
        scale = max(abs(v) for v in self.hc.values()) if self.hc else 0.0
        return abs(self.first_law_residual) <= rtol * max(scale, 1e-300)

    def second_law_ok(self, atol=1e-10):
        return self.entropy_production >= -atol


def currents_report(system, state, t=0.0, stationary=True, tol=1e-8):
    """All currents of ``state``.

    With ``stationary=True`` the state must be a steady state: ``tpc`` is
    filled and ``first_law_residual = sum_k HC_k``. Otherwise ``tpc`` is NaN
    and the residual is ``sum_k HC_k + W - dU/dt`` with ``U`` the internal
    energy, evaluated from the instantaneous hierarchy derivative.
    """
    names = system.bath_names
    hc = {n: heat_current(system, state, k, t) for k, n in enumerate(names)}
    sec = {n: system_energy_current(system, state, k, t)
           for k, n in enumerate(names)}
    eint = {n: interaction_energy(system, state, k) for k, n in enumerate(names)}
    w = power(system, state, t)
    if stationary:
        r = stationarity_residual(system, state, t)
        if r > tol:
            raise NotStationaryError(
                f"state is not stationary (residual {r:.2e} > {tol:.1e})")
        tpc = {n: hc[n] - sec[n] for n in names}
        residual = sum(hc.values())
    else:
        tpc = {n: math.nan for n in names}
        rhs = apply_heom_rhs(state.space, system, state, t)
        # dU/dt = Tr[H d(rho)/dt] + sum_k Tr[V_k dB_k/dt] + W
        residual = sum(hc.values()) - internal_energy(system, rhs, t)
    betas = dict(zip(names, system.betas))
    ep = float(-sum(betas[n] * hc[n] for n in names))
    return CurrentsReport(hc, sec, eint, tpc, w, ep, residual, betas)


@dataclass
class CycleResult:
    """Heat and work accumulated over one period of a limit cycle."""

    heat: dict
    work: float
    period: float
    entropy_production: float
    efficiency: float
    carnot: float
    periodicity_error: float
    hot: str
    cold: str

    def second_law_ok(self, atol=1e-8):
        return self.entropy_production >= -atol

    def efficiency_ok(self, atol=1e-8):
        """``-W <= (1 - beta_h/beta_c) Q_h``; equals ``eta <= eta_C`` for
        ``Q_h > 0``."""
        return -self.work <= self.carnot * self.heat[self.hot] + atol


def cycle_accumulate(trajectory, period, tol=1e-6):
    """Integrate heat currents and power over the last period of a trajectory.

    The sample times must include ``t_end - period`` exactly. Integration
    uses the trapezoid rule on the trajectory samples.

    Raises
    ------
    NotPeriodicError
        If the ADOs at the two ends of the window differ by more than
        ``tol`` (max norm relative to the largest element).
    """
    system = trajectory.system
    times = np.asarray(trajectory.times)
    t_end = times[-1]
    i0 = int(np.argmin(np.abs(times - (t_end - period))))
    if abs(times[i0] - (t_end - period)) > 1e-9 * max(1.0, period):
        raise ValueError("trajectory has no sample at t_end - period")
    a, b = trajectory[i0].matrices, trajectory[len(times) - 1].matrices
    err = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    if err > tol:
        raise NotPeriodicError(
            f"trajectory not periodic: change over the last period {err:.2e} "
            f"> {tol:.1e}")
    ts = times[i0:]
    names = system.bath_names
    q = np.array([[heat_current(system, trajectory[i], k, t)
                   for k in range(len(names))]
                  for i, t in zip(range(i0, len(times)), ts)])
    w = np.array([power(system, trajectory[i], t)
                  for i, t in zip(range(i0, len(times)), ts)])
    heat = dict(zip(names, np.trapezoid(q, ts, axis=0).tolist()))
    work = float(np.trapezoid(w, ts))
    betas = dict(zip(names, system.betas))
    hot = min(names, key=lambda n: betas[n])
    cold = max(names, key=lambda n: betas[n])
    carnot = float(1.0 - betas[hot] / betas[cold])
    eta = -work / heat[hot] if heat[hot] > 0 else math.nan
    ep = float(-sum(betas[n] * heat[n] for n in names))
    return CycleResult(heat, work, float(ts[-1] - ts[0]), ep, eta, carnot,
                       err, hot, cold)


def _psd_eig(rho, name, tol=1e-10):
    rho = np.asarray(rho, dtype=complex)
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError(f"{name} does not have unit trace")
    e, u = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if e.min() < -tol:
        raise ValueError(f"{name} has negative eigenvalue {e.min():.3e}")
    return np.clip(e, 0.0, None), u


def fidelity(rho, sigma):
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))``."""
    e, u = _psd_eig(rho, "rho")
    f, v = _psd_eig(sigma, "sigma")
    # nuclear norm of sqrt(rho) sqrt(sigma); avoids square roots of tiny
    # eigenvalues of the product
    m = (u * np.sqrt(e)).conj().T @ (v * np.sqrt(f))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))
