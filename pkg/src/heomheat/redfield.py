"""
Second-order (Redfield) master equation without secular approximation.

For each bath ``k`` the dissipator is

    D_k rho = -[V_k, Lambda_k rho - rho Lambda_k^dagger]

with ``(Lambda_k)_ab = (V_k)_ab Gamma_k(E_a - E_b)`` in the eigenbasis of
``H_s`` and ``Gamma(w) = int_0^inf C(s) exp(-i w s) ds`` the half-Fourier
transform of the exact bath correlation function.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .bath import QuadratureError

__all__ = [
    "half_fourier", "RedfieldGenerator", "redfield_generator",
    "redfield_steady_state", "redfield_heat_current", "DegenerateSpectrumError",
]


class DegenerateSpectrumError(ValueError):
    """``H_s`` has degenerate eigenvalues."""


def _j_times_n(J, beta, w):
    """``J(w) n(w)`` with ``n = 1/(exp(beta w) - 1)``; limit ``zeta/beta`` at 0."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(beta * w) < 1e-8
    ws = w[~small]
    with np.errstate(over="ignore"):
        out[~small] = J(ws) / np.expm1(beta * ws)
    out[small] = J.zeta * J.gamma**2 / (J.gamma**2 + w[small]**2) / beta
    return out


def _noise(J, beta):
    """``S(w) = J(w) (coth(beta w/2) + 1)`` with ``J`` extended as odd."""
    def S(w):
        if abs(beta * w) < 1e-8:
            return 2.0 * J.zeta / beta
        if beta * w < -700:
            return 0.0
        return 2.0 * float(J(w)) / -math.expm1(-beta * w)
    return S


def half_fourier(J, beta, omega, tol=1e-11, limit=400):
    """``Gamma(w) = int_0^inf C(s) exp(-i w s) ds`` for one ``w``.

    The real part is ``J(w) n(w)``; the imaginary part is the principal value
    ``-(1/2 pi) P int S(w') / (w' + w) dw'`` computed by Cauchy-weighted
    quadrature around the pole and plain quadrature on the tails.
    """
    omega = float(omega)
    re = float(_j_times_n(J, beta, np.array([omega]))[0])
    S = _noise(J, beta)
    pole = -omega
    width = 50.0 * max(J.gamma, 1.0 / beta, abs(omega), 1.0)
    a, b = pole - width, pole + width
    pieces = []
    try:
        pieces.append(integrate.quad(S, a, b, weight="cauchy", wvar=pole,
                                     epsabs=tol, epsrel=tol, limit=limit,
                                     full_output=1))
        for lo, hi in ((-np.inf, a), (b, np.inf)):
            pieces.append(integrate.quad(lambda x: S(x) / (x - pole), lo, hi,
                                         epsabs=tol, epsrel=tol, limit=limit,
                                         full_output=1))
    except Exception as exc:  # noqa: BLE001
        raise QuadratureError(
            f"principal-value integral for Gamma({omega}) failed: {exc}") \
            from exc
    for p in pieces:
        if len(p) > 3 and "roundoff" not in str(p[3]):
            raise QuadratureError(
                f"principal-value integral for Gamma({omega}) did not "
                f"converge: {p[3]}")
    pv = sum(p[0] for p in pieces)
    return complex(re, -pv / (2.0 * math.pi))


def _check_nondegenerate(E, rtol=1e-9):
    scale = max(1.0, float(np.max(np.abs(E))))
    pairs = [(i, j) for i in range(len(E)) for j in range(i + 1, len(E))
             if abs(E[i] - E[j]) <= rtol * scale]
    if pairs:
        listing = ", ".join(f"({i}, {j}): E={E[i]:.6g}" for i, j in pairs)
        raise DegenerateSpectrumError(
            f"H_s has degenerate eigenvalue pairs {listing}")


def _super(X, Y):
    """Row-major matrix of ``A -> X A Y``."""
    return np.kron(X, Y.T)


@dataclass
class RedfieldGenerator:
    """Dense Redfield Liouvillian of a time-independent system.

    Attributes
    ----------
    energies, basis : eigen-decomposition of ``H_s``
    rate_matrices : list of ``Gamma_k(E_a - E_b)`` arrays
    dissipators : list of ``d^2 x d^2`` matrices (original basis)
    liouvillian : full ``d^2 x d^2`` generator (original basis)
    """

    system: object
    energies: np.ndarray
    basis: np.ndarray
    rate_matrices: list
    dissipators: list
    liouvillian: np.ndarray

    def apply(self, rho):
        d = self.system.dim
        return (self.liouvillian @ np.asarray(rho).reshape(-1)).reshape(d, d)

    def dissipate(self, bath, rho):
        d = self.system.dim
        return (self.dissipators[bath] @ np.asarray(rho).reshape(-1)) \
            .reshape(d, d)


def redfield_generator(system, tol=1e-11):
    """Build the non-secular Redfield generator of ``system``.

    Raises
    ------
    DegenerateSpectrumError
        If two eigenvalues of ``H_s`` coincide.
    """
    if system.is_time_dependent:
        raise ValueError("the Redfield generator needs a time-independent H_s")
    H = system.hamiltonian_at(0.0)
    E, U = np.linalg.eigh(H)
    _check_nondegenerate(E)
    d = len(E)
    eye = np.eye(d)
    Ud = U.conj().T
    to_orig = _super(U, Ud)
    to_eig = _super(Ud, U)
    w = E[:, None] - E[None, :]
    rates, dissipators = [], []
    liou = -1j * (_super(H, eye) - _super(eye, H))
    for bath, V in zip(system.baths, system.couplings):
        J = bath.spectral_density
        cache = {}
        G = np.empty((d, d), dtype=complex)
        for a in range(d):
            for b in range(d):
                key = round(w[a, b], 12)
                if key not in cache:
                    cache[key] = half_fourier(J, bath.beta, w[a, b], tol)
                G[a, b] = cache[key]
        Ve = Ud @ V @ U
        Lam = Ve * G
        Lam_dag = Lam.conj().T
        # -(V Lam rho - Lam rho V - V rho Lam^+ + rho Lam^+ V)
        D = -(_super(Ve @ Lam, eye) - _super(Lam, Ve)
              - _super(Ve, Lam_dag) + _super(eye, Lam_dag @ Ve))
        D = to_orig @ D @ to_eig
        rates.append(G)
        dissipators.append(D)
        liou = liou + D
    return RedfieldGenerator(system, E, U, rates, dissipators, liou)


def redfield_steady_state(system, generator=None):
    """Unique trace-one null vector of the Redfield generator."""
    gen = generator or redfield_generator(system)
    d = system.dim
    M = gen.liouvillian.copy()
    M[0, :] = 0.0
    M[0, np.arange(d) * (d + 1)] = 1.0
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(M, rhs).reshape(d, d)
    return 0.5 * (rho + rho.conj().T)


def redfield_heat_current(system, rho, bath, generator=None):
    """Energy current into the system from ``bath``: ``Tr[H_s D_k rho]``."""
    gen = generator or redfield_generator(system)
    k = system.bath_index(bath) if isinstance(bath, str) else bath
    return float(np.trace(system.hamiltonian_at(0.0)
                          @ gen.dissipate(k, rho)).real)
