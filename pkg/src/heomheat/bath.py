"""
Bath spectral densities, the exact bath correlation function and its
exponential-series decompositions.

Units are hbar = k_B = 1 throughout. The correlation function of a bosonic
bath with spectral density ``J`` at inverse temperature ``beta`` is

    C(t) = (1/pi) int_0^inf dw J(w) [coth(beta w / 2) cos(w t) - i sin(w t)]

and the decompositions approximate it for ``t > 0`` as
``sum_l c_l exp(-gamma_l t)`` plus a Markovian remainder ``2 * delta * dirac(t)``.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import eigh

__all__ = [
    "DrudeSpectralDensity", "BathDecomposition", "BathSpec",
    "QuadratureError", "DecompositionError", "DecompositionWarning",
    "correlation_quadrature", "pade_poles", "matsubara_poles",
    "pade_decompose", "matsubara_decompose", "decompose",
    "validation_grid",
]

#: relative floor below which a negative delta correction is rounding noise
DELTA_NEGATIVE_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class DecompositionError(ValueError):
    """An exponential decomposition could not be built consistently."""


class DecompositionWarning(UserWarning):
    """The decomposition is valid but misses the requested accuracy."""


@dataclass(frozen=True)
class DrudeSpectralDensity:
    """Drude (Ohmic, Lorentzian cutoff) spectral density.

    ``J(w) = zeta * gamma**2 * w / (w**2 + gamma**2)``.
    """

    zeta: float
    gamma: float

    def __post_init__(self):
        if not (self.zeta > 0 and self.gamma > 0):
            raise ValueError(
                f"Drude parameters must be positive, got zeta={self.zeta}, "
                f"gamma={self.gamma}")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return self.zeta * self.gamma**2 * w / (w**2 + self.gamma**2)

    @property
    def im_c0(self):
        """One-sided limit ``Im C(0+) = -zeta gamma^2 / 2``."""
        return -0.5 * self.zeta * self.gamma**2

    def integral_correlation(self, beta):
        """``int_0^inf Re C(t) dt = lim_{w->0} J(w)/(beta w) * 1 = zeta/beta``."""
        return self.zeta / beta

    def pole_amplitude(self, beta, xi=None, eta=None):
        """Amplitude of the exponential carried by the Drude pole at ``gamma``.

        With Pade poles ``xi, eta`` the residue uses the same rational
        approximant of ``cot(beta gamma / 2)`` as the other terms, so that
        both diverge together when a pole ``2 xi / beta`` approaches
        ``gamma`` and their sum stays finite. Otherwise ``cot`` is exact.
        """
        g = self.gamma
        y = 0.5 * beta * g
        if xi is None or len(xi) == 0:
            cot = 1.0 / math.tan(y)
        else:
            cot = 1.0 / y + float(np.sum(2.0 * eta * y / (y**2 - xi**2)))
        return 0.5 * self.zeta * g**2 * (cot - 1j)


def _w_coth(w, beta):
    # w * coth(beta w / 2), finite at w = 0
    x = 0.5 * beta * w
    if abs(x) < 1e-4:
        return (2.0 / beta) * (1.0 + x * x / 3.0)
    return w / math.tanh(x)


def _quad(func, omega, weight, name, tol, limit, split):
    # finite head [0, split] by QAWO, slowly decaying tail by QAWF
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in ((0.0, split), (split, np.inf)):
            try:
                val, err = integrate.quad(func, a, b, weight=weight, wvar=omega,
                                          epsabs=0.5 * tol, epsrel=0.0,
                                          limlst=200, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(
                    f"{name} integrand on [{a}, {b}) at t={float(omega)!r} did "
                    f"not converge: {exc}") from None
            if not np.isfinite(val) or err > 5 * tol:
                raise QuadratureError(
                    f"{name} integrand on [{a}, {b}) at t={float(omega)!r}: "
                    f"estimated error {err:.3g} exceeds {tol:.3g}")
            total += val
    return total


def correlation_quadrature(J, beta, t, tol=1e-10, limit=400):
    """Exact bath correlation function by adaptive Fourier quadrature.

    Parameters
    ----------
    J : DrudeSpectralDensity
        Spectral density.
    beta : float
        Inverse temperature, ``beta > 0``.
    t : float or array_like
        Times ``t >= 0``. At ``t = 0`` the real part diverges logarithmically
        for the Drude density and ``inf`` is returned for it.
    tol : float
        Absolute error target of each real integral.

    Returns
    -------
    complex or ndarray of complex
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise ValueError("correlation_quadrature needs t >= 0")
    zg2 = J.zeta * J.gamma**2
    g2 = J.gamma**2

    def re_integrand(w):
        return zg2 * _w_coth(w, beta) / (w * w + g2) / math.pi

    def im_integrand(w):
        return -zg2 * w / (w * w + g2) / math.pi

    split = 50.0 * max(J.gamma, 1.0 / beta)
    out = np.empty(ts.shape, dtype=complex)
    for idx, tt in np.ndenumerate(ts):
        if tt == 0.0:
            out[idx] = complex(np.inf, 0.0)
            continue
        re = _quad(re_integrand, tt, "cos", "Re C: J(w) coth(beta w/2) cos(w t)/pi",
                   tol, limit, split)
        im = _quad(im_integrand, tt, "sin", "Im C: -J(w) sin(w t)/pi", tol,
                   limit, split)
        out[idx] = complex(re, im)
    if ts.ndim == 0:
        return complex(out[()])
    return out


def validation_grid(gamma, n=400):
    """Log-spaced times on ``[1e-3/gamma, 10/gamma]`` used for error bounds."""
    return np.logspace(math.log10(1e-3 / gamma), math.log10(10.0 / gamma), n)


def _jacobi_poles(b):
    """Partial fractions of the truncated continued fraction

        x / (b_1 + x^2 / (b_2 + x^2 / (... + x^2 / b_M)))
      = sum_j 2 eta_j x / (x^2 + xi_j^2)

    via the eigenpairs of the symmetric tridiagonal matrix with off-diagonal
    ``1/sqrt(b_m b_{m+1})``. Eigenvalues come in +/- pairs; each positive
    eigenvalue ``lam`` gives ``xi = 1/lam`` and ``eta = u_0^2 / (b_1 lam^2)``.
    """
    b = np.asarray(b, dtype=float)
    off = 1.0 / np.sqrt(b[:-1] * b[1:])
    mat = np.diag(off, 1) + np.diag(off, -1)
    try:
        lam, vec = eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"Pade eigenproblem failed: {exc}") from None
    pos = lam > 0
    lam, u0 = lam[pos], vec[0, pos]
    order = np.argsort(-lam)  # smallest xi first
    lam, u0 = lam[order], u0[order]
    xi = 1.0 / lam
    eta = u0**2 / (b[0] * lam**2)
    return xi, eta


def pade_poles(n_terms):
    """Poles ``xi_j`` and weights ``eta_j`` of the [N-1/N] Pade approximant

    ``coth(x) ~ 1/x + sum_j 2 eta_j x / (x^2 + xi_j^2)``  (in ``z = x^2``).
    """
    if n_terms < 0:
        raise ValueError("number of terms must be >= 0")
    if n_terms == 0:
        return np.zeros(0), np.zeros(0)
    b = 2.0 * np.arange(1, 2 * n_terms + 1) + 1.0
    return _jacobi_poles(b)


def matsubara_poles(n_terms):
    """Matsubara poles ``xi_l = l pi`` with unit weights."""
    if n_terms < 0:
        raise ValueError("number of terms must be >= 0")
    return math.pi * np.arange(1, n_terms + 1, dtype=float), np.ones(n_terms)


@dataclass(frozen=True, eq=False)
class BathDecomposition:
    """Exponential series ``sum_l c_l exp(-gamma_l t)`` plus a delta correction.

    Term 0 is always the Drude pole (``rates[0] == source.gamma``).
    """

    amplitudes: np.ndarray
    rates: np.ndarray
    delta: float
    beta: float
    source: DrudeSpectralDensity
    scheme: str = "pade"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if np.any(np.asarray(self.rates) <= 0):
            raise DecompositionError("all decay rates must be positive")

    @property
    def terms(self):
        return list(zip(self.amplitudes, self.rates))

    @property
    def n_terms(self):
        """Number of exponentials, ``L + 1``."""
        return len(self.rates)

    @property
    def im_c0(self):
        return float(np.sum(self.amplitudes.imag))

    def correlation(self, t):
        """Reconstructed ``C(t)`` for ``t > 0`` (the delta part is excluded)."""
        t = np.asarray(t, dtype=float)
        return np.sum(self.amplitudes * np.exp(-np.multiply.outer(t, self.rates)),
                      axis=-1)

    def integral(self):
        """``sum_l c_l / gamma_l + delta``."""
        return complex(np.sum(self.amplitudes / self.rates) + self.delta)

    def reconstruction_error(self, grid=None, tol=1e-10):
        """Maximum ``|C_rec - C_exact|`` over ``grid`` (quadrature oracle)."""
        if grid is None:
            grid = validation_grid(self.source.gamma)
        exact = correlation_quadrature(self.source, self.beta, grid, tol=tol)
        return float(np.max(np.abs(self.correlation(grid) - exact)))

    def error_bound(self):
        """Reported bound on the reconstruction error over the validation grid."""
        if "bound" not in self._cache:
            tol = 1e-10
            self._cache["bound"] = self.reconstruction_error(tol=tol) + 4 * tol
        return self._cache["bound"]


def _decompose(J, beta, xi, eta, scheme, tol):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    g = J.gamma
    nu = 2.0 * xi / beta
    if np.any(np.isclose(nu, g, rtol=1e-12, atol=0)):
        raise DecompositionError(
            f"pole at {nu[np.isclose(nu, g)][0]} coincides with the Drude cutoff")
    c = eta * (2.0 * J.zeta * g**2 / beta) * nu / (nu**2 - g**2)
    residue = (xi, eta) if scheme == "pade" else (None, None)
    amps = np.concatenate([[J.pole_amplitude(beta, *residue)],
                           c.astype(complex)])
    rates = np.concatenate([[g], nu])
    total = J.integral_correlation(beta)
    parts = (amps / rates).real
    delta = total - float(np.sum(parts))
    if delta < 0:
        # rounding is relative to the terms summed, which can cancel
        scale = max(total, float(np.sum(np.abs(parts))))
        if delta < -DELTA_NEGATIVE_TOL * scale:
            raise DecompositionError(
                f"{scheme} decomposition with {len(xi)} terms gives a negative "
                f"delta correction {delta:.3e} (beta={beta}, gamma={g})")
        delta = 0.0
    dec = BathDecomposition(amplitudes=amps, rates=rates, delta=delta,
                            beta=beta, source=J, scheme=scheme)
    if tol is not None and dec.error_bound() > tol:
        warnings.warn(
            f"{scheme} decomposition with L={len(xi)} reconstructs C(t) to "
            f"{dec.error_bound():.2e}, above the requested {tol:.2e}",
            DecompositionWarning, stacklevel=3)
    return dec


def pade_decompose(J, beta, L, tol=None):
    """Drude pole plus ``L`` Pade poles of ``coth(beta w / 2)``.

    If ``tol`` is given the reconstruction error is checked against the
    quadrature oracle and a :class:`DecompositionWarning` is issued when it
    is exceeded.
    """
    xi, eta = pade_poles(L)
    return _decompose(J, beta, xi, eta, "pade", tol)


def matsubara_decompose(J, beta, L, tol=None):
    """Drude pole plus the first ``L`` Matsubara frequencies ``2 pi l / beta``."""
    xi, eta = matsubara_poles(L)
    return _decompose(J, beta, xi, eta, "matsubara", tol)


def decompose(J, beta, L, scheme="pade", tol=None):
    if scheme == "pade":
        return pade_decompose(J, beta, L, tol)
    if scheme == "matsubara":
        return matsubara_decompose(J, beta, L, tol)
    raise ValueError(f"unknown decomposition scheme {scheme!r}")


@dataclass(frozen=True)
class BathSpec:
    """One Drude bath: coupling strength, cutoff, inverse temperature and the
    decomposition used for it. ``n_terms = -1`` disables the bath."""

    name: str
    zeta: float
    gamma: float
    beta: float
    scheme: str = "pade"
    n_terms: int = 2

    @property
    def spectral_density(self):
        return DrudeSpectralDensity(self.zeta, self.gamma)

    @property
    def enabled(self):
        return self.n_terms >= 0

    def decomposition(self):
        if not self.enabled:
            return None
        return decompose(self.spectral_density, self.beta, self.n_terms,
                         self.scheme)
