"""
System models: Hamiltonian, drives, bath couplings, and the two benchmark
builders (two-level heat transfer model, three-level autonomous engine).
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec

__all__ = [
    "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "commutator", "anticommutator",
    "gibbs_state", "Drive", "SystemModel", "two_level_model",
    "single_bath_two_level", "three_level_engine", "BUILDERS",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_TOL = 1e-12


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def _check_hermitian(op, name):
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {op.shape}")
    if np.max(np.abs(op - op.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError(f"{name} is not Hermitian")
    return op


def gibbs_state(H, beta):
    """``exp(-beta H) / Tr exp(-beta H)`` via the eigendecomposition."""
    e, u = np.linalg.eigh(np.asarray(H, dtype=complex))
    p = np.exp(-beta * (e - e.min()))
    p /= p.sum()
    return (u * p) @ u.conj().T


@dataclass(frozen=True, eq=False)
class Drive:
    """A scalar waveform ``f(t)`` multiplying a Hermitian operator.

    ``waveform`` is one of ``"constant"`` (``amplitude``), ``"sinusoid"``
    (``amplitude * sin(frequency t + phase)``) or ``"piecewise-linear"``
    (``times``, ``values``; held constant outside the knots).
    """

    operator: np.ndarray
    waveform: str = "sinusoid"
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "operator",
                           _check_hermitian(self.operator, "drive operator"))
        if self.waveform not in ("constant", "sinusoid", "piecewise-linear"):
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if self.waveform == "piecewise-linear":
            if len(self.times) < 2 or len(self.times) != len(self.values):
                raise ValueError("piecewise-linear drive needs matching "
                                 "times/values with at least two knots")
            if np.any(np.diff(self.times) <= 0):
                raise ValueError("piecewise-linear knots must increase")

    def value(self, t):
        if self.waveform == "constant":
            return self.amplitude
        if self.waveform == "sinusoid":
            return self.amplitude * math.sin(self.frequency * t + self.phase)
        return float(np.interp(t, self.times, self.values))

    def derivative(self, t):
        if self.waveform == "constant":
            return 0.0
        if self.waveform == "sinusoid":
            return (self.amplitude * self.frequency
                    * math.cos(self.frequency * t + self.phase))
        ts = np.asarray(self.times)
        if t < ts[0] or t >= ts[-1]:
            return 0.0
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return (self.values[i + 1] - self.values[i]) / (ts[i + 1] - ts[i])

    @property
    def period(self):
        if self.waveform == "sinusoid" and self.frequency > 0:
            return 2 * math.pi / self.frequency
        return None

    def to_dict(self):
        d = {"waveform": self.waveform, "operator": _matrix_to_lists(self.operator)}
        if self.waveform == "piecewise-linear":
            d.update(times=list(self.times), values=list(self.values))
        else:
            d.update(amplitude=self.amplitude, frequency=self.frequency,
                     phase=self.phase)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        op = _matrix_from_lists(d.pop("operator"))
        for key in ("times", "values"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(operator=op, **d)


def _matrix_to_lists(m):
    m = np.asarray(m, dtype=complex)
    out = {"real": m.real.tolist()}
    if np.any(m.imag != 0):
        out["imag"] = m.imag.tolist()
    return out


def _matrix_from_lists(d):
    if isinstance(d, dict):
        m = np.array(d["real"], dtype=complex)
        if "imag" in d:
            m = m + 1j * np.array(d["imag"], dtype=float)
        return m
    return np.array(d, dtype=complex)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Discrete-level system coupled to Drude baths.

    Parameters
    ----------
    hamiltonian : (d, d) array
        Static part of the system Hamiltonian.
    baths : tuple of BathSpec
    couplings : tuple of (d, d) arrays
        ``couplings[k]`` is the system operator ``V_k`` attached to
        ``baths[k]``.
    drives : tuple of Drive
        Time-dependent additions to the Hamiltonian.
    builder, parameters :
        Builder name and arguments, used to serialize benchmark models.
    """

    hamiltonian: np.ndarray
    baths: tuple
    couplings: tuple
    drives: tuple = ()
    builder: str = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        H = _check_hermitian(self.hamiltonian, "system Hamiltonian")
        object.__setattr__(self, "hamiltonian", H)
        baths = tuple(self.baths)
        couplings = tuple(_check_hermitian(v, f"coupling of bath {b.name!r}")
                          for v, b in zip(self.couplings, baths))
        if len(self.couplings) != len(baths):
            raise ValueError(
                f"{len(self.couplings)} couplings for {len(baths)} baths; each "
                "bath needs exactly one coupling operator")
        names = [b.name for b in baths]
        if len(set(names)) != len(names):
            raise ValueError(f"bath names must be unique, got {names}")
        for v in couplings:
            if v.shape != H.shape:
                raise ValueError("coupling operators must match the system "
                                 "dimension")
        object.__setattr__(self, "baths", baths)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "drives", tuple(self.drives))
        object.__setattr__(self, "parameters", dict(self.parameters))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def coupling_operators(self):
        return self.couplings

    @property
    def bath_names(self):
        return [b.name for b in self.baths]

    @property
    def betas(self):
        return np.array([b.beta for b in self.baths])

    def bath_index(self, name):
        try:
            return self.bath_names.index(name)
        except ValueError:
            raise KeyError(f"no bath named {name!r}; have {self.bath_names}") \
                from None

    @property
    def is_time_dependent(self):
        return any(d.waveform != "constant" for d in self.drives)

    def hamiltonian_at(self, t):
        H = self.hamiltonian
        for d in self.drives:
            H = H + d.value(t) * d.operator
        return H

    def dhdt(self, t):
        """``dH_s/dt`` at time ``t``."""
        out = np.zeros_like(self.hamiltonian)
        for d in self.drives:
            out = out + d.derivative(t) * d.operator
        return out

    def decompositions(self):
        return [b.decomposition() for b in self.baths]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_bath(self, name, **changes):
        """Copy with one bath's parameters changed."""
        k = self.bath_index(name)
        baths = list(self.baths)
        baths[k] = dataclasses.replace(baths[k], **changes)
        return self.replace(baths=tuple(baths))

    def with_baths(self, **changes):
        """Copy with the same parameter change applied to every bath."""
        return self.replace(baths=tuple(dataclasses.replace(b, **changes)
                                        for b in self.baths))


def two_level_model(zeta_h=0.1, zeta_c=None, beta_h=0.5, beta_c=1.0, gamma=2.0,
                    omega0=1.0, cold_coupling="tilted", n_terms=2,
                    scheme="pade"):
    """Two-level heat transfer model.

    ``H = (omega0/2) sigma_z``, ``V_h = sigma_x`` and
    ``V_c = (sigma_x + sigma_z)/sqrt(2)``; ``cold_coupling="sigma_x"`` gives the
    commuting control case ``V_c = sigma_x``.
    """
    if zeta_c is None:
        zeta_c = zeta_h
    if cold_coupling == "tilted":
        v_c = (SIGMA_X + SIGMA_Z) / math.sqrt(2)
    elif cold_coupling == "sigma_x":
        v_c = SIGMA_X
    else:
        raise ValueError(f"cold_coupling must be 'tilted' or 'sigma_x', got "
                         f"{cold_coupling!r}")
    baths = (BathSpec("h", zeta_h, gamma, beta_h, scheme, n_terms),
             BathSpec("c", zeta_c, gamma, beta_c, scheme, n_terms))
    params = dict(zeta_h=zeta_h, zeta_c=zeta_c, beta_h=beta_h, beta_c=beta_c,
                  gamma=gamma, omega0=omega0, cold_coupling=cold_coupling,
                  n_terms=n_terms, scheme=scheme)
    return SystemModel(0.5 * omega0 * SIGMA_Z, baths, (SIGMA_X, v_c),
                       builder="two_level", parameters=params)


def single_bath_two_level(zeta=0.01, beta=1.0, gamma=2.0, omega0=1.0,
                          coupling="sigma_x", n_terms=2, scheme="pade"):
    """Two-level system with one bath, for equilibrium checks."""
    v = {"sigma_x": SIGMA_X,
         "tilted": (SIGMA_X + SIGMA_Z) / math.sqrt(2)}[coupling]
    params = dict(zeta=zeta, beta=beta, gamma=gamma, omega0=omega0,
                  coupling=coupling, n_terms=n_terms, scheme=scheme)
    return SystemModel(0.5 * omega0 * SIGMA_Z,
                       (BathSpec("b", zeta, gamma, beta, scheme, n_terms),),
                       (v,), builder="single_bath", parameters=params)


def three_level_engine(omega_h=1.0, omega_c=0.5, zeta=0.001, gamma=10.0,
                       beta_h=0.1, beta_c=1.0, beta_w=0.1, n_terms=2,
                       scheme="pade"):
    """Three-level autonomous engine with levels ``|0>, |h>, |c>``.

    ``H = omega_h |h><h| + omega_c |c><c|``; the hot, cold and work baths
    couple through ``|0><h|``, ``|0><c|`` and ``|h><c|`` (plus h.c.).
    """
    if not omega_h > omega_c > 0:
        raise ValueError(
            f"need omega_h > omega_c > omega_0 = 0, got omega_h={omega_h}, "
            f"omega_c={omega_c}")
    H = np.diag([0.0, omega_h, omega_c]).astype(complex)

    def flip(i, j):
        m = np.zeros((3, 3), dtype=complex)
        m[i, j] = m[j, i] = 1.0
        return m

    baths = (BathSpec("h", zeta, gamma, beta_h, scheme, n_terms),
             BathSpec("c", zeta, gamma, beta_c, scheme, n_terms),
             BathSpec("w", zeta, gamma, beta_w, scheme, n_terms))
    params = dict(omega_h=omega_h, omega_c=omega_c, zeta=zeta, gamma=gamma,
                  beta_h=beta_h, beta_c=beta_c, beta_w=beta_w,
                  n_terms=n_terms, scheme=scheme)
    return SystemModel(H, baths, (flip(0, 1), flip(0, 2), flip(1, 2)),
                       builder="three_level", parameters=params)


BUILDERS = {
    "two_level": two_level_model,
    "single_bath": single_bath_two_level,
    "three_level": three_level_engine,
}
