"""
Auxiliary density operator (ADO) index space and the HEOM generator.

For baths ``k`` with exponential terms ``l`` the ADOs ``rho_n`` are labelled by
multi-indices ``n = (n_{k,l})`` with ``sum n <= N``. Each evolves as

    d/dt rho_n = -(i L + sum n_{kl} gamma_{kl}) rho_n
                 - sum_{k,l} Phi_k rho_{n + e_kl}
                 - sum_{k,l} n_{kl} Theta_{kl} rho_{n - e_kl}
                 - sum_k delta_k [V_k, [V_k, rho_n]]

with ``Phi_k A = i[V_k, A]``, ``Psi_k A = {V_k, A}`` and
``Theta_kl = Re(c_kl) Phi_k - Im(c_kl) Psi_k``.

Matrices are vectorized row-major, so ``vec(X A Y) = (X kron Y^T) vec(A)``.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import comb, gammaln

__all__ = [
    "HierarchySpace", "AdoState", "HierarchyTooLarge", "build_space",
    "apply_heom_rhs", "assemble_operator", "brute_force_indices",
]

#: default cap on the number of ADOs a space may enumerate
DEFAULT_MAX_ADOS = 2_000_000


class HierarchyTooLarge(MemoryError):
    """The requested hierarchy exceeds the configured ADO budget."""


def _n_compositions(total, parts):
    """Number of non-negative integer vectors of length ``parts`` summing to at
    most ``total`` (``0`` where ``total < 0``)."""
    total = np.asarray(total)
    out = comb(np.maximum(total, 0) + parts, parts, exact=False)
    return np.where(total < 0, 0, np.rint(out)).astype(np.int64)


def _graded_indices(n_axes, depth):
    """All vectors with sum <= depth, by level then descending lexicographic."""
    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    rows = [c for s in range(depth + 1) for c in compositions(s, n_axes)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), n_axes)


def brute_force_indices(n_axes, depth):
    """Set of all index tuples with sum <= depth by exhaustive product search."""
    import itertools
    return {v for v in itertools.product(range(depth + 1), repeat=n_axes)
            if sum(v) <= depth}


class HierarchySpace:
    """Truncated ADO index space with neighbor tables.

    Parameters
    ----------
    baths : list of BathDecomposition
        One decomposition per bath, in coupling order. ``None`` entries are
        disabled baths and get no axes.
    depth : int
        Truncation depth ``N``.
    max_ados : int
        Budget on the number of ADOs.

    Attributes
    ----------
    indices : ndarray, shape (n_ados, n_axes)
        Canonical ordering; row 0 is the zero index.
    plus, minus : ndarray, shape (n_ados, n_axes)
        Position of ``n +/- e_a`` or ``-1`` when truncated/invalid.
    axes : list of (bath, term) pairs
    """

    def __init__(self, baths, depth, max_ados=DEFAULT_MAX_ADOS):
        if depth < 0:
            raise ValueError(f"hierarchy depth must be >= 0, got {depth}")
        self.baths = list(baths)
        self.depth = int(depth)
        self.axes = [(k, l) for k, b in enumerate(self.baths) if b is not None
                     for l in range(b.n_terms)]
        m = len(self.axes)
        count = int(_n_compositions(self.depth, m))
        if count > max_ados:
            raise HierarchyTooLarge(
                f"hierarchy with {m} axes and depth {depth} has {count} ADOs, "
                f"over the budget of {max_ados}")
        self.indices = _graded_indices(m, self.depth) if m else \
            np.zeros((1, 0), dtype=np.int64)
        assert len(self.indices) == count
        self.levels = self.indices.sum(axis=1)
        self.plus = np.full(self.indices.shape, -1, dtype=np.int64)
        self.minus = np.full(self.indices.shape, -1, dtype=np.int64)
        for a in range(m):
            up = self.levels < self.depth
            shifted = self.indices[up].copy()
            shifted[:, a] += 1
            self.plus[up, a] = self.rank(shifted)
            down = self.indices[:, a] > 0
            shifted = self.indices[down].copy()
            shifted[:, a] -= 1
            self.minus[down, a] = self.rank(shifted)

    def __len__(self):
        return len(self.indices)

    def __repr__(self):
        return (f"HierarchySpace(n_axes={self.n_axes}, depth={self.depth}, "
                f"n_ados={len(self)})")

    @property
    def n_axes(self):
        return len(self.axes)

    def rank(self, counts):
        """Position of index vector(s) in the canonical ordering."""
        v = np.atleast_2d(np.asarray(counts, dtype=np.int64))
        m = self.n_axes
        if v.shape[1] != m:
            raise ValueError(f"index has {v.shape[1]} entries, expected {m}")
        s = v.sum(axis=1)
        r = _n_compositions(s - 1, m)
        remaining = s.copy()
        for i in range(m - 1):
            r += _n_compositions(remaining - v[:, i] - 1, m - i - 1)
            remaining -= v[:, i]
        if np.ndim(counts) == 1:
            return int(r[0])
        return r

    def axis(self, bath, term):
        return self.axes.index((bath, term))

    def first_tier(self, bath, term):
        """Position of the ADO ``e_{bath,term}``."""
        if self.depth < 1:
            raise ValueError("depth-0 hierarchy has no first-tier ADOs")
        return int(self.plus[0, self.axis(bath, term)])

    def census(self):
        """Number of ADOs on each level ``0..N``."""
        return np.bincount(self.levels, minlength=self.depth + 1)

    def census_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "count", "cumulative"])
        for lev, (c, cum) in enumerate(zip(self.census(),
                                            np.cumsum(self.census()))):
            w.writerow([lev, int(c), int(cum)])
        return buf.getvalue()

    def _axis_params(self, attr):
        return np.array([getattr(self.baths[k], attr)[l] for k, l in self.axes])

    @property
    def amplitudes(self):
        return self._axis_params("amplitudes").astype(complex)

    @property
    def rates(self):
        return self._axis_params("rates").astype(float)

    def scale_weights(self):
        """Per-axis ``|c|`` used for ADO rescaling (1 where ``c == 0``)."""
        mag = np.abs(self.amplitudes) if self.n_axes else np.zeros(0)
        return np.where(mag > 0, mag, 1.0)

    def hopping(self, scaled):
        """Coefficients multiplying the up (``n+e``) and down (``n-e``) terms."""
        n = self.indices.astype(float)
        if not scaled:
            return np.ones_like(n), n
        w = self.scale_weights()
        return np.sqrt((n + 1) * w), np.sqrt(n / w)

    def unscale_factors(self):
        """``prod_a sqrt(n_a! |c_a|^n_a)`` per ADO."""
        w = self.scale_weights()
        logf = gammaln(self.indices + 1.0).sum(axis=1)
        logf = 0.5 * (logf + self.indices @ np.log(w))
        return np.exp(logf)


def build_space(baths, depth, max_ados=DEFAULT_MAX_ADOS):
    """Enumerate the ADO index space for ``baths`` up to ``depth``."""
    return HierarchySpace(baths, depth, max_ados=max_ados)


@dataclass
class AdoState:
    """All ADO matrices of one hierarchy, optionally rescaled."""

    space: HierarchySpace
    matrices: np.ndarray
    scaled: bool = True

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=complex)
        if self.matrices.ndim != 3 or len(self.matrices) != len(self.space):
            raise ValueError(
                f"expected {len(self.space)} ADO matrices, got array of shape "
                f"{self.matrices.shape}")

    @classmethod
    def factorized(cls, space, rho0, scaled=True):
        """Factorized initial condition: only the zero-index ADO is non-zero."""
        rho0 = np.asarray(rho0, dtype=complex)
        mats = np.zeros((len(space),) + rho0.shape, dtype=complex)
        mats[0] = rho0
        return cls(space, mats, scaled)

    @classmethod
    def from_vector(cls, space, vec, dim, scaled=True):
        return cls(space, np.asarray(vec).reshape(len(space), dim, dim), scaled)

    @property
    def dim(self):
        return self.matrices.shape[1]

    @property
    def rho(self):
        """Reduced density matrix (the zero-index ADO)."""
        return self.matrices[0]

    def vector(self):
        return self.matrices.reshape(-1)

    def unscaled(self):
        """Matrices in the original (unscaled) normalization."""
        if not self.scaled:
            return self.matrices
        f = self.space.unscale_factors()
        return self.matrices * f[:, None, None]

    def first_tier(self, bath, term):
        """Unscaled ``rho_{e_{bath,term}}``."""
        pos = self.space.first_tier(bath, term)
        mat = self.matrices[pos]
        if self.scaled:
            mat = mat * math.sqrt(self.space.scale_weights()[
                self.space.axis(bath, term)])
        return mat

    def bath_moment(self, bath):
        """``B_k = sum_l rho_{e_kl}``, the reduced form of Tr_B(X_k rho_tot)."""
        b = self.space.baths[bath]
        return sum(self.first_tier(bath, l) for l in range(b.n_terms))

    def check_finite(self):
        return bool(np.all(np.isfinite(self.matrices)))


def _coupling_list(space, system):
    ops = [np.asarray(v, dtype=complex) for v in system.coupling_operators]
    if len(ops) != len(space.baths):
        raise ValueError(
            f"system has {len(ops)} couplings but hierarchy has "
            f"{len(space.baths)} baths")
    return ops


def _check_dims(system, dim):
    if system.dim != dim:
        raise ValueError(
            f"ADO matrices are {dim}x{dim} but the system dimension is "
            f"{system.dim}")


def apply_heom_rhs(space, system, state, t=0.0):
    """Time derivative of every ADO (matrix-free evaluation).

    Parameters
    ----------
    space : HierarchySpace
    system : SystemModel
        Provides ``hamiltonian_at(t)`` and the coupling operators.
    state : AdoState
    t : float

    Returns
    -------
    AdoState
        ``d/dt`` of the state, in the same scaling as ``state``.
    """
    if state.space is not space and len(state.space) != len(space):
        raise ValueError("state does not belong to this hierarchy space")
    rho = state.matrices
    _check_dims(system, rho.shape[1])
    H = np.asarray(system.hamiltonian_at(t), dtype=complex)
    V = _coupling_list(space, system)
    gam = space.rates
    c = space.amplitudes
    up, down = space.hopping(state.scaled)

    out = -1j * (H @ rho - rho @ H)
    if space.n_axes:
        out -= (space.indices @ gam)[:, None, None] * rho
    for k, b in enumerate(space.baths):
        if b is not None and b.delta != 0.0:
            Vk = V[k]
            comm = Vk @ rho - rho @ Vk
            out -= b.delta * (Vk @ comm - comm @ Vk)
    for a, (k, l) in enumerate(space.axes):
        Vk = V[k]
        sel = np.nonzero(space.plus[:, a] >= 0)[0]
        if len(sel):
            nb = rho[space.plus[sel, a]]
            phi = 1j * (Vk @ nb - nb @ Vk)
            out[sel] -= up[sel, a][:, None, None] * phi
        sel = np.nonzero(space.minus[:, a] >= 0)[0]
        if len(sel):
            nb = rho[space.minus[sel, a]]
            theta = (c[a].real * 1j * (Vk @ nb - nb @ Vk)
                     - c[a].imag * (Vk @ nb + nb @ Vk))
            out[sel] -= down[sel, a][:, None, None] * theta
    return AdoState(space, out, state.scaled)


def _left(X):
    return sp.kron(sp.csr_matrix(X), sp.identity(X.shape[0], format="csr"))


def _right(X):
    return sp.kron(sp.identity(X.shape[0], format="csr"), sp.csr_matrix(X.T))


def commutator_super(X):
    """``A -> [X, A]`` as a sparse d^2 x d^2 matrix."""
    return (_left(X) - _right(X)).tocsr()


def anticommutator_super(X):
    """``A -> {X, A}`` as a sparse d^2 x d^2 matrix."""
    return (_left(X) + _right(X)).tocsr()


def _hop_matrix(space, table, coef, a):
    rows = np.nonzero(table[:, a] >= 0)[0]
    n = len(space)
    return sp.csr_matrix((coef[rows, a], (rows, table[rows, a])), shape=(n, n))


def assemble_operator(space, system, scaled=True, hamiltonian=None):
    """Sparse generator ``A`` with ``d vec/dt = A vec`` over the stacked ADOs.

    Parameters
    ----------
    hamiltonian : array_like, optional
        Override for the system Hamiltonian; by default the system must be
        time independent.

    Returns
    -------
    scipy.sparse.csr_matrix of shape ``(n_ados d^2, n_ados d^2)``
    """
    if hamiltonian is None:
        if system.is_time_dependent:
            raise ValueError(
                "assemble_operator needs a time-independent Hamiltonian; pass "
                "`hamiltonian=` explicitly or use apply_heom_rhs")
        hamiltonian = system.hamiltonian_at(0.0)
    H = np.asarray(hamiltonian, dtype=complex)
    d = H.shape[0]
    _check_dims(system, d)
    V = _coupling_list(space, system)
    n = len(space)
    eye_d2 = sp.identity(d * d, format="csr", dtype=complex)
    eye_n = sp.identity(n, format="csr")

    local = -1j * commutator_super(H)
    for k, b in enumerate(space.baths):
        if b is not None and b.delta != 0.0:
            cx = commutator_super(V[k])
            local = local - b.delta * (cx @ cx)
    A = sp.kron(eye_n, local, format="csr")
    if space.n_axes:
        damping = sp.diags(-(space.indices @ space.rates).astype(complex))
        A = A + sp.kron(damping, eye_d2, format="csr")
    up, down = space.hopping(scaled)
    c = space.amplitudes
    for a, (k, l) in enumerate(space.axes):
        phi = 1j * commutator_super(V[k])
        theta = c[a].real * phi - c[a].imag * anticommutator_super(V[k])
        A = A - sp.kron(_hop_matrix(space, space.plus, up, a), phi, format="csr")
        A = A - sp.kron(_hop_matrix(space, space.minus, down, a), theta,
                        format="csr")
    return A.tocsr()
