import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heomheat.bath import BathSpec
from heomheat.models import (BUILDERS, SIGMA_X, SIGMA_Y, SIGMA_Z, Drive,
                             SystemModel, anticommutator, commutator,
                             gibbs_state, single_bath_two_level,
                             three_level_engine, two_level_model)


def test_pauli_algebra():
    np.testing.assert_allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)
    np.testing.assert_allclose(anticommutator(SIGMA_X, SIGMA_X), 2 * np.eye(2))


def test_gibbs_state():
    rho = gibbs_state(0.5 * SIGMA_Z, 1.0)
    p_up = 1.0 / (1.0 + math.exp(1.0))
    np.testing.assert_allclose(np.diag(rho).real, [p_up, 1 - p_up])
    assert np.trace(rho).real == pytest.approx(1.0)


def test_two_level_defaults():
    m = two_level_model()
    assert m.dim == 2
    assert m.bath_names == ["h", "c"]
    np.testing.assert_allclose(m.betas, [0.5, 1.0])
    np.testing.assert_allclose(m.couplings[1], (SIGMA_X + SIGMA_Z) / math.sqrt(2))
    assert np.linalg.norm(commutator(*m.couplings)) > 0
    ms = two_level_model(cold_coupling="sigma_x")
    assert np.linalg.norm(commutator(*ms.couplings)) == 0
    with pytest.raises(ValueError):
        two_level_model(cold_coupling="sigma_y")


def test_three_level_engine():
    m = three_level_engine()
    np.testing.assert_allclose(np.diag(m.hamiltonian).real, [0, 1, 0.5])
    assert m.bath_names == ["h", "c", "w"]
    # V_w couples |h> and |c>
    assert m.couplings[2][1, 2] == 1 and m.couplings[2][0, 1] == 0
    with pytest.raises(ValueError, match="omega_h > omega_c"):
        three_level_engine(omega_h=0.5, omega_c=1.0)


def test_single_bath():
    m = single_bath_two_level(0.1, beta=2.0)
    assert len(m.baths) == 1 and m.betas[0] == 2.0
    assert set(BUILDERS) == {"two_level", "single_bath", "three_level"}


def test_validation():
    b = BathSpec("a", 0.1, 1.0, 1.0)
    with pytest.raises(ValueError, match="Hermitian"):
        SystemModel(np.array([[0, 1], [0, 0]]), (b,), (SIGMA_X,))
    with pytest.raises(ValueError, match="unique"):
        SystemModel(SIGMA_Z, (b, b), (SIGMA_X, SIGMA_X))
    with pytest.raises(ValueError, match="couplings"):
        SystemModel(SIGMA_Z, (b,), (SIGMA_X, SIGMA_Z))
    with pytest.raises(ValueError, match="dimension"):
        SystemModel(SIGMA_Z, (b,), (np.eye(3),))
    with pytest.raises(KeyError):
        two_level_model().bath_index("w")


def test_with_bath_and_baths():
    m = two_level_model(0.1)
    m2 = m.with_bath("c", zeta=0.7)
    assert m2.baths[1].zeta == 0.7 and m2.baths[0].zeta == 0.1
    m3 = m.with_baths(n_terms=4)
    assert all(b.n_terms == 4 for b in m3.baths)
    assert m.baths[0].n_terms == 2


def test_drive_waveforms():
    d = Drive(SIGMA_X, "sinusoid", amplitude=2.0, frequency=3.0, phase=0.1)
    assert d.value(0.5) == pytest.approx(2.0 * math.sin(1.6))
    assert d.period == pytest.approx(2 * math.pi / 3)
    c = Drive(SIGMA_X, "constant", amplitude=0.4)
    assert c.value(7.0) == 0.4 and c.derivative(1.0) == 0.0 and c.period is None
    p = Drive(SIGMA_X, "piecewise-linear", times=(0.0, 1.0, 3.0),
              values=(0.0, 2.0, 0.0))
    assert p.value(0.5) == pytest.approx(1.0)
    assert p.value(-1.0) == 0.0 and p.value(10.0) == 0.0
    assert p.derivative(2.0) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        Drive(SIGMA_X, "square")
    with pytest.raises(ValueError):
        Drive(SIGMA_X, "piecewise-linear", times=(0.0, 0.0), values=(1, 2))


@given(t=st.floats(0.0, 20.0), amp=st.floats(-2, 2), freq=st.floats(0.1, 5))
def test_drive_derivative_matches_finite_difference(t, amp, freq):
    d = Drive(SIGMA_X, "sinusoid", amplitude=amp, frequency=freq)
    h = 1e-6
    fd = (d.value(t + h) - d.value(t - h)) / (2 * h)
    assert d.derivative(t) == pytest.approx(fd, abs=1e-6)


def test_drive_round_trip():
    d = Drive(SIGMA_Y, "sinusoid", amplitude=0.2, frequency=1.5, phase=0.3)
    d2 = Drive.from_dict(d.to_dict())
    np.testing.assert_allclose(d2.operator, SIGMA_Y)
    assert (d2.amplitude, d2.frequency, d2.phase) == (0.2, 1.5, 0.3)


def test_time_dependent_hamiltonian():
    d = Drive(SIGMA_X, "sinusoid", amplitude=0.5, frequency=2.0)
    m = two_level_model().replace(drives=(d,))
    assert m.is_time_dependent
    t = 0.3
    np.testing.assert_allclose(m.hamiltonian_at(t),
                               0.5 * SIGMA_Z + 0.5 * math.sin(0.6) * SIGMA_X)
    np.testing.assert_allclose(m.dhdt(t), math.cos(0.6) * SIGMA_X)
    assert not two_level_model().is_time_dependent
