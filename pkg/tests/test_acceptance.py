"""
Acceptance suite. Each test prints one ``CRITERION n: PASS|FAIL`` line with
the measured numbers and then asserts at the stated tolerance.
"""

import math

import numpy as np
import pytest

from heomheat.bath import (DrudeSpectralDensity, correlation_quadrature,
                           matsubara_decompose, pade_decompose,
                           validation_grid)
from heomheat.dynamics import (SolverOptions, converged_steady_state,
                               initial_guess, propagate, steady_state)
from heomheat.hierarchy import AdoState, apply_heom_rhs, build_space
from heomheat.models import (SIGMA_X, SIGMA_Z, Drive, gibbs_state,
                             single_bath_two_level, three_level_engine,
                             two_level_model)
from heomheat.observables import currents_report, cycle_accumulate, fidelity
from heomheat.redfield import redfield_heat_current, redfield_steady_state

ZETAS = np.geomspace(0.01, 2.0, 20)
T_WORK = np.geomspace(1.0, 100.0, 11)


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def converged(model, depth=4, rtol=1e-3):
    return converged_steady_state(model, SolverOptions(depth=depth), rtol=rtol)


@pytest.fixture(scope="module")
def two_level_sweep():
    """Two-level sweeps (tilted and commuting cold coupling), N-converged."""
    out = {}
    for kind in ("tilted", "sigma_x"):
        rows = []
        for z in ZETAS:
            m = two_level_model(z, cold_coupling=kind, n_terms=2)
            res = converged(m)
            rows.append((m, res, currents_report(m, res.state)))
        out[kind] = rows
    return out


@pytest.fixture(scope="module")
def engine_sweep():
    rows = []
    for T in T_WORK:
        m = three_level_engine(beta_w=1.0 / T, n_terms=2)
        res = converged(m, depth=2)
        rho_re = redfield_steady_state(m)
        rows.append((m, res, currents_report(m, res.state), rho_re,
                     redfield_heat_current(m, rho_re, "w")))
    return rows


@pytest.fixture(scope="module")
def cross_validation():
    rows = []
    for z in (0.05, 0.5):
        m = two_level_model(z, n_terms=1)
        res = converged_steady_state(
            m, SolverOptions(depth=4, tol=1e-12), rtol=1e-3)
        x0 = initial_guess(res.state.space, m)
        traj = propagate(m, x0, [0.0, 60.0], dt=0.01)
        rows.append((m, res, traj.states[-1], currents_report(m, res.state)))
    return rows


def benchmark_reports(two_level_sweep, engine_sweep, cross_validation):
    pts = [(m, r) for rows in two_level_sweep.values() for m, _, r in rows]
    pts += [(m, r) for m, _, r, _, _ in engine_sweep]
    pts += [(m, r) for m, _, _, r in cross_validation]
    return pts


def test_criterion_1_bath_decomposition(capsys):
    J = DrudeSpectralDensity(1.0, 2.0)
    grid = validation_grid(J.gamma)
    pade = pade_decompose(J, 1.0, 6).reconstruction_error(grid)
    mats = matsubara_decompose(J, 1.0, 6).reconstruction_error(grid)
    verdict(capsys, 1, pade <= 1e-6 and mats > pade,
            f"Pade L=6 max|err|={pade:.3e} (need <= 1e-6), Matsubara L=6 "
            f"{mats:.3e} (need > Pade)")


def test_criterion_2_negative_correlation_at_low_temperature(capsys):
    J = DrudeSpectralDensity(1.0, 1.0)
    t = np.linspace(0.01, 5.0, 500)
    cold = correlation_quadrature(J, 5.0, t).real
    hot = correlation_quadrature(J, 0.5, t).real
    verdict(capsys, 2, cold.min() < 0 and hot.min() > 0,
            f"min Re C(t), t in (0,5): beta=5 {cold.min():.4e} (need < 0) at "
            f"t={t[cold.argmin()]:.2f}; beta=0.5 {hot.min():.4e} (need > 0)")


def test_criterion_3_first_law(capsys, two_level_sweep, engine_sweep,
                               cross_validation):
    pts = benchmark_reports(two_level_sweep, engine_sweep, cross_validation)
    worst = max(abs(r.first_law_residual) / max(abs(v) for v in r.hc.values())
                for _, r in pts)
    verdict(capsys, 3, worst <= 1e-8,
            f"max |sum HC|/max|HC| = {worst:.2e} over {len(pts)} points "
            f"(need <= 1e-8)")


def test_criterion_4_second_law(capsys, two_level_sweep, engine_sweep,
                                cross_validation):
    pts = benchmark_reports(two_level_sweep, engine_sweep, cross_validation)
    ep = min(r.entropy_production for _, r in pts)
    # Clausius sign on the two-bath benchmarks (hot bath "h", beta_h < beta_c)
    two_bath = [r for m, r in pts if len(m.baths) == 2]
    hc_h = min(r.hc["h"] for r in two_bath)
    anomalous = [(m.baths[0].zeta, r.sec["h"])
                 for m, _, r in two_level_sweep["tilted"]
                 if r.sec["h"] < 0 < r.hc["h"]]
    ok = ep >= -1e-10 and hc_h >= 0 and bool(anomalous)
    z, sec = anomalous[0] if anomalous else (math.nan, math.nan)
    verdict(capsys, 4, ok,
            f"min entropy production {ep:.3e} (need >= -1e-10); min HC_h "
            f"{hc_h:.3e} over {len(two_bath)} two-bath points (need >= 0); "
            f"{len(anomalous)} points with SEC_h < 0 < HC_h, first zeta="
            f"{z:.4g} SEC_h={sec:.3e}")


def test_criterion_5_coupling_sweep_shape(capsys, two_level_sweep):
    rows = two_level_sweep["tilted"]
    hc = np.array([r.hc["h"] for _, _, r in rows])
    sec = np.array([r.sec["h"] for _, _, r in rows])
    weak = ZETAS <= 0.05
    gap = np.abs(hc[weak] - sec[weak]) / np.abs(hc[weak])
    a = bool(np.all(gap <= 0.05))
    i = int(np.argmax(sec))
    b = 0 < i < len(ZETAS) - 1 and 0.1 <= ZETAS[i] <= 0.4
    c = bool(np.all(hc > 0))
    comm = two_level_sweep["sigma_x"]
    tpc = max(abs(r.hc["h"] - r.sec["h"]) / abs(r.hc["h"]) for _, _, r in comm)
    d = tpc <= 1e-8
    depths = [res.depth for _, res, _ in rows]
    verdict(capsys, 5, a and b and c and d,
            f"(a) max|HC-SEC|/HC for zeta<=0.05: {gap.max():.3f} (need <= "
            f"0.05) {'ok' if a else 'FAIL'}; (b) SEC max at zeta="
            f"{ZETAS[i]:.4f} {'ok' if b else 'FAIL'}; (c) min HC {hc.min():.3e} "
            f"{'ok' if c else 'FAIL'}; (d) commuting max|HC-SEC|/HC "
            f"{tpc:.1e} {'ok' if d else 'FAIL'}; depths {min(depths)}-"
            f"{max(depths)}")


def test_criterion_6_three_level_engine(capsys, engine_sweep):
    re_w = np.array([row[4] for row in engine_sweep])
    a = bool(np.all(re_w < 0)) and np.ptp(re_w) < 0.25 * np.max(np.abs(re_w))
    hc_w = np.array([r.hc["w"] for _, _, r, _, _ in engine_sweep])
    cross = math.nan
    for j in range(len(T_WORK) - 1):
        if hc_w[j] < 0 <= hc_w[j + 1]:
            x0, x1 = np.log(T_WORK[j]), np.log(T_WORK[j + 1])
            cross = math.exp(x0 - hc_w[j] * (x1 - x0) / (hc_w[j + 1] - hc_w[j]))
            break
    b = 15 <= cross <= 40
    infid = max(1 - fidelity(res.state.rho, rho_re)
                for _, res, _, rho_re, _ in engine_sweep)
    c = infid <= 1e-3
    verdict(capsys, 6, a and b and c,
            f"(a) Redfield HC_w in [{re_w.min():.4e}, {re_w.max():.4e}], "
            f"spread {np.ptp(re_w) / np.max(np.abs(re_w)):.1%} {'ok' if a else 'FAIL'}; "
            f"(b) HEOM HC_w zero crossing at T_w={cross:.1f} "
            f"{'ok' if b else 'FAIL'}; (c) max 1-F = {infid:.2e} "
            f"{'ok' if c else 'FAIL'}")


def test_criterion_7_solver_cross_validation(capsys, cross_validation):
    diffs, changes = [], []
    for _, res, late, _ in cross_validation:
        diffs.append(float(np.max(np.abs(late.vector() - res.state.vector()))))
        changes.append(res.rel_change)
    ok = max(diffs) <= 1e-6 and max(changes) < 1e-3
    verdict(capsys, 7, ok,
            "steady vs propagate(t=60) max|dx| at zeta=0.05, 0.5: "
            + ", ".join(f"{d:.1e}" for d in diffs)
            + " (need <= 1e-6); N -> N+2 change at shipped N "
            + ", ".join(f"{c:.1e} (N={r.depth})"
                        for c, (_, r, _, _) in zip(changes, cross_validation))
            + " (need < 1e-3)")


def test_criterion_8_equilibrium(capsys):
    dev = {}
    for z in (0.01, 1.0):
        m = single_bath_two_level(z, beta=1.0, n_terms=2)
        rho = converged(m).state.rho
        p, g = np.diag(rho).real, np.diag(gibbs_state(m.hamiltonian, 1.0)).real
        dev[z] = float(np.max(np.abs(p - g) / g))
    verdict(capsys, 8, dev[0.01] <= 0.01 and dev[1.0] > 0.01,
            f"max relative population deviation from Gibbs(H_s): zeta=0.01 "
            f"{dev[0.01]:.2%} (need <= 1%), zeta=1 {dev[1.0]:.2%} "
            f"(need > 1%)")


def test_criterion_9_brute_force(capsys):
    m = single_bath_two_level(0.4, beta=1.0, n_terms=0)
    dec = m.decompositions()[0]
    H, V, c, g, delta = (m.hamiltonian, SIGMA_X, dec.amplitudes[0],
                         dec.rates[0], dec.delta)

    def comm(a, b):
        return a @ b - b @ a

    def rhs(r0, r1):
        d0 = -1j * comm(H, r0) - delta * comm(V, comm(V, r0)) - 1j * comm(V, r1)
        d1 = (-1j * comm(H, r1) - g * r1 - delta * comm(V, comm(V, r1))
              - (c.real * 1j * comm(V, r0) - c.imag * (V @ r0 + r0 @ V)))
        return np.concatenate([d0.ravel(), d1.ravel()])

    space = build_space([dec], 1)
    eye = np.eye(8, dtype=complex)
    dense = np.array([rhs(e[:4].reshape(2, 2), e[4:].reshape(2, 2))
                      for e in eye]).T
    ours = np.array([apply_heom_rhs(
        space, m, AdoState.from_vector(space, e, 2, scaled=False)).vector()
        for e in eye]).T
    err = float(np.max(np.abs(ours - dense)))
    verdict(capsys, 9, len(space) == 2 and err <= 1e-12,
            f"max|apply_heom_rhs - hand-assembled 8x8| = {err:.1e} "
            f"(need <= 1e-12)")


def test_criterion_10_cycle_laws(capsys):
    base = two_level_model(0.1, n_terms=1)
    period = 2 * math.pi
    m = base.replace(drives=(Drive(0.3 * SIGMA_Z, "sinusoid", amplitude=1.0,
                                   frequency=1.0),))
    x0 = steady_state(base, SolverOptions(depth=4))
    n_periods, per = 30, 200
    times = np.linspace(0, n_periods * period, n_periods * per + 1)
    traj = propagate(m, x0, times, dt=period / 800)
    cyc = cycle_accumulate(traj, period)
    ok = cyc.entropy_production >= -1e-8 and cyc.efficiency_ok(1e-8)
    verdict(capsys, 10, ok,
            f"Q_h={cyc.heat['h']:.5f} Q_c={cyc.heat['c']:.5f} W={cyc.work:.5f}; "
            f"-sum beta Q = {cyc.entropy_production:.4e} (need >= -1e-8); "
            f"eta={cyc.efficiency:.4f} vs Carnot {cyc.carnot:.4f}; "
            f"periodicity {cyc.periodicity_error:.1e}")
