from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from dfsgate.constants import HBAR
from dfsgate.dfs_logic import DFS_INDICES, IDEAL_PHASES
from dfsgate.drive import SpinConfig, force_table
from dfsgate.dynamics import (
    coherent_state,
    evolve,
    gate_fidelity,
    gate_time,
    mode_detunings,
    mode_response,
    oracle_evolve,
)
from dfsgate.errors import FockOverflowError, ResonanceError

TWO_PI = 2 * np.pi
S = SpinConfig.parse


def ode_response(f, delta, t):
    """Integrate alpha' = -i f e^{i delta t}, Phi' = -Re(conj(f e^{i delta t}) alpha)."""

    def rhs(s, y):
        a = y[0] + 1j * y[1]
        g = f * np.exp(1j * delta * s)
        da = -1j * g
        return [da.real, da.imag, -np.real(np.conj(g) * a)]

    sol = solve_ivp(rhs, (0, t), [0.0, 0.0, 0.0], rtol=1e-11, atol=1e-13, method="DOP853")
    y = sol.y[:, -1]
    return y[0] + 1j * y[1], y[2]


@pytest.mark.parametrize("f,delta,t", [(1.0, 2.0, 0.7), (0.3 - 0.4j, -1.5, 3.1), (2j, 5.0, 0.2), (1.0, 1.0, TWO_PI)])
def test_mode_response_matches_ode(f, delta, t):
    alpha, phi = mode_response(f * HBAR, 1.0, delta, t)
    a_ref, p_ref = ode_response(f, delta, t)
    assert alpha == pytest.approx(a_ref, abs=1e-9)
    assert phi == pytest.approx(p_ref, abs=1e-9)


def test_mode_response_worked_values():
    # one closed loop: phase 2 pi |f/delta|^2
    alpha, phi = mode_response(HBAR * 0.5, 1.0, 2.0, np.pi)
    assert abs(alpha) < 1e-15
    assert phi == pytest.approx(2 * np.pi * 0.0625, rel=1e-14)
    # half a loop: |alpha| = 2 |f/delta|, phase pi |f/delta|^2
    alpha, phi = mode_response(HBAR, 1.0, 1.0, np.pi)
    assert alpha == pytest.approx(2.0, abs=1e-15)
    assert phi == pytest.approx(np.pi, rel=1e-14)


def test_mode_response_small_argument_series():
    _, phi = mode_response(HBAR, 1.0, 1.0, 1e-3)
    assert phi == pytest.approx(1e-9 / 6 * (1 - 1e-6 / 20), rel=1e-13)
    _, phi_lo = mode_response(HBAR, 1.0, 1.0, 0.0999999)
    _, phi_hi = mode_response(HBAR, 1.0, 1.0, 0.1000001)
    assert phi_hi > phi_lo
    assert phi_hi - phi_lo == pytest.approx(0.1**2 / 2 * 2e-7, rel=1e-3)


def test_mode_response_resonance():
    with pytest.raises(ResonanceError):
        mode_response(1.0, 1.0, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(
    fr=st.floats(-1e3, 1e3), fi=st.floats(-1e3, 1e3),
    delta=st.floats(1e2, 1e7).map(lambda d: d) | st.floats(-1e7, -1e2),
    loops=st.integers(1, 8),
)
def test_loop_closure(fr, fi, delta, loops):
    f = complex(fr, fi)
    t = TWO_PI * loops / abs(delta)
    alpha, phi = mode_response(f * HBAR, 1.0, delta, t)
    scale = abs(f / delta)
    assert abs(alpha) <= 1e-12 * max(scale, 1e-300) + 1e-300
    assert phi == pytest.approx(np.sign(delta) * TWO_PI * loops * scale**2, rel=1e-12, abs=1e-300)


def test_gate_time():
    class D:
        detuning = -TWO_PI * 40e3

    assert gate_time(D, 1) == pytest.approx(25e-6)
    assert gate_time(D, 3) == pytest.approx(75e-6)


def test_detunings(tuned, base_drive):
    _, modes = tuned
    d = mode_detunings(modes, base_drive)
    w = modes.mode_frequencies
    assert d[2] == base_drive.detuning
    np.testing.assert_allclose(d, w[2] + base_drive.detuning - w, rtol=1e-14)


def test_evolve_zero_time_and_zero_drive(tuned, base_drive):
    crystal, modes = tuned
    res = evolve(crystal, modes, base_drive, 0.0)
    assert np.all(res.displacements == 0) and np.all(res.total_phases == 0)
    res = evolve(crystal, modes, base_drive, 1e-5)
    assert np.all(res.displacements == 0)
    rep = gate_fidelity(res, ideal_phases=(0, 0, 0, 0))
    assert rep.fidelity == pytest.approx(1.0, abs=1e-15)


def test_global_spin_flip_symmetry(tuned, base_drive):
    """Swapping every up and down under Omega_up = -Omega_down negates forces and keeps phases."""
    crystal, modes = tuned
    d = base_drive.with_rabi(TWO_PI * 1e5)
    res = evolve(crystal, modes, d, 0.37 * gate_time(d))
    for i in range(16):
        j = 15 - i
        np.testing.assert_allclose(res.displacements[j], -res.displacements[i], atol=1e-14)
        assert res.total_phases[j] == pytest.approx(res.total_phases[i], rel=1e-12, abs=1e-15)


def test_stark_phases(tuned, base_drive):
    crystal, modes = tuned
    d = replace(base_drive, stark_up=3.0, stark_down=-1.0)
    res = evolve(crystal, modes, d, 2.0)
    assert res.stark_phases[S("uuuu").index] == pytest.approx(-24.0)
    assert res.stark_phases[S("uudd").index] == pytest.approx(-8.0)
    dfs = res.stark_phases[list(DFS_INDICES)]
    np.testing.assert_allclose(dfs, dfs[0])


@settings(max_examples=30, deadline=None)
@given(up=st.floats(-TWO_PI * 1e4, TWO_PI * 1e4), down=st.floats(-TWO_PI * 1e4, TWO_PI * 1e4))
def test_uniform_stark_shifts_leave_fidelity(table_points, up, down):
    wp = table_points["e"]
    ref = gate_fidelity(evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time)).fidelity
    d = replace(wp.drive, stark_up=up, stark_down=down)
    got = gate_fidelity(evolve(wp.crystal, wp.modes, d, wp.gate_time)).fidelity
    assert abs(got - ref) < 1e-12


def test_nonuniform_stark_shifts_do_matter(table_points):
    wp = table_points["e"]
    d = replace(wp.drive, stark_up=TWO_PI * 1e4, illumination_factors=(1.0, 1.05, 1.0, 1.0))
    ref = gate_fidelity(evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time)).fidelity
    got = gate_fidelity(evolve(wp.crystal, wp.modes, d, wp.gate_time)).fidelity
    assert ref - got > 1e-3


def test_fidelity_against_explicit_overlap(table_points):
    """Overlap <vac| <G| U |vac>|psi> built from truncated coherent-state vectors."""
    wp = table_points["e"]
    res = evolve(wp.crystal, wp.modes, wp.drive, 0.93 * wp.gate_time)
    vac = np.zeros(40)
    vac[0] = 1
    total = 0j
    for k, i in enumerate(DFS_INDICES):
        amp = np.exp(1j * (res.total_phases[i] - IDEAL_PHASES[k]))
        for a in res.displacements[i]:
            amp *= np.vdot(vac, coherent_state(a, 40))
        total += amp
    assert gate_fidelity(res).fidelity == pytest.approx(abs(total) ** 2 / 16, abs=1e-14)


def test_fidelity_phase_errors_at_ideal(tuned, base_drive):
    crystal, modes = tuned
    res = evolve(crystal, modes, base_drive, 1e-6)
    rep = gate_fidelity(res, ideal_phases=(0.1, 0.1, 0.1, 0.1))
    assert rep.fidelity == pytest.approx(1.0)
    assert rep.global_phase == pytest.approx(-0.1)
    np.testing.assert_allclose(rep.phase_errors, 0, atol=1e-14)


def test_table_point_phases(table_points):
    wp = table_points["e"]
    res = evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time, include_parasitic=False)
    rep = gate_fidelity(res)
    np.testing.assert_allclose(res.total_phases[list(DFS_INDICES)], IDEAL_PHASES, atol=1e-12)
    assert rep.fidelity == pytest.approx(1.0, abs=1e-12)
    full = evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time)
    assert full.total_phases[S("duud").index] == pytest.approx(np.pi / 2, abs=0.05)
    assert np.max(np.abs(full.displacements[list(DFS_INDICES)])) < 0.05


@pytest.mark.parametrize("mode,value", [("e", 1.7994e-4), ("breathing", 8.41e-4), ("fourth", 6.46e-4)])
def test_table_point_infidelity(table_points, mode, value):
    wp = table_points[mode]
    rep = gate_fidelity(evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time))
    assert rep.infidelity == pytest.approx(value, rel=0.01)


def test_oracle_agrees_at_table_point(table_points):
    wp = table_points["e"]
    res = evolve(wp.crystal, wp.modes, wp.drive, wp.gate_time)
    sc = S("duud")
    orc = oracle_evolve(wp.crystal, wp.modes, wp.drive, sc, wp.gate_time)
    alpha = res.displacements[sc.index]
    overlap = orc.overlap(alpha, res.geometric_phases[sc.index])
    assert abs(overlap) ** 2 >= 1 - 1e-6
    assert abs(np.angle(overlap)) < 1e-5
    assert orc.total_phase == pytest.approx(res.total_phases[sc.index], abs=1e-5)
    assert orc.edge_population < 1e-8


def test_oracle_half_period(tuned, base_drive):
    crystal, modes = tuned
    d = base_drive.with_rabi(TWO_PI * 1.3e5)
    t = 0.5 * gate_time(d)
    sc = S("uddu")
    res = evolve(crystal, modes, d, t)
    orc = oracle_evolve(crystal, modes, d, sc, t, fock_cutoff=20)
    # mediating mode is slow and accurate; fast parasitic modes carry O((omega dt)^2) step error
    assert orc.displacements[2] == pytest.approx(res.displacements[sc.index][2], abs=1e-8)
    np.testing.assert_allclose(orc.displacements, res.displacements[sc.index], rtol=0, atol=1e-7)
    assert abs(res.displacements[sc.index][2]) > 0.3


def test_oracle_undriven_stays_in_vacuum(tuned, base_drive):
    crystal, modes = tuned
    d = base_drive.with_rabi(TWO_PI * 1e5)
    orc = oracle_evolve(crystal, modes, replace(d, rabi_up=0.0, rabi_down=0.0), S("udud"), 1e-6)
    np.testing.assert_allclose(np.abs(orc.mode_states[:, 0]), 1.0, atol=1e-14)


def test_oracle_fock_overflow(tuned, base_drive):
    crystal, modes = tuned
    d = base_drive.with_rabi(TWO_PI * 1.3e5)
    with pytest.raises(FockOverflowError) as info:
        oracle_evolve(crystal, modes, d, S("duud"), 0.5 * gate_time(d), fock_cutoff=4)
    assert info.value.population > 1e-8


def test_oracle_argument_checks(tuned, base_drive):
    crystal, modes = tuned
    with pytest.raises(ValueError):
        oracle_evolve(crystal, modes, base_drive, S("duud"), 1e-6, steps_per_period=10)
    with pytest.raises(ValueError):
        oracle_evolve(crystal, modes, base_drive, S("duud"), 1e-6, fock_cutoff=1)


def test_force_table_shape(tuned, base_drive):
    crystal, modes = tuned
    assert force_table(crystal, modes, base_drive).shape == (16, 4)
