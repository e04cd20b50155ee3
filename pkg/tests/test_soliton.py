import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slowlight.errors import InsufficientAsymptoteError, InvalidParameterError, NoStopError
from slowlight.model import PhysicalParams
from slowlight.modulation import Constant, Exponential, PiecewiseSmooth, control_field, switch_off_profile
from slowlight.soliton import (ADJUDICATED, STATED_FORM, ControlLaw, SolitonSolution, all_variants,
                               atomic_state, background_field, eit_velocity, group_velocity, phase,
                               rho_liouville, soliton_center, soliton_fields, stopping_distance)

P = PhysicalParams.from_amplitude(4.5, 3.0)


def closed_form_atoms(sol, zeta, tau):
    """Dark-state-frame amplitudes of the exact solution (derived by hand, checked symbolically)."""
    phi = phase(sol, zeta, tau)
    m, _ = sol.profile.m(tau)
    s = 1.0 / np.sqrt(m * m + 1.0)
    return -np.tanh(phi), -m * s / np.cosh(phi), 1j * s / np.cosh(phi)


# -- fields ----------------------------------------------------------------------------

def test_peak_amplitude():
    sol = SolitonSolution(P, Constant(1.0))
    f = soliton_fields(sol, 0.0, 0.0)
    assert f.omega_a.real.item() == pytest.approx(6 / math.sqrt(2), rel=1e-15)


def test_constant_background_at_origin():
    sol = SolitonSolution(P, Constant(-1.0))
    f = soliton_fields(sol, 0.0, 0.0)
    assert f.omega_a.real.item() == pytest.approx(4.242641, abs=1e-6)
    assert f.omega_b.real.item() == 0.0


@pytest.mark.parametrize("prof", [Constant(-1.0), Constant(2.0), Exponential(1.0), switch_off_profile(0.7)],
                         ids=str)
@pytest.mark.parametrize("side, phi", [("ahead", -30.0), ("behind", 30.0)])
def test_tails_approach_background(prof, side, phi):
    tau = np.linspace(-2, 2, 9)
    sol = SolitonSolution(P, prof)
    zeta = (P.eps0 * prof.phase_integral(tau) - phi) / (4 * P.k * P.eps0)
    f = soliton_fields(sol, zeta, tau)
    assert np.max(np.abs(f.omega_a)) < 1e-11
    assert np.max(np.abs(f.omega_b - background_field(sol, tau, side))) <= 1e-12 * 20


def test_backgrounds_of_adjudicated_convention():
    assert ADJUDICATED.background_law(-1) == ControlLaw(2.0, 2.0)
    assert ADJUDICATED.background_law(+1) == ControlLaw(2.0, -2.0)


def test_stated_form_ahead_background_is_literal_control():
    prof = Exponential(1.0)
    tau = np.linspace(-3, 3, 13)
    sol = SolitonSolution(P, prof, convention=STATED_FORM)
    assert np.allclose(background_field(sol, tau, "ahead"), control_field(prof, P.eps0, tau), rtol=0, atol=1e-14)


def test_eight_variants():
    v = all_variants()
    assert len(v) == 8 and len(set(v)) == 8


@given(st.floats(0, 20), st.floats(-3, 3))
def test_parity(phi, tau):
    prof = Exponential(1.0)
    F = float(prof.phase_integral(tau))
    plus = soliton_fields(SolitonSolution(P, prof, phi - P.eps0 * F), 0.0, tau)
    minus = soliton_fields(SolitonSolution(P, prof, -phi - P.eps0 * F), 0.0, tau)
    m, dm = prof.m(tau)
    mid = 2.0 * dm / (m * m + 1)
    assert plus.omega_a.real.item() == pytest.approx(minus.omega_a.real.item(), abs=1e-12)
    assert (plus.omega_b.real - mid).item() == pytest.approx(-(minus.omega_b.real - mid).item(), abs=1e-12)


def test_k_override_requires_flag():
    with pytest.raises(InvalidParameterError):
        SolitonSolution(P.replace(k=0.125), Constant(-1.0))
    sol = SolitonSolution(P.replace(k=0.125), Constant(-1.0), liouville_only=True)
    assert not sol.maxwell_bloch_consistent


# -- Liouville representation ----------------------------------------------------------

@pytest.mark.parametrize("prof", [Constant(-1.0), Exponential(1.0), switch_off_profile(2.0)], ids=str)
def test_liouville_matches_fields(prof):
    sol = SolitonSolution(P, prof, phi0=1.3)
    z = np.linspace(-2, 4, 100)[:, None]
    t = np.linspace(-5, 5, 100)[None, :]
    lf = rho_liouville(sol, z, t)
    f = soliton_fields(sol, z, t)
    assert np.max(np.abs(np.exp(-lf.rho) - f.omega_a)) <= 1e-10
    assert np.array_equal(lf.eta, f.omega_b)


def test_liouville_plug_in_value():
    sol = SolitonSolution(P, Exponential(1.0))
    lf = rho_liouville(sol, 0.0, 0.0)
    assert float(lf.a_plus) == pytest.approx(-16.0, rel=1e-15) and float(lf.a_minus) == 1.0
    assert float(lf.rho) == pytest.approx(-0.5 * math.log(72 / 4), rel=1e-14)
    assert float(lf.rho) == pytest.approx(-math.log(6 / math.sqrt(2)), rel=1e-14)


def test_liouville_rho_grows_deep_in_medium():
    sol = SolitonSolution(P, Constant(-1.0))
    rho = rho_liouville(sol, np.array([10.0, 100.0, 1000.0]), 0.0).rho
    assert np.all(np.diff(rho) > 0) and rho[-1] > 100


# -- atoms -----------------------------------------------------------------------------

def test_atoms_match_closed_form():
    sol = SolitonSolution(P, Exponential(1.0), phi0=0.5)
    zeta = np.linspace(0, 2, 21)
    tau = np.linspace(-3, 4, 1401)
    st_ = atomic_state(sol, zeta, tau)
    p1, p2, p3 = closed_form_atoms(sol, zeta[:, None], tau[None, :])
    assert np.max(np.abs(st_.psi1 - p1)) <= 1e-9
    assert np.max(np.abs(st_.psi2 - p2)) <= 1e-9
    assert np.max(np.abs(st_.psi3 - p3)) <= 1e-14
    assert np.max(np.abs(st_.norm2 - 1.0)) <= 1e-9


def test_atoms_at_peak():
    sol = SolitonSolution(P, Constant(1.0))
    st_ = atomic_state(sol, np.array([0.0]), np.linspace(-1, 0, 201))
    p3 = st_.psi3[0, -1]
    assert abs(p3) ** 2 == pytest.approx(0.5, rel=1e-14)
    # dark-state frame: i psi3 equals -Omega_a / (2 eps0)
    assert (1j * p3).real == pytest.approx(-4.242641 / 6, abs=1e-6)


def test_atoms_dark_far_ahead():
    sol = SolitonSolution(P, Constant(-1.0))
    st_ = atomic_state(sol, np.array([5.0]), np.linspace(-40, -35, 51))
    assert np.max(np.abs(st_.psi1 - 1)) < 1e-12
    assert np.max(np.abs(st_.psi2)) < 1e-12 and np.max(np.abs(st_.psi3)) < 1e-12


def test_atoms_need_dark_asymptote():
    prof = PiecewiseSmooth(((-0.5, 5.0, Constant(-1.0)),))
    sol = SolitonSolution(P, prof)
    with pytest.raises(InsufficientAsymptoteError):
        atomic_state(sol, np.array([0.0]), np.linspace(-0.5, 1.0, 31))


def test_atoms_require_gamma_zero():
    sol = SolitonSolution(P.replace(gamma=0.1), Constant(-1.0))
    with pytest.raises(InvalidParameterError):
        atomic_state(sol, np.array([0.0]), np.linspace(-1, 1, 11))


# -- velocity and stopping -------------------------------------------------------------

def test_group_velocity_examples():
    assert float(group_velocity(SolitonSolution(P, Constant(1.0)), 0.0).v) == 2.0
    assert float(group_velocity(SolitonSolution(P, Constant(0.0)), 0.0).v) == 4.0
    v = group_velocity(SolitonSolution(P, Exponential(1.0)), np.array([0.0, 10.0, 30.0])).v
    assert np.all(np.diff(v) < 0) and v[-1] < 1e-20
    vel = group_velocity(SolitonSolution(P, Constant(1.0)), 0.0)
    assert float(vel.lab_over_c) == pytest.approx(2.0 / 3.0)


def test_eit_velocity_examples():
    assert eit_velocity(3.0, 4.5) == 1.0
    assert eit_velocity(0.0, 4.5) == 0.0
    assert eit_velocity(0.3, 4.5) == pytest.approx(0.01, rel=1e-14)
    with pytest.raises(InvalidParameterError):
        eit_velocity(1.0, 0.0)


@given(st.floats(0.001, 0.999))
def test_exact_velocity_over_linear_theory(x):
    # v / v_EIT = 2 / (1 + sqrt(1 - x^2)) with x = Omega0 / eps0, exactly
    from slowlight.modulation import riccati_match_constant
    eps0 = 3.0
    omega0 = x * eps0
    m0 = riccati_match_constant(omega0, eps0).eit
    v = float(group_velocity(SolitonSolution(P, Constant(m0)), 0.0).v)
    assert v / eit_velocity(omega0, P.nu0) == pytest.approx(2 / (1 + math.sqrt(1 - x * x)), rel=1e-12)


@given(st.floats(-5, 5), st.sampled_from([Constant(-1.0), Exponential(1.0), Exponential(0.3)]))
def test_center_moves_at_group_velocity(tau, prof):
    sol = SolitonSolution(P, prof)
    h = 1e-3
    c = soliton_center(sol, np.array([tau - 2 * h, tau - h, tau + h, tau + 2 * h]))
    fd = (c[0] - 8 * c[1] + 8 * c[2] - c[3]) / (12 * h)
    assert fd == pytest.approx(float(group_velocity(sol, tau).v), abs=1e-8)


def test_stopping_examples():
    assert stopping_distance(Exponential(1.0), 0.0625) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert stopping_distance(Exponential(2.0), 0.0625) == pytest.approx(0.693147, abs=1e-6)
    with pytest.raises(NoStopError):
        stopping_distance(Constant(-1.0), 0.0625)


@given(st.floats(0.05, 10), st.floats(0.001, 10))
def test_stopping_closed_form_identity(alpha, k):
    assert stopping_distance(Exponential(alpha), k) * 8 * alpha * k == pytest.approx(math.log(2), rel=1e-12)


def test_stopping_by_quadrature_matches_closed_form():
    # the piecewise profile takes the numerical branch
    assert stopping_distance(switch_off_profile(1.0), 0.0625) == pytest.approx(2 * math.log(2), rel=1e-9)


def test_stopping_bounded_profile_never_stops():
    prof = PiecewiseSmooth(((-1.0, 50.0, Constant(0.5)),))
    with pytest.raises(NoStopError):
        stopping_distance(prof, 0.0625)
