import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slowlight.errors import GridError, InvalidParameterError, NumericalInstabilityError
from slowlight.model import AtomState, FieldPair, PhysicalParams, SimulationGrid
from slowlight.modulation import Constant
from slowlight.soliton import SolitonSolution, soliton_fields
from slowlight.solver import Scenario, advance_atoms, advance_fields, default_steps, simulate

P = PhysicalParams.from_amplitude(4.5, 3.0)


def rabi_error(n):
    omega = 2.0
    tau_end = math.pi / omega
    tau = np.linspace(0, tau_end, n)
    f = FieldPair(np.full(n, omega), np.zeros(n))
    st_ = advance_atoms(f, None, P, tau[1] - tau[0])
    exact1 = np.cos(omega * tau / 2)
    exact3 = 1j * np.sin(omega * tau / 2)
    return st_, max(np.max(np.abs(st_.psi1 - exact1)), np.max(np.abs(st_.psi3 - exact3)))


def test_rabi_oscillation():
    st_, err = rabi_error(201)
    assert err < 1e-9
    assert abs(st_.psi3[-1]) == pytest.approx(1.0, abs=1e-9)
    assert np.all(st_.psi2 == 0)


def test_atoms_fourth_order():
    _, e1 = rabi_error(21)
    _, e2 = rabi_error(41)
    assert 14 < e1 / e2 < 18


@given(st.integers(0, 2 ** 31 - 1))
def test_dark_state_untouched_by_control(seed):
    rng = np.random.default_rng(seed)
    n = 50
    ob = rng.normal(size=n) + 1j * rng.normal(size=n)
    st_ = advance_atoms(FieldPair(np.zeros(n), ob), AtomState.dark(), P, 0.01)
    assert np.all(st_.psi1 == 1) and np.all(st_.psi2 == 0) and np.all(st_.psi3 == 0)


@given(st.integers(0, 2 ** 31 - 1))
def test_norm_conserved_per_step(seed):
    rng = np.random.default_rng(seed)
    tau = np.linspace(0, 4, 801)
    c = rng.normal(size=(3, 4))
    oa = sum(c[0, j] * np.cos((j + 1) * tau + c[1, j]) for j in range(4)) * (1 + 0.5j)
    ob = sum(c[2, j] * np.sin((j + 1) * tau) for j in range(4))
    st_ = advance_atoms(FieldPair(oa, ob), AtomState.dark(), P, tau[1] - tau[0])
    assert np.max(np.abs(np.diff(st_.norm2))) <= 1e-12


def test_relaxation_only_drains():
    n = 400
    tau = np.linspace(0, 8, n)
    f = FieldPair(3.0 / np.cosh(tau - 4), np.zeros(n))
    st_ = advance_atoms(f, None, P.replace(gamma=0.3), tau[1] - tau[0])
    assert np.all(np.diff(st_.norm2) <= 1e-15)
    assert st_.norm2[-1] < 0.99


def test_atoms_report_instability_index():
    oa = np.ones(10, complex)
    oa[6] = 1e308
    with pytest.raises(NumericalInstabilityError) as err:
        advance_atoms(FieldPair(oa, np.zeros(10)), None, P, 0.1)
    assert err.value.index in (5, 6)


def test_fields_unchanged_by_dark_atoms_or_zero_coupling(rng):
    n = 64
    f = FieldPair(np.zeros(n), rng.normal(size=n))
    out = advance_fields(f, AtomState.dark((n,)), P, 0.1, 0.01)
    assert np.array_equal(out.omega_a, f.omega_a) and np.array_equal(out.omega_b, f.omega_b)
    weak = PhysicalParams(nu0=1e-300, eps0=3.0, k=0.0625)
    f = FieldPair(1.0 / np.cosh(np.linspace(-20, 5, n)), np.full(n, 2.0))
    atoms = advance_atoms(f, None, weak, 25 / (n - 1))
    out = advance_fields(f, atoms, weak, 0.5, 25 / (n - 1))
    assert np.array_equal(out.omega_a, f.omega_a) and np.array_equal(out.omega_b, f.omega_b)


def test_single_field_step_against_exact_solution():
    sol = SolitonSolution(P, Constant(-1.0))
    tau = np.linspace(-14, 4, 18001)
    ht = tau[1] - tau[0]
    f0 = soliton_fields(sol, 0.3, tau)
    atoms = advance_atoms(f0, None, P, ht)
    errs = []
    for hz in (0.02, 0.01):
        f1 = advance_fields(f0, atoms, P, hz, ht)
        exact = soliton_fields(sol, 0.3 + hz, tau)
        errs.append(np.max(np.abs(f1.omega_a - exact.omega_a)))
    # Heun: local error O(h^3), so at least the stated O(h^2) increment accuracy
    assert errs[1] < errs[0] / 6
    assert errs[0] < 0.02 ** 2


def test_default_steps():
    ht, hz = default_steps(P)
    assert ht == pytest.approx(0.02 / 3)
    assert hz == pytest.approx(ht / 16)
    ht, hz = default_steps(P, omega0=5.0, v_max=2.0)
    assert (ht, hz) == (pytest.approx(0.004), pytest.approx(0.0005))


def _grid(nt=401, nz=41, tmin=-14.0, tmax=6.0, zmax=2.0):
    return SimulationGrid(tmin, tmax, nt, zmax, nz)


def test_scenario_validation():
    sol = SolitonSolution(P, Constant(-1.0))
    with pytest.raises(InvalidParameterError):
        Scenario.from_soliton(sol, _grid(tmin=-1.0))
    with pytest.raises(GridError):
        Scenario.from_soliton(sol, _grid(nz=41), stride=3)
    with pytest.raises(GridError):
        Scenario(P, _grid(), FieldPair(np.zeros(5), np.zeros(5)))


def test_control_only_medium_is_transparent():
    g = _grid(nt=501, nz=201, zmax=5.0)
    tau = g.tau
    omega = 3.0 * np.tanh(tau) + 1.0
    res = simulate(Scenario.control_only(P, g, omega))
    assert np.max(np.abs(res.omega_b - res.omega_b[0])) <= 1e-12
    assert np.max(np.abs(res.omega_a)) <= 1e-12
    assert np.all(res.psi1 == 1) and np.all(res.psi2 == 0) and np.all(res.psi3 == 0)


@pytest.fixture(scope="module")
def soliton_run():
    sol = SolitonSolution(P, Constant(-1.0))
    sc = Scenario.from_soliton(sol, _grid(nt=1001, nz=401, zmax=4.0), stride=4)
    return sol, sc, simulate(sc)


def test_simulation_tracks_exact_solution(soliton_run):
    sol, sc, res = soliton_run
    ref = soliton_fields(sol, res.zeta[:, None], res.tau[None, :])
    peak = np.max(np.abs(ref.omega_a))
    assert np.max(np.abs(res.omega_a - ref.omega_a)) / peak < 2e-3
    assert res.omega_a.shape == (101, 1001)
    assert res.h_zeta == pytest.approx(4 * sc.grid.h_zeta)


def test_norm_and_real_fields(soliton_run):
    _, _, res = soliton_run
    assert np.nanmax(res.norm_deviation) <= 1e-9
    peak = np.max(np.abs(res.omega_a))
    assert np.max(np.abs(res.omega_a.imag)) <= 1e-10 * peak
    assert np.max(np.abs(res.omega_b.imag)) <= 1e-10 * peak


def test_deterministic(soliton_run):
    _, sc, res = soliton_run
    again = simulate(sc)
    threaded = simulate(sc, threads=2)
    for name, arr in res.arrays().items():
        assert arr.tobytes() == again.arrays()[name].tobytes()
        assert arr.tobytes() == threaded.arrays()[name].tobytes()


def test_gamma_makes_population_decay_monotonically():
    sol = SolitonSolution(P, Constant(-1.0))
    g = _grid(nt=801, nz=101, zmax=1.0)
    sc = Scenario.from_soliton(sol, g).replace(params=P.replace(gamma=0.1))
    res = simulate(sc)
    norm = np.abs(res.psi1) ** 2 + np.abs(res.psi2) ** 2 + np.abs(res.psi3) ** 2
    assert np.max(np.diff(norm, axis=1)) <= 1e-14
    assert norm[:, -1].min() < 1 - 1e-3


def test_instability_reports_partial_result():
    params = PhysicalParams(nu0=1e9, eps0=3.0, k=0.0625, gamma=0.0)
    sol = SolitonSolution(P, Constant(-1.0))
    g = _grid(nt=201, nz=401, zmax=40.0)
    sc = Scenario(params, g, soliton_fields(sol, 0.0, g.tau))
    with pytest.raises(NumericalInstabilityError) as err:
        simulate(sc)
    e = err.value
    assert e.partial is not None and e.last_stable_zeta is not None
    assert e.partial.omega_a.shape[0] >= 1
    assert np.all(np.isfinite(e.partial.omega_a))
