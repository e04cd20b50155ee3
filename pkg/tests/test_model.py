import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slowlight.errors import GridError, InvalidParameterError
from slowlight.model import (AtomState, FieldPair, PhysicalParams, SimulationGrid, default_params,
                             k_from_amplitude, normalize_units)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
nonzero = finite.filter(lambda x: abs(x) > 1e-3)


def test_k_examples():
    assert k_from_amplitude(4.5, 3.0) == 0.0625
    assert k_from_amplitude(4.5, 1.5) == 0.25
    assert k_from_amplitude(4.5, -3.0, 0.0) == k_from_amplitude(4.5, 3.0, 0.0)


def test_k_undefined_without_amplitude():
    with pytest.raises(ZeroDivisionError):
        k_from_amplitude(4.5, 0.0, 0.0)


@given(st.floats(0.01, 100), nonzero, st.floats(-10, 10))
def test_k_even_in_eps0(nu0, eps0, delta):
    assert k_from_amplitude(nu0, eps0, delta) == k_from_amplitude(nu0, -eps0, delta)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
def test_k_decreases_with_amplitude(nu0, a, b):
    lo, hi = sorted((a, b))
    assert k_from_amplitude(nu0, hi) <= k_from_amplitude(nu0, lo)


@given(st.floats(0.01, 100), nonzero, st.floats(-10, 10))
def test_from_amplitude_is_consistent(nu0, eps0, delta):
    p = PhysicalParams.from_amplitude(nu0, eps0, delta=delta)
    assert p.k_consistent
    assert math.isclose(p.k * 8 * (eps0 ** 2 + delta ** 2), nu0, rel_tol=4e-16)


def test_defaults():
    p = default_params()
    assert (p.nu0, p.eps0, p.gamma, p.delta, p.k) == (4.5, 3.0, 0.0, 0.0, 0.0625)
    assert p == PhysicalParams()


@pytest.mark.parametrize("kw", [dict(nu0=0), dict(nu0=-1), dict(k=0), dict(gamma=-0.1),
                                dict(eps0=0), dict(nu0=float("nan")), dict(k=float("inf"))])
def test_params_invariants(kw):
    with pytest.raises(InvalidParameterError):
        PhysicalParams(**kw)


def test_replaced_k_is_flagged_inconsistent():
    assert not default_params().replace(k=0.125).k_consistent


@pytest.mark.parametrize("omega0, nu0", [(3.0, 4.5), (2.0, 2.0), (0.0, 0.0)])
def test_normalize_units(omega0, nu0):
    u = normalize_units(omega0, 1.0)
    assert u.nu0 == nu0
    assert u.degenerate == (nu0 == 0)
    assert u.pulse_length_s == 1e-6
    assert math.isclose(u.pulse_length_m, 1e-7 * 299792458.0 * 1e-6)


def test_normalize_units_rejects_bad_pulse():
    for t in (0.0, -1.0):
        with pytest.raises(InvalidParameterError):
            normalize_units(3.0, t)


def test_degenerate_units_cannot_build_params():
    with pytest.raises(InvalidParameterError):
        normalize_units(0.0).params()
    assert normalize_units(3.0).params() == default_params()


@given(st.floats(-100, 100), st.floats(0.001, 100), st.integers(2, 5000),
       st.floats(0.001, 100), st.integers(2, 5000))
def test_grid_spacing_reproduces_span(tmin, span, nt, zmax, nz):
    g = SimulationGrid(tmin, tmin + span, nt, zmax, nz)
    t_span = g.tau_max - g.tau_min
    assert abs((nt - 1) * g.h_tau - t_span) <= np.spacing(t_span)
    assert abs((nz - 1) * g.h_zeta - zmax) <= np.spacing(zmax)
    assert g.tau[0] == g.tau_min and g.tau[-1] == g.tau_max
    assert g.shape == (nz, nt)


@pytest.mark.parametrize("args", [(1, 0, 10, 1, 10), (0, 1, 1, 1, 10), (0, 1, 10, 0, 10),
                                  (0, 1, 10, 1, 1), (0, 1, 10, -1, 10)])
def test_grid_invariants(args):
    with pytest.raises(GridError):
        SimulationGrid(*args)


def test_grid_refined():
    g = SimulationGrid(-1, 1, 11, 2, 5).refined(2)
    assert (g.n_tau, g.n_zeta) == (21, 9)


def _json_roundtrip(d):
    return json.loads(json.dumps(d))


@given(st.floats(0.01, 1e3), st.floats(0, 10), nonzero, st.floats(1e-6, 1e3), finite)
def test_params_roundtrip(nu0, gamma, eps0, k, delta):
    p = PhysicalParams(nu0, gamma, eps0, k, delta)
    assert PhysicalParams.from_dict(_json_roundtrip(p.to_dict())) == p


@given(st.floats(-100, 100), st.floats(0.001, 100), st.integers(2, 100), st.floats(0.001, 100),
       st.integers(2, 100))
def test_grid_roundtrip(tmin, span, nt, zmax, nz):
    g = SimulationGrid(tmin, tmin + span, nt, zmax, nz)
    assert SimulationGrid.from_dict(_json_roundtrip(g.to_dict())) == g


complex_arrays = st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
                          min_size=1, max_size=20)


@given(complex_arrays)
def test_state_and_fields_roundtrip_bit_exact(values):
    a = np.array(values, dtype=complex)
    s = AtomState(a, 2 * a, -a)
    s2 = AtomState.from_dict(_json_roundtrip(s.to_dict()))
    for x, y in zip((s.psi1, s.psi2, s.psi3), (s2.psi1, s2.psi2, s2.psi3)):
        assert x.tobytes() == y.tobytes()
    f = FieldPair(a, np.conj(a))
    f2 = FieldPair.from_dict(_json_roundtrip(f.to_dict()))
    assert f.omega_a.tobytes() == f2.omega_a.tobytes()
    assert f.omega_b.tobytes() == f2.omega_b.tobytes()


def test_containers_are_immutable():
    s = AtomState.dark((3,))
    with pytest.raises(ValueError):
        s.psi1[0] = 0
    assert np.all(s.norm2 == 1.0)


def test_fieldpair_rejects_nonfinite():
    with pytest.raises(InvalidParameterError):
        FieldPair(np.array([np.nan]), np.array([0.0]))
    assert FieldPair(np.array([1 + 1e-12j]), np.array([2.0])).max_imag() == pytest.approx(1e-12)
