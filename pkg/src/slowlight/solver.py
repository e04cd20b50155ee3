"""Characteristic-coordinate integrator for the Maxwell-Schroedinger system.

Fields propagate in zeta, atoms evolve in tau:

    d_zeta Omega_a = i nu0 psi3 conj(psi1)
    d_zeta Omega_b = i nu0 psi3 conj(psi2)
    d_tau psi1 = (i/2) conj(Omega_a) psi3
    d_tau psi2 = (i/2) conj(Omega_b) psi3
    d_tau psi3 = -(gamma/2) psi3 + (i/2) (Omega_a psi1 + Omega_b psi2)

gamma is a population relaxation rate: d_tau |psi3|^2 picks up -gamma |psi3|^2,
the rate that appears in the intensity law and the auxiliary equation.  A
purely imaginary -i gamma term would only rotate the phase of psi3 and leave
the norm conserved.

Each zeta slice integrates the atoms with classic RK4 along tau (midpoint
fields by 4-point cubic interpolation), then advances the fields with a Heun
predictor-corrector.  The march is sequential in zeta; the per-slice field
update is an elementwise map and may run on several threads without
changing a single bit of the result.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import GridError, InvalidParameterError, NumericalInstabilityError
from .model import AtomState, FieldPair, PhysicalParams, SimulationGrid
from .soliton import SolitonSolution, soliton_fields

SCHEME_VERSION = "rk4-tau/heun-zeta/1"


@numba.njit(cache=True)
def _midpoints(v, out):
    n = v.shape[0]
    if n < 4:
        for j in range(n - 1):
            out[j] = 0.5 * (v[j] + v[j + 1])
        return
    out[0] = (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0
    for j in range(1, n - 2):
        out[j] = (-v[j - 1] + 9.0 * v[j] + 9.0 * v[j + 1] - v[j + 2]) / 16.0
    out[n - 2] = (v[n - 4] - 5.0 * v[n - 3] + 15.0 * v[n - 2] + 5.0 * v[n - 1]) / 16.0


@numba.njit(cache=True)
def _atoms_kernel(oa, ob, y1, y2, y3, gamma, h, p1, p2, p3, ma, mb):
    """RK4 along tau; returns the first non-finite index or -1."""
    n = oa.shape[0]
    _midpoints(oa, ma)
    _midpoints(ob, mb)
    p1[0] = y1
    p2[0] = y2
    p3[0] = y3
    ig = -0.5 * gamma + 0j
    for j in range(n - 1):
        a0 = oa[j]
        b0 = ob[j]
        am = ma[j]
        bm = mb[j]
        a1 = oa[j + 1]
        b1 = ob[j + 1]
        k11 = 0.5j * a0.conjugate() * y3
        k12 = 0.5j * b0.conjugate() * y3
        k13 = ig * y3 + 0.5j * (a0 * y1 + b0 * y2)
        u1 = y1 + 0.5 * h * k11
        u2 = y2 + 0.5 * h * k12
        u3 = y3 + 0.5 * h * k13
        k21 = 0.5j * am.conjugate() * u3
        k22 = 0.5j * bm.conjugate() * u3
        k23 = ig * u3 + 0.5j * (am * u1 + bm * u2)
        u1 = y1 + 0.5 * h * k21
        u2 = y2 + 0.5 * h * k22
        u3 = y3 + 0.5 * h * k23
        k31 = 0.5j * am.conjugate() * u3
        k32 = 0.5j * bm.conjugate() * u3
        k33 = ig * u3 + 0.5j * (am * u1 + bm * u2)
        u1 = y1 + h * k31
        u2 = y2 + h * k32
        u3 = y3 + h * k33
        k41 = 0.5j * a1.conjugate() * u3
        k42 = 0.5j * b1.conjugate() * u3
        k43 = ig * u3 + 0.5j * (a1 * u1 + b1 * u2)
        y1 = y1 + h * (k11 + 2.0 * k21 + 2.0 * k31 + k41) / 6.0
        y2 = y2 + h * (k12 + 2.0 * k22 + 2.0 * k32 + k42) / 6.0
        y3 = y3 + h * (k13 + 2.0 * k23 + 2.0 * k33 + k43) / 6.0
        if not (np.isfinite(y1.real) and np.isfinite(y1.imag) and np.isfinite(y2.real)
                and np.isfinite(y2.imag) and np.isfinite(y3.real) and np.isfinite(y3.imag)):
            return j + 1
        p1[j + 1] = y1
        p2[j + 1] = y2
        p3[j + 1] = y3
    return -1


def _march_impl(oa0, ob0, y1, y2, y3, nu0, gamma, h_tau, h_zeta, n_zeta, stride, euler,
                sa, sb, s1, s2, s3, norm_dev):
    n = oa0.shape[0]
    ca = oa0.copy()
    cb = ob0.copy()
    pa = np.empty(n, np.complex128)
    pb = np.empty(n, np.complex128)
    fa = np.empty(n, np.complex128)
    fb = np.empty(n, np.complex128)
    p1 = np.empty(n, np.complex128)
    p2 = np.empty(n, np.complex128)
    p3 = np.empty(n, np.complex128)
    q1 = np.empty(n, np.complex128)
    q2 = np.empty(n, np.complex128)
    q3 = np.empty(n, np.complex128)
    ma = np.empty(max(n - 1, 1), np.complex128)
    mb = np.empty(max(n - 1, 1), np.complex128)
    coup = 1j * nu0
    for i in range(n_zeta):
        bad = _atoms_kernel(ca, cb, y1, y2, y3, gamma, h_tau, p1, p2, p3, ma, mb)
        if bad >= 0:
            return i
        dev = 0.0
        for j in range(n):
            d = abs(p1[j].real ** 2 + p1[j].imag ** 2 + p2[j].real ** 2 + p2[j].imag ** 2
                    + p3[j].real ** 2 + p3[j].imag ** 2 - 1.0)
            if d > dev:
                dev = d
        norm_dev[i] = dev
        if i % stride == 0:
            r = i // stride
            for j in range(n):
                sa[r, j] = ca[j]
                sb[r, j] = cb[j]
                s1[r, j] = p1[j]
                s2[r, j] = p2[j]
                s3[r, j] = p3[j]
        if i == n_zeta - 1:
            break
        for j in numba.prange(n):
            fa[j] = coup * p3[j] * p1[j].conjugate()
            fb[j] = coup * p3[j] * p2[j].conjugate()
            pa[j] = ca[j] + h_zeta * fa[j]
            pb[j] = cb[j] + h_zeta * fb[j]
        if euler:
            for j in numba.prange(n):
                ca[j] = pa[j]
                cb[j] = pb[j]
        else:
            bad = _atoms_kernel(pa, pb, y1, y2, y3, gamma, h_tau, q1, q2, q3, ma, mb)
            if bad >= 0:
                return i
            for j in numba.prange(n):
                ca[j] = ca[j] + 0.5 * h_zeta * (fa[j] + coup * q3[j] * q1[j].conjugate())
                cb[j] = cb[j] + 0.5 * h_zeta * (fb[j] + coup * q3[j] * q2[j].conjugate())
        for j in range(n):
            if not (np.isfinite(ca[j].real) and np.isfinite(ca[j].imag)
                    and np.isfinite(cb[j].real) and np.isfinite(cb[j].imag)):
                return i + 1
    return -1


_march_serial = numba.njit(cache=True)(_march_impl)
_march_parallel = None


def _march(threads: int):
    global _march_parallel
    if threads <= 1:
        return _march_serial
    if _march_parallel is None:
        # the bundled TBB may be too old; numba then falls back to OpenMP/workqueue
        warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
        _march_parallel = numba.njit(cache=True, parallel=True)(_march_impl)
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    return _march_parallel


# -- public operations -----------------------------------------------------------------

def _as_slice(arr, name):
    a = np.ascontiguousarray(np.asarray(arr, dtype=np.complex128))
    if a.ndim != 1:
        raise InvalidParameterError(f"{name} must be a 1-D tau slice")
    return a


def _scalar_state(state: AtomState | None):
    if state is None:
        return 1.0 + 0j, 0j, 0j
    if state.psi1.ndim != 0:
        raise InvalidParameterError("initial atom state must be a single (scalar) state")
    return complex(state.psi1), complex(state.psi2), complex(state.psi3)


def advance_atoms(fields: FieldPair, atom_initial: AtomState | None, params: PhysicalParams,
                  h_tau: float) -> AtomState:
    """Integrate the atoms along one tau slice from ``atom_initial`` (default dark)."""
    oa = _as_slice(fields.omega_a, "omega_a")
    ob = _as_slice(fields.omega_b, "omega_b")
    n = oa.size
    out = [np.empty(n, np.complex128) for _ in range(3)]
    ma = np.empty(max(n - 1, 1), np.complex128)
    mb = np.empty(max(n - 1, 1), np.complex128)
    y = _scalar_state(atom_initial)
    bad = _atoms_kernel(oa, ob, *y, params.gamma, float(h_tau), *out, ma, mb)
    if bad >= 0:
        raise NumericalInstabilityError(f"atom amplitudes became non-finite at tau index {bad}", index=bad)
    return AtomState(*out)


def field_rhs(atoms: AtomState, nu0: float):
    return 1j * nu0 * atoms.psi3 * np.conj(atoms.psi1), 1j * nu0 * atoms.psi3 * np.conj(atoms.psi2)


def advance_fields(fields: FieldPair, atoms: AtomState, params: PhysicalParams, h_zeta: float,
                   h_tau: float, atom_initial: AtomState | None = None,
                   scheme: str = "heun") -> FieldPair:
    """One zeta step of the field equations.

    ``atoms`` must be the slice integrated from ``fields``; the corrector
    re-integrates the atoms on the predicted fields internally.
    """
    fa, fb = field_rhs(atoms, params.nu0)
    pa = fields.omega_a + h_zeta * fa
    pb = fields.omega_b + h_zeta * fb
    if scheme == "euler":
        return FieldPair(pa, pb)
    if scheme != "heun":
        raise InvalidParameterError(f"unknown field scheme {scheme!r}")
    predicted = advance_atoms(FieldPair(pa, pb), atom_initial, params, h_tau)
    ga, gb = field_rhs(predicted, params.nu0)
    return FieldPair(fields.omega_a + 0.5 * h_zeta * (fa + ga),
                     fields.omega_b + 0.5 * h_zeta * (fb + gb))


def default_steps(params: PhysicalParams, omega0: float = 0.0, v_max: float | None = None):
    """``(h_tau, h_zeta)`` resolving the pulse width and its trajectory."""
    h_tau = 0.02 / max(abs(params.eps0), abs(omega0), 1.0)
    if v_max is None:
        v_max = 1.0 / (4.0 * params.k)
    return h_tau, h_tau / (4.0 * v_max)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Boundary data at the medium entrance plus the initial atomic state.

    ``stride`` stores every ``stride``-th zeta slice; ``field_scheme="euler"``
    is a first-order control used by the convergence tests.
    """

    params: PhysicalParams
    grid: SimulationGrid
    boundary: FieldPair
    atom_initial: AtomState = field(default_factory=AtomState.dark)
    reference: SolitonSolution | None = None
    stride: int = 1
    field_scheme: str = "heun"

    def __post_init__(self):
        if self.boundary.omega_a.shape != (self.grid.n_tau,):
            raise GridError("boundary fields must be sampled on the grid's tau lattice")
        if self.atom_initial.psi1.ndim != 0:
            raise InvalidParameterError("atom_initial must be a scalar state")
        if self.stride < 1 or (self.grid.n_zeta - 1) % self.stride:
            raise GridError("stride must divide n_zeta - 1")
        if self.field_scheme not in ("heun", "euler"):
            raise InvalidParameterError(f"unknown field scheme {self.field_scheme!r}")
        peak = float(np.max(np.abs(self.boundary.omega_a)))
        if peak > 0 and abs(self.boundary.omega_a[0]) > 1e-8 * peak:
            raise InvalidParameterError(
                "probe field does not vanish at tau_min; the atoms cannot start dark")

    @classmethod
    def from_soliton(cls, sol: SolitonSolution, grid: SimulationGrid, **kw) -> "Scenario":
        b = soliton_fields(sol, grid.zeta_min, grid.tau)
        return cls(sol.params, grid, b, reference=sol, **kw)

    @classmethod
    def control_only(cls, params: PhysicalParams, grid: SimulationGrid, omega, **kw) -> "Scenario":
        ob = np.broadcast_to(np.asarray(omega, dtype=complex), (grid.n_tau,))
        return cls(params, grid, FieldPair(np.zeros(grid.n_tau), ob), **kw)

    def replace(self, **changes) -> "Scenario":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return Scenario(**data)

    def refined(self, factor: int = 2) -> "Scenario":
        """Halve both steps; needs an analytic reference to resample the boundary."""
        if self.reference is None:
            raise InvalidParameterError("refining a scenario needs its analytic reference")
        grid = self.grid.refined(factor)
        b = soliton_fields(self.reference, grid.zeta_min, grid.tau)
        return self.replace(grid=grid, boundary=b, stride=self.stride * factor)


@dataclass(frozen=True, eq=False)
class SolutionGrids:
    """Stored slices indexed ``[zeta, tau]`` plus per-slice norm diagnostics."""

    params: PhysicalParams
    grid: SimulationGrid
    zeta: np.ndarray
    tau: np.ndarray
    omega_a: np.ndarray
    omega_b: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    norm_deviation: np.ndarray
    stride: int = 1
    scheme: str = SCHEME_VERSION

    @property
    def h_tau(self) -> float:
        return self.grid.h_tau

    @property
    def h_zeta(self) -> float:
        return self.grid.h_zeta * self.stride

    @property
    def fields(self) -> FieldPair:
        return FieldPair(self.omega_a, self.omega_b)

    @property
    def atoms(self) -> AtomState:
        return AtomState(self.psi1, self.psi2, self.psi3)

    def arrays(self) -> dict[str, np.ndarray]:
        return {"omega_a": self.omega_a, "omega_b": self.omega_b,
                "psi1": self.psi1, "psi2": self.psi2, "psi3": self.psi3}


def simulate(scenario: Scenario, threads: int = 1) -> SolutionGrids:
    """March the coupled system through the whole grid.

    On a non-finite value raises :class:`NumericalInstabilityError` carrying
    the slices computed so far and the last stable zeta.
    """
    g = scenario.grid
    stride = scenario.stride
    n_store = (g.n_zeta - 1) // stride + 1
    store = [np.zeros((n_store, g.n_tau), np.complex128) for _ in range(5)]
    norm_dev = np.full(g.n_zeta, np.nan)
    y = _scalar_state(scenario.atom_initial)
    march = _march(threads)
    status = march(np.ascontiguousarray(scenario.boundary.omega_a),
                   np.ascontiguousarray(scenario.boundary.omega_b),
                   y[0], y[1], y[2], scenario.params.nu0, scenario.params.gamma,
                   g.h_tau, g.h_zeta, g.n_zeta, stride, scenario.field_scheme == "euler",
                   *store, norm_dev)
    zeta = g.zeta[::stride]
    result = SolutionGrids(scenario.params, g, zeta, g.tau, *store, norm_dev, stride)
    if status >= 0:
        last = max(status - 1, 0)
        rows = last // stride + 1
        partial = SolutionGrids(scenario.params, g, zeta[:rows], g.tau,
                                *(a[:rows] for a in store), norm_dev[:last + 1], stride)
        raise NumericalInstabilityError(
            f"non-finite values at zeta slice {status}", index=status, partial=partial,
            last_stable_zeta=float(g.zeta[last]))
    return result
