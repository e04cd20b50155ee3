"""Residual suites, convention adjudication, trajectory measurement, convergence studies."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConventionError, GridError, InvalidParameterError
from .model import AtomState, FieldPair, PhysicalParams, SimulationGrid
from .modulation import ModulationProfile
from .soliton import (ADJUDICATED, ConventionVariant, SolitonSolution, all_variants, atomic_state,
                      rho_liouville, soliton_fields)
from .solver import SCHEME_VERSION, Scenario, SolutionGrids, simulate

MASK_THRESHOLD = 1e-6


@dataclass(frozen=True)
class ResidualEntry:
    equation: str
    max_abs: float
    l2: float
    h_zeta: float
    h_tau: float


@dataclass
class ResidualReport:
    entries: list[ResidualEntry] = field(default_factory=list)
    convention: str = ADJUDICATED.label

    def __getitem__(self, equation: str) -> ResidualEntry:
        for e in self.entries:
            if e.equation == equation:
                return e
        raise KeyError(equation)

    def extend(self, entries):
        self.entries.extend(entries)
        return self

    def to_dict(self) -> dict:
        return {"convention": self.convention, "entries": [asdict(e) for e in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"convention = {self.convention}"]
        for e in self.entries:
            lines.append(f"{e.equation}.max_abs = {e.max_abs!r}")
            lines.append(f"{e.equation}.l2 = {e.l2!r}")
        return "\n".join(lines) + "\n"


def _entry(name, r, h_zeta, h_tau) -> ResidualEntry:
    r = np.abs(np.asarray(r))
    if r.size == 0:
        return ResidualEntry(name, 0.0, 0.0, h_zeta, h_tau)
    return ResidualEntry(name, float(r.max()), float(np.sqrt(np.sum(r * r) * h_zeta * h_tau)), h_zeta, h_tau)


def _check_grid(*arrays):
    for a in arrays:
        if a.ndim != 2 or a.shape[0] < 3 or a.shape[1] < 3:
            raise GridError("residuals need at least a 3x3 grid")


# centered second-order stencils, evaluated on interior points [1:-1, 1:-1]

def _dz(u, h):
    return (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * h)


def _dt(u, h):
    return (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * h)


def _dzt(u, hz, ht):
    return (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4.0 * hz * ht)


def _in(u):
    return u[1:-1, 1:-1]


def residual_liouville(rho, k: float, h_zeta: float, h_tau: float) -> ResidualEntry:
    """``d_zeta d_tau rho + k exp(-2 rho)`` on interior points."""
    rho = np.asarray(rho, dtype=float)
    _check_grid(rho)
    return _entry("liouville", _dzt(rho, h_zeta, h_tau) + k * np.exp(-2.0 * _in(rho)), h_zeta, h_tau)


def residual_constraints(rho, eta, source, params: PhysicalParams, gamma: float,
                         h_zeta: float, h_tau: float) -> list[ResidualEntry]:
    """Constraint, auxiliary and dilaton relations.

    ``source`` is the dilaton source term (``dm/dtau`` for the soliton
    family), broadcastable to the grid.
    """
    rho = np.asarray(rho, dtype=float)
    eta = np.asarray(eta, dtype=float)
    _check_grid(rho, eta)
    k = params.k
    A = _in(np.broadcast_to(np.asarray(source, dtype=float), rho.shape))
    w = np.exp(-2.0 * rho)
    e_in, w_in = _in(eta), _in(w)
    eta_zt = _dzt(eta, h_zeta, h_tau)
    eta_z = _dz(eta, h_zeta)
    rho_t = _dt(rho, h_tau)
    r9 = eta_zt + rho_t * eta_z - k * w_in * e_in
    r10 = 4.0 * k * (_dt(w, h_tau) + gamma * w_in) + _dz(w, h_zeta) + _dz(eta * eta, h_zeta)
    r11a = _dzt(rho, h_zeta, h_tau) + k * w_in          # V'(eta)/4 = -k
    r11b = eta_zt + 2.0 * k * (A - e_in) * w_in         # V(eta)/2 = 2k (A - eta)
    rdc = eta_zt + 2.0 * rho_t * eta_z - 2.0 * k * A * w_in
    return [_entry("constraint", r9, h_zeta, h_tau),
            _entry("auxiliary", r10, h_zeta, h_tau),
            _entry("dilaton_zeta", r11a, h_zeta, h_tau),
            _entry("dilaton_tau", r11b, h_zeta, h_tau),
            _entry("dilaton_constraint", rdc, h_zeta, h_tau)]


def auxiliary_residual_field(rho, eta, params: PhysicalParams, gamma: float, h_zeta: float,
                             h_tau: float) -> np.ndarray:
    """Pointwise auxiliary-equation residual on interior points."""
    w = np.exp(-2.0 * np.asarray(rho, dtype=float))
    eta = np.asarray(eta, dtype=float)
    return (4.0 * params.k * (_dt(w, h_tau) + gamma * _in(w)) + _dz(w, h_zeta)
            + _dz(eta * eta, h_zeta))


def residual_mb(fields: FieldPair, atoms: AtomState, params: PhysicalParams,
                h_zeta: float, h_tau: float) -> list[ResidualEntry]:
    """Maxwell, Schroedinger, intensity-law and phase-law residuals.

    The phase law is checked only where ``|psi3|`` exceeds ``1e-6`` of its
    peak; it is undefined where the excited state is empty.
    """
    oa, ob = np.asarray(fields.omega_a), np.asarray(fields.omega_b)
    p1, p2, p3 = (np.asarray(a) for a in (atoms.psi1, atoms.psi2, atoms.psi3))
    _check_grid(oa, ob, p1)
    nu0, g = params.nu0, params.gamma
    ia, ib, i1, i2, i3 = (_in(x) for x in (oa, ob, p1, p2, p3))

    maxwell = np.maximum(np.abs(_dz(oa, h_zeta) - 1j * nu0 * i3 * np.conj(i1)),
                         np.abs(_dz(ob, h_zeta) - 1j * nu0 * i3 * np.conj(i2)))
    s1 = _dt(p1, h_tau) - 0.5j * np.conj(ia) * i3
    s2 = _dt(p2, h_tau) - 0.5j * np.conj(ib) * i3
    s3 = _dt(p3, h_tau) - (-0.5 * g * i3 + 0.5j * (ia * i1 + ib * i2))
    schrod = np.maximum(np.maximum(np.abs(s1), np.abs(s2)), np.abs(s3))

    n3 = np.abs(p3) ** 2
    intensity = (_dt(n3, h_tau) + g * _in(n3)
                 + _dz(np.abs(oa) ** 2 + np.abs(ob) ** 2, h_zeta) / (2.0 * nu0))

    peak3 = float(np.max(np.abs(p3), initial=0.0))
    mask = _in(np.abs(p3)) > MASK_THRESHOLD * peak3 if peak3 > 0 else np.zeros(i3.shape, bool)
    if np.any(mask):
        dphase = np.angle(p3[1:-1, 2:] * np.conj(p3[1:-1, :-2])) / (2.0 * h_tau)
        flux = np.imag(np.conj(ia) * _dz(oa, h_zeta) + np.conj(ib) * _dz(ob, h_zeta))
        phase_r = (dphase + flux / (2.0 * nu0 * np.abs(i3) ** 2))[mask]
    else:
        phase_r = np.zeros(0)
    return [_entry("maxwell", maxwell, h_zeta, h_tau),
            _entry("schrodinger", schrod, h_zeta, h_tau),
            _entry("mb_intensity", intensity, h_zeta, h_tau),
            _entry("mb_phase", phase_r, h_zeta, h_tau)]


def check_central(fields: FieldPair, atoms: AtomState, params: PhysicalParams,
                  threshold: float = MASK_THRESHOLD) -> list[ResidualEntry]:
    """Deviation from the central conditions on the masked grid.

    ``central_ratio``: ``|2k |Omega_a|^2 / (nu0 |psi3|^2) - 1|`` (postulated over
    actual excited population; linear in k).
    ``central_strong``: ``|i psi3 + Omega_a / (2|lambda - delta|)| / peak``; the
    factor i maps the dark-state frame to the frame where psi3 is real.
    """
    oa = np.asarray(fields.omega_a)
    p3 = np.asarray(atoms.psi3)
    peak = float(np.max(np.abs(oa), initial=0.0))
    mask = np.abs(oa) > threshold * peak
    if peak == 0 or not np.any(mask):
        raise InvalidParameterError("central-condition mask is empty (no probe field)")
    ratio = 2.0 * params.k * np.abs(oa[mask]) ** 2 / (params.nu0 * np.abs(p3[mask]) ** 2)
    lam = math.hypot(params.eps0, params.delta)
    strong = np.abs(1j * p3[mask] + oa[mask] / (2.0 * lam)) / (peak / (2.0 * lam))
    nan = float("nan")
    return [ResidualEntry("central_ratio", float(np.max(np.abs(ratio - 1.0))), nan, nan, nan),
            ResidualEntry("central_strong", float(np.max(strong)), nan, nan, nan)]


# -- analytic data on grids ------------------------------------------------------------

def analytic_grids(sol: SolitonSolution, grid: SimulationGrid, atoms: bool = True) -> SolutionGrids:
    """Analytic fields (and atoms) packaged like solver output."""
    Z, T = grid.mesh()
    f = soliton_fields(sol, Z, T)
    if atoms:
        st = atomic_state(sol, grid.zeta, grid.tau)
        p1, p2, p3 = (np.array(a) for a in (st.psi1, st.psi2, st.psi3))
        dev = np.max(np.abs(st.norm2 - 1.0), axis=1)
    else:
        p1 = p2 = p3 = np.full(grid.shape, np.nan + 0j)
        dev = np.full(grid.n_zeta, np.nan)
    return SolutionGrids(sol.params, grid, grid.zeta, grid.tau, np.array(f.omega_a), np.array(f.omega_b),
                         p1, p2, p3, dev, 1, "analytic")


def phi_window_grid(sol: SolitonSolution, tau_min: float, tau_max: float, phi_span: float,
                    n_tau: int, n_zeta: int) -> SimulationGrid:
    """Grid whose zeta extent makes the soliton phase cover ``[-phi_span, phi_span]``.

    Requires ``eps0 > 0``.
    """
    p = sol.params
    if p.eps0 <= 0:
        raise InvalidParameterError("phi_window_grid assumes eps0 > 0")
    c = 4.0 * p.k * p.eps0
    f_lo = p.eps0 * float(sol.profile.phase_integral(tau_min)) + sol.phi0
    f_hi = p.eps0 * float(sol.profile.phase_integral(tau_max)) + sol.phi0
    zeta_min = (f_hi - phi_span) / c
    zeta_max = (f_lo + phi_span) / c
    return SimulationGrid(tau_min, tau_max, n_tau, zeta_max, n_zeta, zeta_min=zeta_min)


def full_residual_report(sol: SolitonSolution, grid: SimulationGrid, gamma: float | None = None,
                         data: SolutionGrids | None = None) -> ResidualReport:
    """Every residual entry for the analytic solution on ``grid``."""
    data = data if data is not None else analytic_grids(sol, grid)
    g = sol.params.gamma if gamma is None else gamma
    Z, T = grid.mesh()
    lf = rho_liouville(sol, Z, T)
    _, dm = sol.profile.m(T)
    hz, ht = grid.h_zeta, grid.h_tau
    rep = ResidualReport(convention=sol.convention.label)
    rep.extend([residual_liouville(lf.rho, sol.params.k, hz, ht)])
    rep.extend(residual_constraints(lf.rho, lf.eta, dm, sol.params, g, hz, ht))
    rep.extend(residual_mb(data.fields, data.atoms, sol.params, hz, ht))
    rep.extend(check_central(data.fields, data.atoms, sol.params))
    return rep


# -- convention adjudication -----------------------------------------------------------

@dataclass
class Adjudication:
    variant: ConventionVariant
    report: ResidualReport
    scores: dict[str, tuple[float, float]]

    def to_dict(self):
        return {"variant": self.variant.to_dict(), "label": self.variant.label,
                "scores": {k: list(v) for k, v in self.scores.items()}, "report": self.report.to_dict()}


def _mb_score(sol, grid):
    data = analytic_grids(sol, grid)
    entries = residual_mb(data.fields, data.atoms, sol.params, grid.h_zeta, grid.h_tau)
    score = max(entries[0].max_abs, entries[1].max_abs)
    scale = float(np.max(np.abs(data.omega_a)))
    return score, scale, entries


def adjudicate_conventions(params: PhysicalParams, profile: ModulationProfile, grid: SimulationGrid,
                           phi0: float = 0.0, min_ratio: float = 3.0, rel_bound: float = 1e-2,
                           variants: Sequence[ConventionVariant] | None = None) -> Adjudication:
    """Pick the unique convention whose Maxwell + Schroedinger residuals vanish at O(h^2).

    A variant passes when its residual shrinks by at least ``min_ratio`` under
    one grid halving and ends below ``rel_bound`` times the probe peak.
    """
    fine = grid.refined(2)
    passing, scores, reports = [], {}, {}
    for v in (variants or all_variants()):
        sol = SolitonSolution(params, profile, phi0, v)
        r_h, scale, entries = _mb_score(sol, grid)
        r_h2, _, _ = _mb_score(sol, fine)
        scores[v.label] = (r_h, r_h2)
        reports[v.label] = entries
        if r_h2 <= r_h / min_ratio and r_h2 <= rel_bound * scale:
            passing.append(v)
    if not passing:
        raise ConventionError("no convention variant solves the Maxwell-Schroedinger system")
    if len(passing) > 1:
        raise ConventionError("ambiguous conventions: " + ", ".join(v.label for v in passing),
                              candidates=passing)
    v = passing[0]
    return Adjudication(v, ResidualReport(list(reports[v.label]), v.label), scores)


# -- trajectory ------------------------------------------------------------------------

@dataclass
class TrajectoryEstimate:
    tau: np.ndarray
    center: np.ndarray          # NaN where no interior peak
    velocity: np.ndarray        # NaN where the window lacks valid centers
    travel_distance: float
    uncertainty: float
    tau_start: float
    tau_end: float
    truncated: bool             # a requested endpoint had no interior peak (pulse off the grid)
    faded: bool = False         # a requested endpoint lies where the pulse is below the detection floor

    def to_dict(self):
        return {"travel_distance": self.travel_distance, "uncertainty": self.uncertainty,
                "tau_start": self.tau_start, "tau_end": self.tau_end, "truncated": self.truncated,
                "faded": self.faded}


DETECTION_FLOOR = 1e-6


def peak_centers(zeta: np.ndarray, omega_a: np.ndarray, rel_floor: float = DETECTION_FLOOR) -> np.ndarray:
    """Sub-grid zeta of the |Omega_a| maximum at every tau (quadratic interpolation).

    Columns whose peak is below ``rel_floor`` times the global peak are NaN:
    there the maximum is set by round-off rather than by the pulse.
    """
    a = np.abs(np.asarray(omega_a))
    nz, nt = a.shape
    h = (zeta[-1] - zeta[0]) / (nz - 1)
    idx = np.argmax(a, axis=0)
    cols = np.arange(nt)
    out = np.full(nt, np.nan)
    floor = rel_floor * float(a.max(initial=0.0))
    ok = (idx > 0) & (idx < nz - 1) & (a[idx, cols] > floor)
    i = idx[ok]
    c = cols[ok]
    fm, f0, fp = a[i - 1, c], a[i, c], a[i + 1, c]
    curv = fm - 2.0 * f0 + fp
    delta = np.where(curv < 0, 0.5 * (fm - fp) / np.where(curv < 0, curv, -1.0), 0.0)
    out[ok] = zeta[i] + delta * h
    return out


def windowed_velocity(tau: np.ndarray, center: np.ndarray, half_width: int) -> np.ndarray:
    """Least-squares slope of ``center`` over a sliding window of ``2*half_width+1`` samples."""
    n = tau.size
    v = np.full(n, np.nan)
    for j in range(n):
        lo, hi = max(0, j - half_width), min(n, j + half_width + 1)
        t, c = tau[lo:hi], center[lo:hi]
        good = np.isfinite(c)
        if hi - lo < 2 * half_width + 1 or not np.all(good):
            continue
        tc = t - t.mean()
        v[j] = float(np.dot(tc, c - c.mean()) / np.dot(tc, tc))
    return v


def measure_trajectory(data, tau_start: float | None = None, tau_end: float | None = None,
                       window: float = 0.25) -> TrajectoryEstimate:
    """Soliton-center trajectory, velocity and travel distance from field data.

    ``data`` needs ``zeta``, ``tau`` and ``omega_a`` (a :class:`SolutionGrids`
    works). The distance uncertainty is the gap to the estimate on every
    other zeta row. An endpoint past the point where the pulse fades below
    the detection floor falls back to the last detectable center and sets
    ``faded``; one where the pulse is off the grid sets ``truncated``.
    """
    zeta, tau = np.asarray(data.zeta), np.asarray(data.tau)
    oa = np.asarray(data.omega_a)
    center = peak_centers(zeta, oa)
    h_tau = (tau[-1] - tau[0]) / (tau.size - 1)
    half = max(1, int(round(0.5 * window / h_tau)))
    velocity = windowed_velocity(tau, center, half)
    valid = np.flatnonzero(np.isfinite(center))
    if valid.size == 0:
        raise InvalidParameterError("no interior soliton peak anywhere on the grid")
    column_peak = np.abs(oa).max(axis=0)
    dark = column_peak <= DETECTION_FLOOR * column_peak.max()
    truncated = faded = False

    def pick(t, default):
        nonlocal truncated, faded
        if t is None:
            return int(default)
        j = int(np.argmin(np.abs(tau - t)))
        if not np.isfinite(center[j]):
            if dark[j]:
                faded = True
            else:
                truncated = True
            j = int(valid[np.argmin(np.abs(valid - j))])
        return j

    j0 = pick(tau_start, valid[0])
    j1 = pick(tau_end, valid[-1])
    if valid[-1] < tau.size - 1 and tau_end is None and not dark[valid[-1] + 1:].all():
        truncated = True
    distance = float(center[j1] - center[j0])
    coarse = peak_centers(zeta[::2], oa[::2]) if zeta.size >= 5 else center
    if np.isfinite(coarse[j0]) and np.isfinite(coarse[j1]):
        uncertainty = abs(distance - float(coarse[j1] - coarse[j0]))
    else:
        uncertainty = float("inf")
    return TrajectoryEstimate(tau, center, velocity, distance, uncertainty,
                              float(tau[j0]), float(tau[j1]), truncated, faded)


# -- convergence -----------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    h_tau: list[float]
    h_zeta: list[float]
    errors: list[float]
    orders: list[float]
    self_orders: list[float]
    flagged: bool
    reason: str = ""

    def to_dict(self):
        return asdict(self)


def observed_orders(errors: Sequence[float]) -> list[float]:
    return [math.log2(errors[i] / errors[i + 1]) if errors[i + 1] > 0 and errors[i] > 0 else float("nan")
            for i in range(len(errors) - 1)]


def convergence_study(scenario: Scenario, levels: int = 3,
                      solver: Callable[[Scenario], SolutionGrids] = simulate,
                      floor: float = 1e-13) -> ConvergenceReport:
    """Run ``levels`` successively halved grids against the analytic reference.

    Errors are relative sup-norms of ``Omega_a`` and ``Omega_b`` on the points
    of the coarsest stored grid.  Non-monotone errors, or errors already at
    round-off, flag the report.
    """
    if levels < 3:
        raise InvalidParameterError("a convergence study needs at least 3 levels")
    if scenario.reference is None:
        raise InvalidParameterError("convergence study needs an analytic reference")
    sol = scenario.reference
    base = scenario.grid
    coarse_rows = base.zeta[::scenario.stride]
    ref = soliton_fields(sol, coarse_rows[:, None], base.tau[None, :])
    peak = float(np.max(np.abs(ref.omega_a)))
    errors, hts, hzs, samples = [], [], [], []
    sc = scenario
    for level in range(levels):
        if level:
            sc = sc.refined(2)
        out = solver(sc)
        step = 2 ** level
        a = np.asarray(out.omega_a)[:, ::step]
        b = np.asarray(out.omega_b)[:, ::step]
        samples.append((a, b))
        err = max(np.max(np.abs(a - ref.omega_a)), np.max(np.abs(b - ref.omega_b))) / peak
        errors.append(float(err))
        hts.append(sc.grid.h_tau)
        hzs.append(sc.grid.h_zeta)
    diffs = [max(np.max(np.abs(samples[i][0] - samples[i + 1][0])),
                 np.max(np.abs(samples[i][1] - samples[i + 1][1]))) / peak for i in range(levels - 1)]
    orders = observed_orders(errors)
    self_orders = observed_orders(diffs)
    reason = ""
    if max(errors) <= floor:
        reason = "errors at round-off floor; observed order meaningless"
    elif any(errors[i + 1] >= errors[i] for i in range(levels - 1)):
        reason = "errors do not decrease monotonically"
    return ConvergenceReport(hts, hzs, errors, orders, self_orders, bool(reason), reason)
