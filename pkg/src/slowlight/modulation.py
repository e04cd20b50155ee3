"""Modulation function m(tau), its phase integral, and the control field it induces.

A profile is an immutable object exposing ``m(tau) -> (m, dm/dtau)`` and
``integral(a, b)`` of ``1/(m^2 + 1)``.  The control field follows from m
through a linear law ``Omega = (a m' + b eps0 m) / (m^2 + 1)``; the default
law is the literal background-field formula (a = 1/2, b = -2).  The inverse
problem (recovering m from a sampled control) is a Riccati equation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, FiniteEscapeError, InvalidParameterError, NoRealRootError, QuadratureError

LN2 = math.log(2.0)
ESCAPE_BOUND = 1e12


# -- quadrature ------------------------------------------------------------------------

def adaptive_simpson(f, a: float, b: float, rtol: float = 1e-10, max_depth: int = 40,
                     atol: float = 1e-15) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    Raises :class:`QuadratureError` when a subinterval still misses its
    tolerance at ``max_depth``.
    """
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    tol = max(rtol * abs(whole), atol)
    worst = [0.0]

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth >= max_depth:
            worst[0] = max(worst[0], abs(delta) / 15.0)
            return left + right + delta / 15.0
        return (recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)
                + recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1))

    result = recurse(a, fa, 0.5 * (a + b), fm, b, fb, whole, tol, 0)
    if worst[0] > 0.0:
        raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]",
                              achieved=worst[0] / max(abs(result), 1e-300))
    return result


# -- profiles --------------------------------------------------------------------------

class ModulationProfile:
    """Base class; subclasses implement ``_m``, ``_integral`` and ``domain``."""

    kind = "abstract"

    @property
    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def tau_ref(self) -> float:
        """Point where the phase integral vanishes: 0 if inside the domain."""
        lo, hi = self.domain
        return 0.0 if lo <= 0.0 <= hi else lo

    def _check(self, tau) -> np.ndarray:
        t = np.asarray(tau, dtype=float)
        lo, hi = self.domain
        if not np.all(np.isfinite(t)) or np.any(t < lo) or np.any(t > hi):
            raise DomainError(f"tau outside profile domain [{lo}, {hi}]")
        return t

    def m(self, tau):
        t = self._check(tau)
        m, dm = self._m(t)
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(dm))):
            raise DomainError("m(tau) overflows at the requested tau")
        return m, dm

    def integral(self, a: float, b: float) -> float:
        """Integral of ``1/(m^2+1)`` from a to b."""
        self._check([a, b])
        return self._integral(float(a), float(b))

    def phase_integral(self, tau):
        """F(tau) with F(tau_ref) = 0; vectorized over ``tau``."""
        t = self._check(tau)
        if t.ndim == 0:
            return self._integral(self.tau_ref, float(t))
        return self._cumulative(t)

    def _cumulative(self, t: np.ndarray) -> np.ndarray:
        flat = t.ravel()
        order = np.argsort(flat, kind="stable")
        ts = flat[order]
        out = np.empty_like(ts)
        out[0] = self._integral(self.tau_ref, float(ts[0]))
        for i in range(1, ts.size):
            out[i] = out[i - 1] + self._integral(float(ts[i - 1]), float(ts[i]))
        result = np.empty_like(flat)
        result[order] = out
        return result.reshape(t.shape)

    def integrand(self, tau):
        m, _ = self.m(tau)
        return 1.0 / (m * m + 1.0)


@dataclass(frozen=True)
class Constant(ModulationProfile):
    m0: float
    kind = "constant"

    def __post_init__(self):
        if not math.isfinite(self.m0):
            raise InvalidParameterError("m0 must be finite")
        object.__setattr__(self, "m0", float(self.m0))

    def _m(self, t):
        return np.full_like(t, self.m0), np.zeros_like(t)

    def _integral(self, a, b):
        return (b - a) / (self.m0 * self.m0 + 1.0)

    def phase_integral(self, tau):
        t = self._check(tau)
        return t / (self.m0 * self.m0 + 1.0)


@dataclass(frozen=True)
class Exponential(ModulationProfile):
    """``m = exp(alpha tau)``: the control decays as a sech pulse."""

    alpha: float
    kind = "exponential"

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))

    def _m(self, t):
        with np.errstate(over="ignore"):
            m = np.exp(self.alpha * t)
        return m, self.alpha * m

    def _primitive(self, t):
        # tau - ln((1 + e^{2 alpha tau}) / 2) / (2 alpha), stable for either sign of tau
        return t - (np.logaddexp(0.0, 2.0 * self.alpha * t) - LN2) / (2.0 * self.alpha)

    def _integral(self, a, b):
        return float(self._primitive(b) - self._primitive(a))

    def phase_integral(self, tau):
        return self._primitive(self._check(tau))


@dataclass(frozen=True)
class PiecewiseSmooth(ModulationProfile):
    """Profiles stitched on contiguous intervals ``(start, end, profile)``.

    Only value continuity is enforced; a jump in dm/dtau shows up as a jump
    of the control field.
    """

    pieces: tuple
    rtol: float = 1e-9
    kind = "piecewise"

    def __post_init__(self):
        pieces = tuple((float(s), float(e), p) for s, e, p in self.pieces)
        if not pieces:
            raise InvalidParameterError("piecewise profile needs at least one piece")
        for s, e, p in pieces:
            if not s < e:
                raise InvalidParameterError(f"empty interval [{s}, {e}]")
            lo, hi = p.domain
            if s < lo or e > hi:
                raise InvalidParameterError(f"piece [{s}, {e}] exceeds its profile's domain")
        for (s0, e0, p0), (s1, e1, p1) in zip(pieces, pieces[1:]):
            if e0 != s1:
                raise InvalidParameterError(f"pieces must be contiguous, gap at {e0} / {s1}")
            left = float(p0.m(e0)[0])
            right = float(p1.m(s1)[0])
            if abs(left - right) > self.rtol * max(1.0, abs(left), abs(right)):
                raise InvalidParameterError(
                    f"m is discontinuous at tau={e0}: {left} vs {right}")
        object.__setattr__(self, "pieces", pieces)

    @property
    def domain(self):
        return (self.pieces[0][0], self.pieces[-1][1])

    @property
    def junctions(self) -> list[float]:
        return [p[0] for p in self.pieces[1:]]

    def _index(self, t):
        starts = np.array([p[0] for p in self.pieces[1:]])
        return np.searchsorted(starts, t, side="right")

    def _m(self, t):
        idx = self._index(t)
        m = np.empty_like(t)
        dm = np.empty_like(t)
        for i, (_, _, prof) in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                m[sel], dm[sel] = prof._m(t[sel])
        return m, dm

    def _integral(self, a, b):
        if b < a:
            return -self._integral(b, a)
        total = 0.0
        for s, e, prof in self.pieces:
            lo, hi = max(a, s), min(b, e)
            if lo < hi:
                total += prof._integral(lo, hi)
        return total


@dataclass(frozen=True, eq=False)
class FromControl(ModulationProfile):
    """m sampled on a uniform grid with exact node slopes, Hermite-interpolated."""

    tau_nodes: np.ndarray
    m_nodes: np.ndarray
    dm_nodes: np.ndarray
    rtol: float = 1e-10
    kind = "from_control"

    def __post_init__(self):
        for name in ("tau_nodes", "m_nodes", "dm_nodes"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_spline",
                           CubicHermiteSpline(self.tau_nodes, self.m_nodes, self.dm_nodes))

    @property
    def domain(self):
        return (float(self.tau_nodes[0]), float(self.tau_nodes[-1]))

    def _m(self, t):
        return self._spline(t), self._spline(t, 1)

    def _integral(self, a, b):
        spline = self._spline

        def f(s):
            m = float(spline(s))
            return 1.0 / (m * m + 1.0)

        return adaptive_simpson(f, a, b, rtol=self.rtol)


# -- module-level operations -----------------------------------------------------------

def m_eval(profile: ModulationProfile, tau):
    """``(m, dm/dtau)`` at ``tau``."""
    return profile.m(tau)


def phase_integral(profile: ModulationProfile, tau):
    """``F(tau) = int_ref^tau ds / (m(s)^2 + 1)``."""
    return profile.phase_integral(tau)


def switch_off_profile(alpha: float, m0: float = 1.0) -> PiecewiseSmooth:
    """Constant background for tau < 0 continued by ``m0 exp(alpha tau)``."""
    if m0 != 1.0:
        raise InvalidParameterError("only m0 = 1 joins exp(alpha tau) continuously")
    return PiecewiseSmooth(((-math.inf, 0.0, Constant(m0)), (0.0, math.inf, Exponential(alpha))))


@dataclass(frozen=True)
class ControlLaw:
    """``Omega = (a dm/dtau + b eps0 m) / (m^2 + 1)``."""

    a: float = 0.5
    b: float = -2.0

    def __post_init__(self):
        if self.a == 0:
            raise InvalidParameterError("control law needs a nonzero derivative coefficient")

    def omega(self, m, dm, eps0):
        return (self.a * dm + self.b * eps0 * m) / (m * m + 1.0)

    def riccati_rhs(self, m, omega, eps0):
        return (omega * (m * m + 1.0) - self.b * eps0 * m) / self.a


LITERAL_LAW = ControlLaw(0.5, -2.0)


def control_field(profile: ModulationProfile, eps0: float, tau, law: ControlLaw = LITERAL_LAW):
    """Background control field induced by the modulation."""
    m, dm = profile.m(tau)
    return law.omega(m, dm, eps0)


class RiccatiRoots(NamedTuple):
    eit: float
    other: float
    degenerate: bool = False


def riccati_match_constant(omega0: float, eps0: float, law: ControlLaw = LITERAL_LAW) -> RiccatiRoots:
    """Constant m reproducing a constant control ``omega0``.

    Solves ``omega0 m^2 - b eps0 m + omega0 = 0``; the EIT root is the one
    with ``|m| >= 1`` (the two roots are reciprocal).
    """
    if omega0 == 0:
        return RiccatiRoots(0.0, 0.0, degenerate=True)
    A, B, C = omega0, -law.b * eps0, omega0
    disc = B * B - 4.0 * A * C
    if disc < 0:
        raise NoRealRootError(
            f"no constant-background soliton: |Omega0|={abs(omega0)} exceeds the bound set by eps0={eps0}")
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    r1 = q / A
    r2 = C / q
    if abs(r1) >= abs(r2):
        return RiccatiRoots(r1, r2)
    return RiccatiRoots(r2, r1)


# -- control waveforms -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ControlWaveform:
    tau: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float)
        omega = np.array(self.omega, dtype=float)
        if tau.ndim != 1 or tau.shape != omega.shape or tau.size < 2:
            raise InvalidParameterError("waveform needs matching 1-D tau and omega with >= 2 samples")
        if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(omega))):
            raise InvalidParameterError("waveform samples must be finite")
        steps = np.diff(tau)
        h = (tau[-1] - tau[0]) / (tau.size - 1)
        if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(abs(h), np.max(np.abs(tau))):
            raise InvalidParameterError("waveform spacing must be uniform and positive")
        tau.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "omega", omega)

    @property
    def h(self) -> float:
        return float((self.tau[-1] - self.tau[0]) / (self.tau.size - 1))

    @classmethod
    def sample(cls, func, tau_min, tau_max, n) -> "ControlWaveform":
        tau = np.linspace(tau_min, tau_max, n)
        return cls(tau, func(tau))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "omega"])
            for t, o in zip(self.tau, self.omega):
                w.writerow([repr(float(t)), repr(float(o))])

    @classmethod
    def from_csv(cls, path) -> "ControlWaveform":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["tau", "omega"]:
            raise InvalidParameterError(f"{path}: expected header 'tau,omega'")
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        return cls(data[:, 0], data[:, 1])


def midpoint_values(values: np.ndarray) -> np.ndarray:
    """Cubic (4-point Lagrange) interpolation to the interval midpoints.

    One-sided stencils at the ends; linear when fewer than 4 samples.
    """
    v = np.asarray(values)
    n = v.shape[-1]
    if n < 4:
        return 0.5 * (v[..., :-1] + v[..., 1:])
    out = np.empty(v.shape[:-1] + (n - 1,), dtype=np.result_type(v, float))
    out[..., 1:-1] = (-v[..., :-3] + 9.0 * v[..., 1:-2] + 9.0 * v[..., 2:-1] - v[..., 3:]) / 16.0
    out[..., 0] = (5.0 * v[..., 0] + 15.0 * v[..., 1] - 5.0 * v[..., 2] + v[..., 3]) / 16.0
    out[..., -1] = (v[..., -4] - 5.0 * v[..., -3] + 15.0 * v[..., -2] + 5.0 * v[..., -1]) / 16.0
    return out


def profile_from_control(waveform: ControlWaveform, m_initial: float, eps0: float,
                         law: ControlLaw = LITERAL_LAW) -> FromControl:
    """Integrate the Riccati equation ``m' = (Omega (m^2+1) - b eps0 m) / a``.

    Classic RK4 on the waveform grid, midpoint controls by cubic
    interpolation. The forward problem is unstable wherever
    ``d(m')/dm > 0``; initial-data errors grow accordingly.
    """
    tau, omega = waveform.tau, waveform.omega
    h = waveform.h
    mid = midpoint_values(omega)
    n = tau.size
    m = np.empty(n)
    m[0] = float(m_initial)
    rhs = law.riccati_rhs
    for j in range(n - 1):
        y = m[j]
        k1 = rhs(y, omega[j], eps0)
        k2 = rhs(y + 0.5 * h * k1, mid[j], eps0)
        k3 = rhs(y + 0.5 * h * k2, mid[j], eps0)
        k4 = rhs(y + h * k3, omega[j + 1], eps0)
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not (math.isfinite(y) and abs(y) <= ESCAPE_BOUND):
            raise FiniteEscapeError(f"m escapes to infinity near tau={tau[j + 1]}", tau_escape=float(tau[j + 1]))
        m[j + 1] = y
    dm = rhs(m, omega, eps0)
    return FromControl(tau, m, dm)
