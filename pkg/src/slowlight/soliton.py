"""Exact slow-light soliton family and its derived quantities.

For a modulation m(tau) and amplitude eps0 the probe field is

    Omega_a = 2 eps0 sech(phi) / sqrt(m^2 + 1),
    phi     = -4 k eps0 zeta + eps0 F(tau) + phi0,

and the control-channel field ``Omega_b`` depends on a sign/form convention
(:class:`ConventionVariant`).  Only one of the eight enumerated variants
actually solves the Maxwell-Schroedinger system; it is selected numerically
by :func:`slowlight.verify.adjudicate_conventions` and stored here as
:data:`ADJUDICATED`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import InsufficientAsymptoteError, InvalidParameterError, NoStopError, SingularityError
from .model import AtomState, FieldPair, PhysicalParams
from .modulation import Constant, ControlLaw, Exponential, ModulationProfile

LN2 = math.log(2.0)
DARK_PHASE = 36.0  # |phi| beyond which sech(phi) < 1e-15


@dataclass(frozen=True)
class ConventionVariant:
    """How ``Omega_b`` and ``psi3`` are read off the analytic family.

    eta_source
        ``"closed_form"``: ``Omega_b = (2 eps0 m tanh(phi) + m'/2) / (m^2+1)``;
        ``"from_eta"``: ``Omega_b = 2 (m' - m d_tau rho)``, i.e.
        ``(2 m' - 2 eps0 m tanh(phi)) / (m^2+1)``.
    tanh_sign
        Multiplies the tanh term of the chosen form.
    psi3_sign
        ``psi3 = psi3_sign * (-Omega_a / (2|eps0|))`` in the frame where psi3 is
        real; in the dark-state frame used here (psi1 -> 1 ahead of the pulse)
        that frame is rotated by ``-i``.
    """

    eta_source: str = "from_eta"
    tanh_sign: int = 1
    psi3_sign: int = 1

    def __post_init__(self):
        if self.eta_source not in ("from_eta", "closed_form"):
            raise InvalidParameterError(f"unknown eta source {self.eta_source!r}")
        if self.tanh_sign not in (1, -1) or self.psi3_sign not in (1, -1):
            raise InvalidParameterError("signs must be +1 or -1")

    @property
    def _tanh_coeff(self) -> float:
        return (2.0 if self.eta_source == "closed_form" else -2.0) * self.tanh_sign

    @property
    def _dm_coeff(self) -> float:
        return 0.5 if self.eta_source == "closed_form" else 2.0

    def omega_b(self, m, dm, eps0, tanh_phi):
        return (self._tanh_coeff * eps0 * m * tanh_phi + self._dm_coeff * dm) / (m * m + 1.0)

    def background_law(self, tanh_limit: int) -> ControlLaw:
        """Control law of ``Omega_b`` where ``tanh(phi) -> tanh_limit``."""
        return ControlLaw(self._dm_coeff, self._tanh_coeff * tanh_limit)

    @property
    def label(self) -> str:
        return f"{self.eta_source}/tanh{self.tanh_sign:+d}/psi3{self.psi3_sign:+d}"

    def to_dict(self) -> dict:
        return {"eta_source": self.eta_source, "tanh_sign": self.tanh_sign, "psi3_sign": self.psi3_sign}


def all_variants() -> list[ConventionVariant]:
    return [ConventionVariant(src, t, p) for src, t, p in product(("closed_form", "from_eta"), (1, -1), (1, -1))]


STATED_FORM = ConventionVariant("closed_form", 1, 1)
ADJUDICATED = ConventionVariant("from_eta", 1, 1)


@dataclass(frozen=True)
class SolitonSolution:
    """One member of the soliton family.

    With ``liouville_only=True`` the constraint constant ``k`` may be chosen
    freely; the result then solves the reduced Liouville system but not the
    full Maxwell-Schroedinger dynamics.
    """

    params: PhysicalParams
    profile: ModulationProfile
    phi0: float = 0.0
    convention: ConventionVariant = ADJUDICATED
    liouville_only: bool = False

    def __post_init__(self):
        if not self.liouville_only and not self.params.k_consistent:
            raise InvalidParameterError(
                "k differs from nu0/(8(eps0^2+delta^2)); pass liouville_only=True to override")
        object.__setattr__(self, "phi0", float(self.phi0))

    @property
    def maxwell_bloch_consistent(self) -> bool:
        return not self.liouville_only or self.params.k_consistent

    @property
    def ahead_sign(self) -> int:
        """Limit of tanh(phi) ahead of the pulse (early tau)."""
        return -1 if self.params.eps0 > 0 else 1

    def ahead_law(self) -> ControlLaw:
        return self.convention.background_law(self.ahead_sign)

    def with_convention(self, convention: ConventionVariant) -> "SolitonSolution":
        return SolitonSolution(self.params, self.profile, self.phi0, convention, self.liouville_only)


def _sech(x):
    ax = np.abs(x)
    e = np.exp(-ax)
    return 2.0 * e / (1.0 + e * e)


def phase(sol: SolitonSolution, zeta, tau):
    """Soliton phase ``phi(zeta, tau)``."""
    p = sol.params
    return -4.0 * p.k * p.eps0 * np.asarray(zeta, dtype=float) + p.eps0 * sol.profile.phase_integral(tau) + sol.phi0


def _fields_from(sol, zeta, m, dm, F):
    p = sol.params
    phi = -4.0 * p.k * p.eps0 * zeta + p.eps0 * F + sol.phi0
    s = 1.0 / np.hypot(m, 1.0)
    omega_a = 2.0 * p.eps0 * s * _sech(phi)
    omega_b = sol.convention.omega_b(m, dm, p.eps0, np.tanh(phi))
    return omega_a, omega_b


def soliton_fields(sol: SolitonSolution, zeta, tau) -> FieldPair:
    """Analytic ``Omega_a``, ``Omega_b``; ``zeta`` and ``tau`` broadcast."""
    zeta = np.asarray(zeta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    m, dm = sol.profile.m(tau)
    F = sol.profile.phase_integral(tau)
    a, b = _fields_from(sol, zeta, m, dm, F)
    a, b = np.broadcast_arrays(a, b)
    return FieldPair(a, b)


def background_field(sol: SolitonSolution, tau, side: str = "ahead"):
    """Asymptotic ``Omega_b`` ahead of (``tanh -> ahead_sign``) or behind the pulse."""
    sign = sol.ahead_sign if side == "ahead" else -sol.ahead_sign
    m, dm = sol.profile.m(tau)
    return sol.convention.background_law(sign).omega(m, dm, sol.params.eps0)


def soliton_center(sol: SolitonSolution, tau):
    """Position where ``phi = 0``."""
    p = sol.params
    return (p.eps0 * sol.profile.phase_integral(tau) + sol.phi0) / (4.0 * p.k * p.eps0)


class LiouvilleFields(NamedTuple):
    rho: np.ndarray
    eta: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray


def rho_liouville(sol: SolitonSolution, zeta, tau) -> LiouvilleFields:
    """Liouville representation ``|Omega_a| = exp(-rho)``, ``eta = Omega_b``.

    ``rho`` is built from the chiral functions ``A_+(zeta)``, ``A_-(tau)``;
    the logarithm is evaluated in log space so it stays finite far out in
    the tails where the A's themselves overflow.
    """
    p = sol.params
    eps0, k = p.eps0, p.k
    zeta = np.asarray(zeta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    m, dm = sol.profile.m(tau)
    F = sol.profile.phase_integral(tau)
    s2 = 1.0 / (m * m + 1.0)

    # A+ = -(1/k) e^{-8 eps0 k zeta},  A- = e^{2 eps0 F + 2 phi0}
    log_ap = -8.0 * eps0 * k * zeta - math.log(k)
    log_am = 2.0 * eps0 * F + 2.0 * sol.phi0
    sign_product = np.sign(8.0 * eps0) * np.sign(2.0 * eps0)
    if sign_product <= 0:
        raise SingularityError("non-positive argument in the Liouville logarithm")
    log_dap = math.log(8.0 * abs(eps0)) - 8.0 * eps0 * k * zeta
    log_dam = math.log(2.0 * abs(eps0)) + np.log(s2) + log_am
    # 1 - k A+ A- = 1 + exp(log k + log|A+| + log A-)
    log_denom = np.logaddexp(0.0, math.log(k) + log_ap + log_am)
    rho = -0.5 * (log_dap + log_dam - 2.0 * log_denom)

    with np.errstate(over="ignore"):
        a_plus = -np.exp(log_ap)
        a_minus = np.exp(log_am)
    _, eta = _fields_from(sol, zeta, m, dm, F)
    rho, eta, a_plus, a_minus = np.broadcast_arrays(rho, eta, a_plus, a_minus)
    return LiouvilleFields(rho, np.real(eta), a_plus, a_minus)


def psi3_central(sol: SolitonSolution, omega_a):
    """Excited amplitude from the strong central condition, dark-state frame."""
    return sol.convention.psi3_sign * 1j * np.asarray(omega_a) / (2.0 * abs(sol.params.eps0))


def _lead_in_start(sol: SolitonSolution, zeta_min: float, tau0: float) -> float | None:
    """Earliest tau needed so the pulse is absent (|phi| >= DARK_PHASE) at every zeta."""
    p = sol.params
    sgn = 1.0 if p.eps0 > 0 else -1.0
    ae = abs(p.eps0)
    target = (-DARK_PHASE + 4.0 * p.k * ae * zeta_min - sgn * sol.phi0) / ae
    prof = sol.profile
    if float(prof.phase_integral(tau0)) <= target:
        return None
    lo_dom = prof.domain[0]
    step = 1.0
    lo = tau0
    while True:
        cand = tau0 - step
        if cand < lo_dom:
            if math.isfinite(lo_dom) and float(prof.phase_integral(lo_dom)) <= target:
                cand = lo_dom
            else:
                raise InsufficientAsymptoteError(
                    "profile domain does not reach the dark-state asymptote")
        if float(prof.phase_integral(cand)) <= target:
            break
        lo = cand
        step *= 2.0
        if step > 1e9:
            raise InsufficientAsymptoteError("phase integral is bounded below; no dark asymptote")
    return brentq(lambda t: float(prof.phase_integral(t)) - target, cand, lo, xtol=1e-12)


def atomic_state(sol: SolitonSolution, zeta, tau, chunk: int = 256) -> AtomState:
    """Atomic amplitudes on ``zeta`` (1-D) x ``tau`` (1-D, uniform, increasing).

    ``psi3`` comes from the central condition; ``psi1``, ``psi2`` are
    integrated along tau with classic RK4 (exact analytic midpoint fields)
    from the dark state ``(1, 0, 0)``.  When the tau window does not start
    in the dark region an integration lead-in is prepended automatically.
    Returns arrays of shape ``(len(zeta), len(tau))``.
    """
    p = sol.params
    if p.gamma != 0.0:
        raise InvalidParameterError("the exact soliton requires gamma = 0")
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.ndim != 1 or zeta.ndim != 1:
        raise InvalidParameterError("atomic_state expects 1-D zeta and tau samples")
    if tau.size == 1:
        h = 0.005 / max(abs(p.eps0), 1.0)
    else:
        h = (tau[-1] - tau[0]) / (tau.size - 1)
        if h <= 0 or not np.allclose(np.diff(tau), h, rtol=1e-9, atol=1e-12):
            raise InvalidParameterError("tau samples must be uniform and increasing")

    start = _lead_in_start(sol, float(zeta.min()), float(tau[0]))
    if start is None:
        omega_a0 = soliton_fields(sol, zeta, tau[0]).omega_a
        m_w, _ = sol.profile.m(tau)
        peak = 2.0 * abs(p.eps0) * float(np.max(1.0 / np.hypot(m_w, 1.0)))  # sech envelope scale
        if np.max(np.abs(omega_a0)) > 1e-8 * peak:
            raise InsufficientAsymptoteError("tau window starts inside the pulse")
        n_lead = 0
    else:
        n_lead = int(math.ceil((tau[0] - start) / h))
    full = tau[0] + h * np.arange(-n_lead, tau.size)
    if tau.size == 1 and n_lead == 0:
        full = tau.copy()
    fine = np.empty(2 * full.size - 1)
    fine[0::2] = full
    fine[1::2] = 0.5 * (full[:-1] + full[1:])
    m, dm = sol.profile.m(fine)
    F = sol.profile.phase_integral(fine)

    out = [np.empty((zeta.size, tau.size), dtype=complex) for _ in range(3)]
    for c0 in range(0, zeta.size, chunk):
        z = zeta[c0:c0 + chunk, None]
        oa, ob = _fields_from(sol, z, m[None, :], dm[None, :], F[None, :])
        p3 = psi3_central(sol, oa)
        f1 = 0.5j * np.conj(oa) * p3
        f2 = 0.5j * np.conj(ob) * p3
        # RK4 with a state-independent right-hand side: Simpson increments
        inc1 = h / 6.0 * (f1[:, 0:-2:2] + 4.0 * f1[:, 1::2] + f1[:, 2::2])
        inc2 = h / 6.0 * (f2[:, 0:-2:2] + 4.0 * f2[:, 1::2] + f2[:, 2::2])
        psi1 = np.concatenate([np.ones((z.shape[0], 1)), 1.0 + np.cumsum(inc1, axis=1)], axis=1)
        psi2 = np.concatenate([np.zeros((z.shape[0], 1)), np.cumsum(inc2, axis=1)], axis=1)
        out[0][c0:c0 + chunk] = psi1[:, n_lead:]
        out[1][c0:c0 + chunk] = psi2[:, n_lead:]
        out[2][c0:c0 + chunk] = p3[:, 0::2][:, n_lead:]
    return AtomState(*out)


class Velocity(NamedTuple):
    v: np.ndarray
    lab_over_c: np.ndarray


def group_velocity(sol: SolitonSolution, tau) -> Velocity:
    """``dzeta/dtau = 1 / (4k (m^2+1))``; ``lab_over_c`` is ``dz/dt / c = v/(1+v)``."""
    m, _ = sol.profile.m(tau)
    v = 1.0 / (4.0 * sol.params.k * (m * m + 1.0))
    return Velocity(v, v / (1.0 + v))


def eit_velocity(omega0: float, nu0: float) -> float:
    """Linear-theory group velocity ``omega0^2 / (2 nu0)`` (units of the reference scale)."""
    if nu0 <= 0:
        raise InvalidParameterError("nu0 must be positive")
    return omega0 * omega0 / (2.0 * nu0)


def stopping_distance(profile: ModulationProfile, k: float, tail: float = 1e-14,
                      max_horizon: float = 1e6) -> float:
    """Travel distance after tau = 0: ``(1/4k) int_0^inf dtau / (m^2+1)``."""
    if k <= 0:
        raise InvalidParameterError("k must be positive")
    if isinstance(profile, Exponential):
        return LN2 / (8.0 * profile.alpha * k)
    if isinstance(profile, Constant):
        raise NoStopError("constant modulation never stops the soliton",
                          tail_estimate=1.0 / (profile.m0 ** 2 + 1.0))
    hi_dom = profile.domain[1]
    horizon = 1.0
    while True:
        T = min(horizon, hi_dom)
        g = float(profile.integrand(T))
        if g < tail:
            return profile.integral(0.0, T) / (4.0 * k)
        if T >= hi_dom or horizon >= max_horizon:
            raise NoStopError(
                f"integrand still {g:.3e} at tau={T}; distance diverges or is not resolved",
                tail_estimate=g * T)
        horizon *= 2.0
