"""Physical parameters, unit normalization, grids and state containers.

All quantities live in the dimensionless normalization used throughout the
package: time in units of the pulse length, Rabi frequencies in MHz, and the
characteristic coordinate zeta in the short time unit ``l_p / c``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GridError, InvalidParameterError

SPEED_OF_LIGHT = 299_792_458.0  # m/s


def k_from_amplitude(nu0: float, eps0: float, delta: float = 0.0) -> float:
    """Constraint constant that makes the central condition exact.

    ``k = nu0 / (8 |lambda - delta|^2)`` with ``lambda = i eps0``.
    """
    denom = 8.0 * (eps0 * eps0 + delta * delta)
    if denom == 0.0:
        raise ZeroDivisionError("k is undefined for eps0 = delta = 0")
    return nu0 / denom


@dataclass(frozen=True)
class PhysicalParams:
    nu0: float = 4.5
    gamma: float = 0.0
    eps0: float = 3.0
    k: float = 0.0625
    delta: float = 0.0

    def __post_init__(self):
        for name in ("nu0", "gamma", "eps0", "k", "delta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.nu0 <= 0:
            raise InvalidParameterError(f"nu0 must be positive, got {self.nu0}")
        if self.k <= 0:
            raise InvalidParameterError(f"k must be positive, got {self.k}")
        if self.gamma < 0:
            raise InvalidParameterError(f"gamma must be non-negative, got {self.gamma}")
        if self.eps0 == 0:
            raise InvalidParameterError("eps0 must be nonzero")

    @classmethod
    def from_amplitude(cls, nu0=4.5, eps0=3.0, gamma=0.0, delta=0.0) -> "PhysicalParams":
        if eps0 == 0:
            raise InvalidParameterError("eps0 must be nonzero")
        return cls(nu0=nu0, gamma=gamma, eps0=eps0, k=k_from_amplitude(nu0, eps0, delta), delta=delta)

    @property
    def k_consistent(self) -> bool:
        """True when k matches the amplitude-derived value to round-off."""
        ref = k_from_amplitude(self.nu0, self.eps0, self.delta)
        return abs(self.k - ref) <= 4 * np.finfo(float).eps * ref

    def replace(self, **changes) -> "PhysicalParams":
        data = asdict(self)
        data.update(changes)
        return PhysicalParams(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalParams":
        return cls(**data)


def default_params() -> PhysicalParams:
    """Representative values: nu0=4.5, eps0=3, gamma=0, delta=0, k=1/16."""
    return PhysicalParams.from_amplitude(4.5, 3.0)


@dataclass(frozen=True)
class NormalizedUnits:
    """Output of :func:`normalize_units`.

    ``nu0`` is the dimensionless coupling; the SI scales are metadata only.
    """

    nu0: float
    omega0: float
    pulse_length_s: float
    group_velocity_m_s: float
    pulse_length_m: float
    zeta_unit_s: float

    @property
    def degenerate(self) -> bool:
        return self.nu0 == 0.0

    def params(self, eps0: float = 3.0, gamma: float = 0.0, delta: float = 0.0) -> PhysicalParams:
        if self.degenerate:
            raise InvalidParameterError("zero control field gives nu0 = 0; cannot drive dynamics")
        return PhysicalParams.from_amplitude(self.nu0, eps0, gamma, delta)


def normalize_units(omega0_mhz: float, pulse_length_us: float = 1.0,
                    vg_over_c: float = 1e-7) -> NormalizedUnits:
    """Dimensionless coupling for a control field of magnitude ``omega0_mhz``.

    The reference group velocity ``vg_over_c`` fixes the spatial unit
    ``l_p = v_g t_p``; zeta is measured in ``l_p / c``.
    """
    if not (pulse_length_us > 0 and math.isfinite(pulse_length_us)):
        raise InvalidParameterError(f"pulse length must be positive, got {pulse_length_us}")
    if omega0_mhz < 0:
        raise InvalidParameterError(f"control magnitude must be non-negative, got {omega0_mhz}")
    if not vg_over_c > 0:
        raise InvalidParameterError("reference group velocity must be positive")
    t_p = pulse_length_us * 1e-6
    v_g = vg_over_c * SPEED_OF_LIGHT
    l_p = v_g * t_p
    return NormalizedUnits(
        nu0=0.5 * omega0_mhz ** 2,
        omega0=float(omega0_mhz),
        pulse_length_s=t_p,
        group_velocity_m_s=v_g,
        pulse_length_m=l_p,
        zeta_unit_s=l_p / SPEED_OF_LIGHT,
    )


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform (zeta, tau) lattice; arrays are indexed ``[zeta, tau]``.

    ``zeta_min`` defaults to the medium entrance; analytic evaluations may use
    a negative value.
    """

    tau_min: float
    tau_max: float
    n_tau: int
    zeta_max: float
    n_zeta: int
    zeta_min: float = 0.0

    def __post_init__(self):
        if not self.tau_min < self.tau_max:
            raise GridError(f"need tau_min < tau_max, got {self.tau_min}, {self.tau_max}")
        if not self.zeta_max > self.zeta_min:
            raise GridError(f"need zeta_max > zeta_min, got {self.zeta_max}")
        if self.zeta_min == 0.0 and not self.zeta_max > 0:
            raise GridError("zeta_max must be positive")
        if int(self.n_tau) < 2 or int(self.n_zeta) < 2:
            raise GridError("grids need at least two points per axis")
        object.__setattr__(self, "n_tau", int(self.n_tau))
        object.__setattr__(self, "n_zeta", int(self.n_zeta))
        for name in ("tau_min", "tau_max", "zeta_max", "zeta_min"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def h_tau(self) -> float:
        return (self.tau_max - self.tau_min) / (self.n_tau - 1)

    @property
    def h_zeta(self) -> float:
        return (self.zeta_max - self.zeta_min) / (self.n_zeta - 1)

    @property
    def tau(self) -> np.ndarray:
        return np.linspace(self.tau_min, self.tau_max, self.n_tau)

    @property
    def zeta(self) -> np.ndarray:
        return np.linspace(self.zeta_min, self.zeta_max, self.n_zeta)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_zeta, self.n_tau)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(zeta, tau) broadcastable to :attr:`shape`."""
        return self.zeta[:, None], self.tau[None, :]

    def refined(self, factor: int = 2) -> "SimulationGrid":
        """Same window with every spacing divided by ``factor``."""
        return self.replace(n_tau=factor * (self.n_tau - 1) + 1,
                            n_zeta=factor * (self.n_zeta - 1) + 1)

    def replace(self, **changes) -> "SimulationGrid":
        data = asdict(self)
        data.update(changes)
        return SimulationGrid(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationGrid":
        return cls(**data)


def _frozen_complex(x) -> np.ndarray:
    arr = np.array(x, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


def _encode_complex(arr: np.ndarray):
    arr = np.asarray(arr)
    return {"shape": list(arr.shape), "re": arr.real.ravel().tolist(), "im": arr.imag.ravel().tolist()}


def _decode_complex(data) -> np.ndarray:
    re = np.array(data["re"], dtype=np.float64)
    im = np.array(data["im"], dtype=np.float64)
    out = np.empty(re.shape, dtype=np.complex128)
    out.real, out.imag = re, im  # re + 1j*im would not preserve signed zeros
    return out.reshape(data["shape"])


@dataclass(frozen=True)
class AtomState:
    """Amplitudes of levels |1>, |2>, |3>; scalars or equally shaped arrays."""

    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray

    def __post_init__(self):
        arrays = [_frozen_complex(getattr(self, n)) for n in ("psi1", "psi2", "psi3")]
        if len({a.shape for a in arrays}) != 1:
            raise InvalidParameterError("atom amplitudes must share a shape")
        for name, arr in zip(("psi1", "psi2", "psi3"), arrays):
            object.__setattr__(self, name, arr)

    @classmethod
    def dark(cls, shape=()) -> "AtomState":
        return cls(np.ones(shape), np.zeros(shape), np.zeros(shape))

    @property
    def norm2(self) -> np.ndarray:
        return abs(self.psi1) ** 2 + abs(self.psi2) ** 2 + abs(self.psi3) ** 2

    def to_dict(self) -> dict:
        return {n: _encode_complex(getattr(self, n)) for n in ("psi1", "psi2", "psi3")}

    @classmethod
    def from_dict(cls, data: dict) -> "AtomState":
        return cls(*(_decode_complex(data[n]) for n in ("psi1", "psi2", "psi3")))


@dataclass(frozen=True)
class FieldPair:
    """Probe (``omega_a``) and control-channel (``omega_b``) Rabi frequencies."""

    omega_a: np.ndarray
    omega_b: np.ndarray

    def __post_init__(self):
        a, b = _frozen_complex(self.omega_a), _frozen_complex(self.omega_b)
        if a.shape != b.shape:
            raise InvalidParameterError("field arrays must share a shape")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidParameterError("fields must be finite")
        object.__setattr__(self, "omega_a", a)
        object.__setattr__(self, "omega_b", b)

    def max_imag(self) -> float:
        return float(max(np.max(np.abs(self.omega_a.imag), initial=0.0),
                         np.max(np.abs(self.omega_b.imag), initial=0.0)))

    def to_dict(self) -> dict:
        return {"omega_a": _encode_complex(self.omega_a), "omega_b": _encode_complex(self.omega_b)}

    @classmethod
    def from_dict(cls, data: dict) -> "FieldPair":
        return cls(_decode_complex(data["omega_a"]), _decode_complex(data["omega_b"]))
