"""Run configuration: a small TOML schema, validated before anything runs.

Example::

    name = "soliton"
    mode = "simulate"              # analytic | simulate | verify | stopping | convergence

    [params]
    nu0 = 4.5
    eps0 = 3.0
    gamma = 0.0
    k = "auto"                     # or a number (then liouville_only = true)

    [profile]
    kind = "constant"              # constant | constant_control | exponential | switch_off | control_csv
    m0 = -1.0

    [grid]
    tau_min = -14.0
    tau_max = 6.0
    zeta_max = 6.0                 # n_tau, n_zeta, stride default to the step rule

See README.md for every key.
"""

from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, NoRealRootError, SlowLightError
from .model import PhysicalParams, SimulationGrid, k_from_amplitude
from .modulation import (Constant, ControlWaveform, Exponential, ModulationProfile,
                         profile_from_control, riccati_match_constant, switch_off_profile)
from .soliton import ADJUDICATED, SolitonSolution
from .solver import default_steps

MODES = ("analytic", "simulate", "verify", "stopping", "convergence")
FORMATS = ("binary", "csv", "plot", "json")
PROFILE_KEYS = {
    "constant": ("m0",),
    "constant_control": ("omega0",),
    "exponential": ("alpha",),
    "switch_off": ("alpha",),
    "control_csv": ("control_csv", "m_initial"),
}


@dataclass(frozen=True)
class ProfileSpec:
    kind: str = "constant"
    m0: float | None = -1.0
    alpha: float | None = None
    omega0: float | None = None
    control_csv: str | None = None
    m_initial: float | None = None
    phi0: float = 0.0

    def build(self, eps0: float, base_dir: Path | None = None) -> ModulationProfile:
        law = ADJUDICATED.background_law(-1 if eps0 > 0 else 1)
        if self.kind == "constant":
            return Constant(self.m0)
        if self.kind == "constant_control":
            roots = riccati_match_constant(self.omega0, eps0, law)
            return Constant(roots.eit)
        if self.kind == "exponential":
            return Exponential(self.alpha)
        if self.kind == "switch_off":
            return switch_off_profile(self.alpha)
        path = Path(self.control_csv)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return profile_from_control(ControlWaveform.from_csv(path), self.m_initial, eps0, law)


@dataclass(frozen=True)
class GridSpec:
    tau_min: float = -14.0
    tau_max: float = 6.0
    zeta_max: float = 6.0
    zeta_min: float = 0.0
    n_tau: int | None = None
    n_zeta: int | None = None
    stride: int | None = None


@dataclass(frozen=True)
class RunConfig:
    name: str = "run"
    mode: str = "analytic"
    params: PhysicalParams = field(default_factory=lambda: PhysicalParams.from_amplitude(4.5, 3.0))
    k_auto: bool = True
    liouville_only: bool = False
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    out: str | None = None
    formats: tuple[str, ...] = FORMATS
    stopping_window: tuple[float, float] = (0.0, 12.0)
    convergence_levels: int = 3
    verify_n: int = 201
    verify_tau: tuple[float, float] = (-2.0, 2.0)
    verify_phi_span: float = 10.0
    base_dir: str | None = field(default=None, compare=False)

    def solution(self) -> SolitonSolution:
        prof = self.profile.build(self.params.eps0, Path(self.base_dir) if self.base_dir else None)
        return SolitonSolution(self.params, prof, self.profile.phi0, ADJUDICATED, self.liouville_only)

    def simulation_grid(self, sol: SolitonSolution) -> tuple[SimulationGrid, int]:
        """Grid and storage stride; missing counts follow the default step rule."""
        g = self.grid
        span_t = g.tau_max - g.tau_min
        span_z = g.zeta_max - g.zeta_min
        omega0 = self.profile.omega0 or 0.0
        tt = np.linspace(g.tau_min, g.tau_max, 2001)
        v_max = float(np.max(1.0 / (4.0 * self.params.k * (sol.profile.m(tt)[0] ** 2 + 1.0))))
        h_tau, h_zeta = default_steps(self.params, omega0, v_max)
        n_tau = g.n_tau or int(math.ceil(span_t / h_tau)) + 1
        if g.n_zeta:
            n_zeta = g.n_zeta
            stride = g.stride or 1
        else:
            stride = g.stride or max(1, int(0.01 / h_zeta))
            steps = int(math.ceil(span_z / h_zeta))
            steps = stride * int(math.ceil(steps / stride))
            n_zeta = steps + 1
        return SimulationGrid(g.tau_min, g.tau_max, n_tau, g.zeta_max, n_zeta, g.zeta_min), stride

    def to_dict(self) -> dict:
        p = self.params
        params = {"nu0": p.nu0, "eps0": p.eps0, "gamma": p.gamma, "delta": p.delta,
                  "k": "auto" if self.k_auto else p.k}
        if self.liouville_only:
            params["liouville_only"] = True
        prof = {"kind": self.profile.kind}
        for key in PROFILE_KEYS[self.profile.kind]:
            prof[key] = getattr(self.profile, key)
        prof["phi0"] = self.profile.phi0
        grid = {f.name: getattr(self.grid, f.name) for f in fields(GridSpec)
                if getattr(self.grid, f.name) is not None}
        out = {"name": self.name, "mode": self.mode, "formats": list(self.formats),
               "params": params, "profile": prof, "grid": grid,
               "stopping": {"tau_start": self.stopping_window[0], "tau_end": self.stopping_window[1]},
               "convergence": {"levels": self.convergence_levels},
               "verify": {"n": self.verify_n, "tau_min": self.verify_tau[0],
                          "tau_max": self.verify_tau[1], "phi_span": self.verify_phi_span}}
        if self.out is not None:
            out["out"] = self.out
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(self.to_toml().encode("utf-8")).hexdigest()


# -- parsing ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\[\s*([^\]]+?)\s*\]")


def _key_line(text: str, section: str, key: str | None) -> int | None:
    current = ""
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = _SECTION_RE.match(s)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return no
    return None


class _Reader:
    def __init__(self, text, data, section):
        self.text = text
        self.data = dict(data)
        self.section = section

    def line(self, key=None):
        return _key_line(self.text, self.section, key)

    def fail(self, key, message):
        where = f"[{self.section}] {key}" if self.section else key
        # a missing key points at its section header
        line = self.line(key) or (self.line() if self.section else None)
        raise ConfigError(f"{where}: {message}", line=line)

    def take(self, key, kind, default=None):
        if key not in self.data:
            return default
        value = self.data.pop(key)
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(key, f"expected a number, got {value!r}")
            value = float(value)
            if not math.isfinite(value):
                self.fail(key, "must be finite")
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                self.fail(key, f"expected an integer, got {value!r}")
            return value
        if not isinstance(value, kind):
            self.fail(key, f"expected {kind.__name__}, got {value!r}")
        return value

    def done(self):
        for key in self.data:
            self.fail(key, "unknown key")


def parse_config(text: str, base_dir=None, mode: str | None = None, out: str | None = None) -> RunConfig:
    """Parse and validate TOML config text; errors carry the offending line.

    ``mode`` and ``out`` override the file's values before validation.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from None

    if mode is not None:
        raw["mode"] = mode
    if out is not None:
        raw["out"] = out
    top = _Reader(text, raw, "")
    sections = {}
    for name in ("params", "profile", "grid", "stopping", "convergence", "verify"):
        value = top.data.pop(name, {})
        if not isinstance(value, dict):
            top.fail(name, "expected a table")
        sections[name] = _Reader(text, value, name)

    name = top.take("name", str, "run")
    mode = top.take("mode", str, "analytic")
    if mode not in MODES:
        top.fail("mode", f"must be one of {', '.join(MODES)}")
    out = top.take("out", str, None)
    formats = top.take("formats", list, list(FORMATS))
    for f in formats:
        if f not in FORMATS:
            top.fail("formats", f"unknown format {f!r}")
    top.done()

    r = sections["params"]
    nu0 = r.take("nu0", float, 4.5)
    eps0 = r.take("eps0", float, 3.0)
    gamma = r.take("gamma", float, 0.0)
    delta = r.take("delta", float, 0.0)
    liouville_only = r.take("liouville_only", bool, False)
    k_raw = r.data.get("k", "auto")
    k_auto = k_raw == "auto"
    if k_auto:
        r.data.pop("k", None)
    else:
        k_value = r.take("k", float)
    r.done()
    try:
        k = k_from_amplitude(nu0, eps0, delta) if k_auto else k_value
        params = PhysicalParams(nu0=nu0, gamma=gamma, eps0=eps0, k=k, delta=delta)
    except (SlowLightError, ZeroDivisionError) as exc:
        raise ConfigError(f"[params] {exc}", line=r.line()) from exc
    if not k_auto and not params.k_consistent and not liouville_only:
        r.fail("k", "differs from nu0/(8(eps0^2+delta^2)); set liouville_only = true to allow it")

    r = sections["profile"]
    kind = r.take("kind", str, "constant")
    if kind not in PROFILE_KEYS:
        r.fail("kind", f"must be one of {', '.join(PROFILE_KEYS)}")
    values = {}
    for key in ("m0", "alpha", "omega0", "m_initial"):
        values[key] = r.take(key, float)
    values["control_csv"] = r.take("control_csv", str)
    phi0 = r.take("phi0", float, 0.0)
    r.done()
    if kind == "constant" and values["m0"] is None:
        values["m0"] = -1.0
    for key, value in values.items():
        if key in PROFILE_KEYS[kind] and value is None:
            r.fail(key, f"required for kind = {kind!r}")
        if key not in PROFILE_KEYS[kind] and value is not None:
            r.fail(key, f"not used by kind = {kind!r}")
    if kind == "constant_control":
        try:
            riccati_match_constant(values["omega0"], eps0, ADJUDICATED.background_law(-1 if eps0 > 0 else 1))
        except NoRealRootError as exc:
            r.fail("omega0", f"no real root: {exc}")
        if values["omega0"] == 0:
            r.fail("omega0", "zero control has no slow-light soliton")
    if kind in ("exponential", "switch_off") and not values["alpha"] > 0:
        r.fail("alpha", "must be positive")
    profile = ProfileSpec(kind=kind, phi0=phi0, **values)

    r = sections["grid"]
    gvals = {}
    for key in ("tau_min", "tau_max", "zeta_max", "zeta_min"):
        v = r.take(key, float)
        if v is not None:
            gvals[key] = v
    for key in ("n_tau", "n_zeta", "stride"):
        v = r.take(key, int)
        if v is not None:
            if v < (1 if key == "stride" else 2):
                r.fail(key, "too small")
            gvals[key] = v
    r.done()
    grid = GridSpec(**gvals)
    if not grid.tau_min < grid.tau_max:
        r.fail("tau_max", "must exceed tau_min")
    if not grid.zeta_max > grid.zeta_min:
        r.fail("zeta_max", "must exceed zeta_min")
    if grid.n_zeta and grid.stride and (grid.n_zeta - 1) % grid.stride:
        r.fail("stride", "must divide n_zeta - 1")

    r = sections["stopping"]
    window = (r.take("tau_start", float, 0.0), r.take("tau_end", float, 12.0))
    r.done()
    if not window[0] < window[1]:
        r.fail("tau_end", "must exceed tau_start")

    r = sections["convergence"]
    levels = r.take("levels", int, 3)
    r.done()
    if levels < 3:
        r.fail("levels", "need at least 3 levels")

    r = sections["verify"]
    vn = r.take("n", int, 201)
    vt = (r.take("tau_min", float, -2.0), r.take("tau_max", float, 2.0))
    vspan = r.take("phi_span", float, 10.0)
    r.done()
    if vn < 5:
        r.fail("n", "too small")

    if mode in ("analytic", "verify") and gamma != 0:
        sections["params"].fail("gamma", f"mode {mode!r} evaluates the exact gamma = 0 solution")
    if mode == "verify" and eps0 <= 0:
        sections["params"].fail("eps0", "verify mode assumes eps0 > 0")

    return RunConfig(name=name, mode=mode, params=params, k_auto=k_auto, liouville_only=liouville_only,
                     profile=profile, grid=grid, out=out, formats=tuple(formats),
                     stopping_window=window, convergence_levels=levels, verify_n=vn,
                     verify_tau=vt, verify_phi_span=vspan,
                     base_dir=str(base_dir) if base_dir is not None else None)


def load_config(path, mode: str | None = None, out: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent, mode=mode, out=out)
