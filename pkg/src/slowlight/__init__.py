"""Slow-light solitons in a three-level Lambda medium: exact family, solver, checks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (AtomState, FieldPair, NormalizedUnits, PhysicalParams, SimulationGrid,  # noqa: F401
                    default_params, k_from_amplitude, normalize_units)
from .modulation import (Constant, ControlLaw, ControlWaveform, Exponential, FromControl,  # noqa: F401
                         PiecewiseSmooth, control_field, phase_integral, profile_from_control,
                         riccati_match_constant, switch_off_profile)
from .soliton import (ADJUDICATED, ConventionVariant, SolitonSolution, atomic_state,  # noqa: F401
                      group_velocity, soliton_fields, stopping_distance)
from .solver import Scenario, SolutionGrids, simulate  # noqa: F401
