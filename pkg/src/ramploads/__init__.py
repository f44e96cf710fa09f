"""Surface load distributions for hypersonic-limit flow over compressive
ramps, with four skin-friction closures and built-in verification."""

from .errors import (DegenerateStation, DomainError, InvalidExponent,
                     LayerUndefined, NonMonotoneProfile, OutOfValidityRange,
                     RampLoadsError, StartFailure, StepTooLarge,
                     SupportOutsideDomain, UnsortedStations)
from .geometry import (ArcChart, Finding, RampProfile, build_chart, frame_at,
                       has_fatal, validate_profile)
from .loads import (ConservationReport, SurfaceStation, WeakFormWeights,
                    conservation_report, cumulative_loads, surface_state,
                    weak_weights)
from .solvers import (Coulomb, Frictionless, Frozen, FrozenLoads, SpeedField,
                      VelocityPower, VelocityScaled, frozen_limit_loads,
                      solve, solve_coulomb, solve_frictionless,
                      solve_velocity_power, solve_velocity_scaled)
from .verify import (AccretionState, BumpTestFunction, ConvergenceStudy,
                     convergence_study, run_accretion, standard_bumps,
                     weak_form_residual)

__version__ = "0.1.0"
