"""Passivity-preserving safety-critical control for port-Hamiltonian mechanical systems.

Energy-balancing passive controllers shaped by an added potential, filtered
through control barrier functions in closed form, with a runtime monitor that
certifies the filtered loop stays passive with respect to the shaped storage.
"""

from .barriers import (
    BarrierSpec,
    ExtendedClassK,
    GeneralizedEnergyCBF,
    kinetic_floor_barrier,
    kinetic_limit_barrier,
    position_limit_barrier,
    total_energy_limit_barrier,
)
from .errors import (
    ConfigError,
    ConstraintSingularError,
    DivergenceError,
    MatchingViolationError,
    PhsafeError,
    RankDeficientInputError,
    SingularModelError,
)
from .models import CartPoleParams, cartpole, point_mass
from .pbc import (
    AddedEnergy,
    ClosedLoopSystem,
    PassiveController,
    beta_mechanical,
    closed_loop,
    damping_injection,
    eb_pbc_general,
    eb_pbc_mechanical,
    matching_residual,
    quadratic_added_energy,
)
from .phsys import GeneralPHSystem, MechanicalPHSystem, StateVector, poisson_bracket
from .safety import FilterResult, filter_closed_form, filter_qp_oracle, injected_power, passivity_check
from .scenario import ScenarioConfig, build_scenario, load_scenario, reference_campaigns
from .sim import StepRecord, energy_audit, rk4_step, run_scenario, simulate

__version__ = "0.1.0"

__all__ = [
    "AddedEnergy",
    "BarrierSpec",
    "CartPoleParams",
    "ClosedLoopSystem",
    "ConfigError",
    "ConstraintSingularError",
    "DivergenceError",
    "ExtendedClassK",
    "FilterResult",
    "GeneralPHSystem",
    "GeneralizedEnergyCBF",
    "MatchingViolationError",
    "MechanicalPHSystem",
    "PassiveController",
    "PhsafeError",
    "RankDeficientInputError",
    "ScenarioConfig",
    "SingularModelError",
    "StateVector",
    "StepRecord",
    "beta_mechanical",
    "build_scenario",
    "cartpole",
    "closed_loop",
    "damping_injection",
    "eb_pbc_general",
    "eb_pbc_mechanical",
    "energy_audit",
    "filter_closed_form",
    "filter_qp_oracle",
    "injected_power",
    "kinetic_floor_barrier",
    "kinetic_limit_barrier",
    "load_scenario",
    "matching_residual",
    "passivity_check",
    "point_mass",
    "poisson_bracket",
    "position_limit_barrier",
    "quadratic_added_energy",
    "reference_campaigns",
    "rk4_step",
    "run_scenario",
    "simulate",
    "total_energy_limit_barrier",
]
