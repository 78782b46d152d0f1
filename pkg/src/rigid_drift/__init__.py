"""Lie group integrators for the rigid body and a long-time energy drift test."""
from .so3 import cay, dist, expmap, hat, logmap, vee
from .dynamics import (
    InertiaMatrix,
    PotentialParams,
    State,
    continuous_rhs,
    kinetic_energy,
    make_state,
    potential,
    torque,
    total_energy,
)
from .integrators import (
    SolverConfig,
    StepResult,
    fixed_point_solve,
    step_lie_newmark,
    step_lie_verlet,
    step_liemid_ea,
    step_rk4_reference,
)
from .experiments import (
    ExperimentSpec,
    drift_fit,
    order_study,
    stress_spec,
    simulate,
    stress_test_suite,
)

__version__ = "0.1.0"
