"""Electromechanical linear actuation: modeling, efficiency mapping,
closed-chain manipulator dynamics, efficiency-driven bilevel trajectory
optimization, and robust decomposed tracking control."""

__version__ = "0.1.0"

from .bilevel import (
    BilevelConfig,
    BilevelResult,
    efficiency_summary,
    map_eta_fns,
    outer_cost,
    quartile_occupancy,
    solve_outer,
    total_efficiency,
)
from .bspline import SplineTrajectory, basis_matrices, clamped_knots
from .chain import ClosedChainGeometry, StrokeRangeError, closure_rates, loop_closure
from .control import (
    DisturbanceProfile,
    StabilityAudit,
    SubsystemGains,
    TrackingTraces,
    adaptive_update,
    control_law,
    lyapunov_audit,
    nominal_disturbance,
    published_gains,
    simulate_tracking,
    tracking_errors,
    tracking_transform,
)
from .drivetrain import DriveTrainParams, equivalent_params, linear_stiffness, rotary_linear_map
from .effmap import EfficiencyMap, EmlaModel, build_efficiency_map, map_from_json, map_to_csv, map_to_json
from .losses import DriveConfig, LossBreakdown, RegenerationError, efficiency, loss_breakdown
from .manipulator import (
    ChainModel,
    ClosedChainStage,
    DynamicsState,
    SingularConfigurationError,
    TelescopeStage,
    actuator_force,
    backward_forces,
    evaluate_dynamics,
    forward_velocities,
    kinetic_energy,
    potential_energy,
    rnea,
)
from .pmsm import (
    PmsmParams,
    dq_voltages,
    current_derivatives,
    electromagnetic_torque,
    inverse_park_transform,
    park_transform,
    torque_to_iq,
)
from .spatial import RigidBodyParams, SpatialVec, TransformU, net_force, skew
from .statespace import EmlaState, OperatingPoint, emla_rhs, linearize, step_dynamics
from .trajopt import (
    NlpProblem,
    TimeGrid,
    TrajectoryResult,
    criterion_effort,
    criterion_power,
    solve_inner,
)
