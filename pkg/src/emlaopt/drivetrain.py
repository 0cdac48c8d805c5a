"""Mechanical drivetrain of the actuator: gearbox, screw, and equivalent
single-shaft parameters reflected to the motor side."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DriveTrainParams:
    """Inertias, dampings, stiffnesses and the gearbox/screw ratios of one EMLA.

    Units: inertias kg*m^2, masses kg, torsional stiffnesses N*m/rad, linear
    stiffnesses N/m, gear ratio dimensionless, screw lead m/rev.
    """

    motor_inertia: float
    coupling_inertia: float
    gearbox_inertia: float
    screw_mass: float
    load_mass: float
    viscous_motor: float
    gear_friction: float
    screw_viscous: float
    coupling_stiffness: float
    gear_stiffness: float
    bearing_stiffness: float
    screw_stiffness: float
    nut_stiffness: float
    tube_stiffness: float
    gear_ratio: float
    screw_lead: float

    def __post_init__(self):
        positive = (
            "motor_inertia",
            "coupling_inertia",
            "gearbox_inertia",
            "coupling_stiffness",
            "gear_stiffness",
            "bearing_stiffness",
            "screw_stiffness",
            "nut_stiffness",
            "tube_stiffness",
            "gear_ratio",
            "screw_lead",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("screw_mass", "load_mass", "viscous_motor", "gear_friction", "screw_viscous"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class EquivalentParams(NamedTuple):
    """Motor-side equivalent parameters (J_eq, b_eq, k_eq, f_eq)."""

    inertia: float
    damping: float
    stiffness: float
    load_ratio: float


def linear_stiffness(dt: DriveTrainParams) -> float:
    """Series composition of the bearing/screw/nut/tube stiffnesses [N/m]."""
    return 1.0 / (
        1.0 / dt.bearing_stiffness
        + 1.0 / dt.screw_stiffness
        + 1.0 / dt.nut_stiffness
        + 1.0 / dt.tube_stiffness
    )


def equivalent_params(dt: DriveTrainParams) -> EquivalentParams:
    """Reflect the drivetrain to the motor shaft.

    J_eq collects the rotating inertias plus the translating masses through
    the squared transmission ratio; b_eq the damping sources; k_eq the
    compliance composition of the torsional and (reflected) linear
    stiffnesses; f_eq = rho / (2 pi n) is the force-to-torque ratio.
    """
    n = dt.gear_ratio
    rho = dt.screw_lead
    k_lin = linear_stiffness(dt)
    j_eq = (
        dt.motor_inertia
        + dt.coupling_inertia
        + dt.gearbox_inertia / n**2
        + rho**2 / (4.0 * np.pi**2 * n**2) * (dt.screw_mass + dt.load_mass)
    )
    b_eq = dt.viscous_motor + n * dt.gear_friction + (n * rho / TWO_PI) * dt.screw_viscous
    k_eq = (
        1.0 / dt.coupling_stiffness
        + n**2 / dt.gear_stiffness
        + (TWO_PI * n / rho) ** 2 / k_lin
    )
    f_eq = rho / (TWO_PI * n)
    return EquivalentParams(j_eq, b_eq, k_eq, f_eq)


def rotary_linear_map(dt: DriveTrainParams, f_x, v_x):
    """Ideal transmission between load side (f_x, v_x) and rotor side (tau_m, omega_m).

    tau_m = rho/(2 pi n) f_x and omega_m = 2 pi n / rho v_x, so the power
    tau_m * omega_m = f_x * v_x is conserved exactly.
    """
    ratio = dt.screw_lead / (TWO_PI * dt.gear_ratio)
    return ratio * np.asarray(f_x, dtype=float), np.asarray(v_x, dtype=float) / ratio


def linear_to_rotary(dt: DriveTrainParams, x=None, v=None):
    """Convert linear position/velocity at the load to shaft angle/speed."""
    ratio = dt.screw_lead / (TWO_PI * dt.gear_ratio)
    out = []
    if x is not None:
        out.append(np.asarray(x, dtype=float) / ratio)
    if v is not None:
        out.append(np.asarray(v, dtype=float) / ratio)
    return out[0] if len(out) == 1 else tuple(out)
