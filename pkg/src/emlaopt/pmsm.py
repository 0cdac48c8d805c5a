"""PMSM electrical model in the rotor (dq) reference frame.

Covers the Park transformation of the three phase voltages, the dq voltage
equations, the electromagnetic torque, and the ideal gearbox + screw
transmission that couples the rotor to the linear load side.
"""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PmsmParams:
    """Electrical constants of one permanent-magnet synchronous motor.

    Attributes:
        stator_resistance: per-phase stator resistance [ohm].
        inductance_d: d-axis inductance [H].
        inductance_q: q-axis inductance [H].
        pole_pairs: number of pole pairs.
        pm_flux: permanent-magnet flux linkage [Wb].
    """

    stator_resistance: float
    inductance_d: float
    inductance_q: float
    pole_pairs: int
    pm_flux: float

    def __post_init__(self):
        if self.stator_resistance <= 0:
            raise ValueError("stator_resistance must be > 0")
        if self.inductance_d <= 0 or self.inductance_q <= 0:
            raise ValueError("inductances must be > 0")
        if self.pole_pairs < 1:
            raise ValueError("pole_pairs must be >= 1")
        if self.pm_flux <= 0:
            raise ValueError("pm_flux must be > 0")

    @property
    def saliency_ratio(self) -> float:
        """L_d / L_q."""
        return self.inductance_d / self.inductance_q

    @property
    def inductance_diff(self) -> float:
        """L_d - L_q (negative for typical interior-magnet machines)."""
        return self.inductance_d - self.inductance_q


def park_matrix(theta_m: float) -> np.ndarray:
    """3x3 matrix (including the 2/3 factor) mapping abc quantities to dq0."""
    a = theta_m
    b = theta_m - TWO_PI / 3.0
    c = theta_m + TWO_PI / 3.0
    return (2.0 / 3.0) * np.array(
        [
            [np.cos(a), np.cos(b), np.cos(c)],
            [-np.sin(a), -np.sin(b), -np.sin(c)],
            [0.5, 0.5, 0.5],
        ]
    )


def park_transform(phase_voltages, theta_m: float) -> np.ndarray:
    """Map phase quantities [V_a, V_b, V_c] to [V_d, V_q, V_0] at rotor angle theta_m."""
    v = np.asarray(phase_voltages, dtype=float)
    if v.shape != (3,):
        raise ValueError("phase_voltages must be a 3-vector")
    return park_matrix(theta_m) @ v


def inverse_park_transform(dq0, theta_m: float) -> np.ndarray:
    """Map [V_d, V_q, V_0] back to phase quantities [V_a, V_b, V_c]."""
    d, q, zero = np.asarray(dq0, dtype=float)
    a = theta_m
    b = theta_m - TWO_PI / 3.0
    c = theta_m + TWO_PI / 3.0
    return np.array(
        [
            d * np.cos(a) - q * np.sin(a) + zero,
            d * np.cos(b) - q * np.sin(b) + zero,
            d * np.cos(c) - q * np.sin(c) + zero,
        ]
    )


def dq_voltages(
    params: PmsmParams,
    i_d: float,
    i_q: float,
    omega_m: float,
    di_d_dt: float = 0.0,
    di_q_dt: float = 0.0,
) -> tuple[float, float]:
    """dq stator voltages consistent with the given currents and their rates.

    Returns (V_d, V_q).  The same relations solved for the current
    derivatives are provided by :func:`current_derivatives`; the two are
    exact inverses of each other.
    """
    p = params.pole_pairs
    v_d = (
        params.stator_resistance * i_d
        + params.inductance_d * di_d_dt
        - p * omega_m * params.inductance_q * i_q
    )
    v_q = (
        params.stator_resistance * i_q
        + params.inductance_q * di_q_dt
        + p * omega_m * params.inductance_d * i_d
        + p * omega_m * params.pm_flux
    )
    return v_d, v_q


def current_derivatives(
    params: PmsmParams, i_d, i_q, omega_m, v_d, v_q
) -> tuple[float, float]:
    """Solve the dq voltage equations for (di_d/dt, di_q/dt)."""
    p = params.pole_pairs
    di_d = (
        v_d
        - params.stator_resistance * i_d
        + p * omega_m * params.inductance_q * i_q
    ) / params.inductance_d
    di_q = (
        v_q
        - params.stator_resistance * i_q
        - p * omega_m * params.inductance_d * i_d
        - p * omega_m * params.pm_flux
    ) / params.inductance_q
    return di_d, di_q


def electromagnetic_torque(params: PmsmParams, i_d, i_q):
    """Electromagnetic torque (3/2) p i_q [psi_PM + (L_d - L_q) i_d] in N*m."""
    return 1.5 * params.pole_pairs * i_q * (params.pm_flux + params.inductance_diff * i_d)


def torque_to_iq(params: PmsmParams, torque, i_d=0.0):
    """Invert the torque expression for i_q at a given (usually zero) i_d."""
    return torque / (1.5 * params.pole_pairs * (params.pm_flux + params.inductance_diff * i_d))
