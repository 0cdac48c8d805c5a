"""Power losses inside an EMLA and the resulting conversion efficiency.

The loss taxonomy follows the usual drive + PMSM + screw decomposition:
switching and conduction losses in the motor control drive, copper and core
(hysteresis, eddy, additional) losses in the machine, viscous loss at the
shaft, and the screw-mechanism loss.  Each source has a coefficient in
:class:`DriveConfig` and an enable flag so alternative expressions can be
swapped in without touching callers.
"""

from dataclasses import dataclass, field

import numpy as np

from .drivetrain import DriveTrainParams, equivalent_params
from .pmsm import PmsmParams


@dataclass(frozen=True)
class DriveConfig:
    """Loss-model coefficients for the drive and motor core.

    The switching loss scales with switching frequency, dc-link voltage and
    phase current magnitude; conduction loss uses an on-state voltage drop
    plus an ohmic term.  Core losses scale with electrical frequency and the
    squared stator flux magnitude.  The screw loss uses a constant mechanical
    efficiency.  Defaults give a plausible industrial servo drive.
    """

    switching_coeff: float = 1.0e-6  # [J/(V*A)] per switching event
    switching_freq: float = 8000.0  # [Hz]
    dc_link_voltage: float = 560.0  # [V]
    on_state_voltage: float = 0.9  # [V]
    on_state_resistance: float = 5.0e-3  # [ohm]
    hysteresis_coeff: float = 0.15  # [W*s/(rad*Wb^2)]
    eddy_coeff: float = 2.0e-4  # [W*s^2/(rad^2*Wb^2)]
    excess_coeff: float = 1.0e-3  # [W*s^1.5/(rad^1.5*Wb^2)]
    screw_efficiency: float = 0.90  # mechanical efficiency of the screw stage
    enable_switching: bool = True
    enable_conduction: bool = True
    enable_core: bool = True
    enable_mechanical: bool = True
    enable_screw: bool = True
    max_current: float = field(default=np.inf)  # phase current amplitude limit [A]
    max_voltage: float = field(default=np.inf)  # dq voltage amplitude limit [V]

    def __post_init__(self):
        for name in (
            "switching_coeff",
            "switching_freq",
            "dc_link_voltage",
            "on_state_voltage",
            "on_state_resistance",
            "hysteresis_coeff",
            "eddy_coeff",
            "excess_coeff",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 < self.screw_efficiency <= 1.0:
            raise ValueError("screw_efficiency must be in (0, 1]")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-source power losses in watts, plus the two stage aggregates."""

    p_sw: float
    p_d: float
    p_cu: float
    p_hys: float
    p_eddy: float
    p_add: float
    p_mech: float
    p_sc: float

    @property
    def p_co(self) -> float:
        """Total core loss."""
        return self.p_hys + self.p_eddy + self.p_add

    @property
    def p_ee(self) -> float:
        """Electric-to-electromagnetic stage loss: switching + conduction + copper + core."""
        return self.p_sw + self.p_d + self.p_cu + self.p_co

    @property
    def p_em(self) -> float:
        """Electromagnetic-to-mechanical stage loss: shaft viscous + screw."""
        return self.p_mech + self.p_sc

    @property
    def total(self) -> float:
        return self.p_ee + self.p_em


def stator_flux_magnitude(params: PmsmParams, i_d, i_q):
    """|psi_s| from the current operating currents [Wb]."""
    return np.hypot(params.pm_flux + params.inductance_d * i_d, params.inductance_q * i_q)


def loss_breakdown(
    params: PmsmParams,
    drivetrain: DriveTrainParams,
    drive: DriveConfig,
    i_d: float,
    i_q: float,
    omega_m: float,
    f_x: float,
    v_x: float,
) -> LossBreakdown:
    """Evaluate every loss source at one operating point.

    The mechanical state is taken as given (omega_m consistent with v_x via
    the ideal transmission when called from the map generator).  All
    components are nonnegative by construction.
    """
    eq = equivalent_params(drivetrain)
    i_mag = float(np.hypot(i_d, i_q))
    omega_e = params.pole_pairs * omega_m
    psi = stator_flux_magnitude(params, i_d, i_q)

    p_sw = p_d = p_hys = p_eddy = p_add = p_mech = p_sc = 0.0
    if drive.enable_switching:
        p_sw = drive.switching_coeff * drive.switching_freq * drive.dc_link_voltage * i_mag
    if drive.enable_conduction:
        p_d = drive.on_state_voltage * i_mag + drive.on_state_resistance * i_mag**2
    if drive.enable_core:
        w = abs(omega_e)
        p_hys = drive.hysteresis_coeff * w * psi**2
        p_eddy = drive.eddy_coeff * w**2 * psi**2
        p_add = drive.excess_coeff * w**1.5 * psi**2
    if drive.enable_mechanical:
        p_mech = eq.damping * omega_m**2
    if drive.enable_screw:
        p_sc = (1.0 - drive.screw_efficiency) * abs(f_x * v_x)
    p_cu = 1.5 * params.stator_resistance * (i_d**2 + i_q**2)

    return LossBreakdown(
        p_sw=float(p_sw),
        p_d=float(p_d),
        p_cu=float(p_cu),
        p_hys=float(p_hys),
        p_eddy=float(p_eddy),
        p_add=float(p_add),
        p_mech=float(p_mech),
        p_sc=float(p_sc),
    )


class RegenerationError(ValueError):
    """Raised when f_x * v_x < 0 and regenerative handling is disabled."""


def efficiency(f_x: float, v_x: float, losses: LossBreakdown, allow_regeneration: bool = False) -> float:
    """Conversion efficiency eta = P_out / (P_out + P_EE + P_EM) in [0, 1].

    For zero output power the efficiency is defined as 0.  In the optional
    regenerative mode (f_x * v_x < 0) the efficiency is recovered/absorbed
    power, clamped at 0 when the losses exceed the absorbed power.
    """
    p_out = f_x * v_x
    p_loss = losses.total
    if p_out < 0.0:
        if not allow_regeneration:
            raise RegenerationError(
                "f_x*v_x < 0: regenerating quadrant (enable allow_regeneration to rate it)"
            )
        absorbed = -p_out
        return max(0.0, (absorbed - p_loss) / absorbed) if absorbed > 0 else 0.0
    if p_out == 0.0:
        return 0.0 if p_loss > 0.0 else 0.0
    return p_out / (p_out + p_loss)
