"""Closed-chain dynamics of a planar parallel-serial manipulator.

The machine is a stack of stages over a fixed base.  Each stage is either a
linearly actuated closed chain (hinge + anchor on the carrying body, a
driven link, and a barrel/rod actuator closing the triangle) or a
telescopic prismatic slide.  All motion happens in the world x-z plane with
revolute axes along +y; gravity acts along -z.

Generalized coordinates are the piston strokes, one per stage.  The
forward pass propagates body-frame spatial velocities and their apparent
derivatives through both branches of every chain; the backward pass
aggregates net wrenches leaf-to-root and resolves each chain's internal
pin/slide constraint system to extract the piston force.
"""

from dataclasses import dataclass, replace

import numpy as np

from .chain import ClosedChainGeometry, closure_rates
from .spatial import FORCE, MOTION, RigidBodyParams, SpatialVec, planar_angle, rot_y, skew

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])

SINGULARITY_TOL = 1e-6


class SingularConfigurationError(ValueError):
    """Chain at (or numerically at) a fold where the pin angle vanishes."""


def _check_planar(body: RigidBodyParams, name: str):
    if abs(body.com_offset[1]) > 1e-12:
        raise ValueError(f"{name}: com offset must lie in the x-z plane")
    if abs(body.inertia[0, 1]) > 1e-12 or abs(body.inertia[1, 2]) > 1e-12:
        raise ValueError(f"{name}: inertia products Ixy and Iyz must vanish")


@dataclass(frozen=True)
class ClosedChainStage:
    """One linearly actuated revolute stage.

    ``hinge_pos`` and ``anchor_pos`` sit on the carrying body (stage base
    frame); the driven link frame has its origin at the hinge with x toward
    the rod pin.  ``mount_pos``/``mount_angle`` place the next stage on the
    driven link.
    """

    name: str
    geometry: ClosedChainGeometry
    hinge_pos: np.ndarray
    anchor_pos: np.ndarray
    boom: RigidBodyParams
    barrel: RigidBodyParams
    rod: RigidBodyParams
    mount_pos: np.ndarray
    mount_angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "hinge_pos", np.asarray(self.hinge_pos, dtype=float))
        object.__setattr__(self, "anchor_pos", np.asarray(self.anchor_pos, dtype=float))
        object.__setattr__(self, "mount_pos", np.asarray(self.mount_pos, dtype=float))
        for p, nm in ((self.hinge_pos, "hinge_pos"), (self.anchor_pos, "anchor_pos"),
                      (self.mount_pos, "mount_pos")):
            if abs(p[1]) > 1e-12:
                raise ValueError(f"{self.name}.{nm} must lie in the x-z plane")
        span = np.linalg.norm(self.anchor_pos - self.hinge_pos)
        if abs(span - self.geometry.base_len) > 1e-9:
            raise ValueError(
                f"{self.name}: |anchor - hinge| = {span:.9g} does not match "
                f"geometry.base_len = {self.geometry.base_len:.9g}"
            )
        for body, nm in ((self.boom, "boom"), (self.barrel, "barrel"), (self.rod, "rod")):
            _check_planar(body, f"{self.name}.{nm}")

    @property
    def base_angle(self) -> float:
        """Planar angle of the hinge-to-anchor direction in the stage base frame."""
        return float(planar_angle(self.anchor_pos - self.hinge_pos))


@dataclass(frozen=True)
class TelescopeStage:
    """Prismatic slide along the carrying body's x-axis."""

    name: str
    carriage: RigidBodyParams
    slide_pos: np.ndarray
    stroke_min: float
    stroke_max: float
    mount_pos: np.ndarray
    mount_angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "slide_pos", np.asarray(self.slide_pos, dtype=float))
        object.__setattr__(self, "mount_pos", np.asarray(self.mount_pos, dtype=float))
        if self.stroke_min >= self.stroke_max:
            raise ValueError("stroke_min must be < stroke_max")
        _check_planar(self.carriage, f"{self.name}.carriage")


@dataclass(frozen=True)
class ChainModel:
    """Fixed base plus an ordered stack of actuated stages.

    The class-level unit selectors pick components of the chain wrenches:
    the piston (axial) direction, the in-plane lateral direction, and the
    hinge-moment component.
    """

    PISTON_AXIS = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    LATERAL_AXIS = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    HINGE_MOMENT_AXIS = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])

    base: RigidBodyParams
    stages: tuple
    base_pos: np.ndarray
    base_angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "base_pos", np.asarray(self.base_pos, dtype=float))
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("model needs at least one stage")

    @property
    def n_joints(self) -> int:
        return len(self.stages)

    @property
    def joint_names(self):
        return [s.name for s in self.stages]

    def stroke_limits(self):
        lo, hi = [], []
        for s in self.stages:
            if isinstance(s, ClosedChainStage):
                lo.append(s.geometry.stroke_min)
                hi.append(s.geometry.stroke_max)
            else:
                lo.append(s.stroke_min)
                hi.append(s.stroke_max)
        return np.array(lo), np.array(hi)

    def scaled_masses(self, factor: float) -> "ChainModel":
        """Copy of the model with every body mass multiplied by ``factor``."""

        def scale(b):
            return replace(b, mass=b.mass * factor, inertia=b.inertia * factor)

        stages = []
        for s in self.stages:
            if isinstance(s, ClosedChainStage):
                stages.append(
                    replace(s, boom=scale(s.boom), barrel=scale(s.barrel), rod=scale(s.rod))
                )
            else:
                stages.append(replace(s, carriage=scale(s.carriage)))
        return replace(self, base=scale(self.base), stages=tuple(stages))


# ---------------------------------------------------------------------------
# forward propagation primitives: state = (R_world, p_world, V, A)
# V is the body-frame spatial velocity [v; w]; A its frame-apparent
# derivative, which is what the net-force formula consumes.


def _mat_vec(m, v):
    return np.einsum("...ij,...j->...i", m, v)


def _cross(a, b):
    """np.cross for (..., 3) operands without its axis-juggling overhead."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def _fixed_child(state, r_fix, p_fix):
    r_w, p_w, vel, acc = state
    rt = np.swapaxes(r_fix, -1, -2) if r_fix.ndim > 2 else r_fix.T
    v, w = vel[..., :3], vel[..., 3:]
    av, aw = acc[..., :3], acc[..., 3:]
    lin = _mat_vec(rt, v + _cross(w, p_fix))
    ang = _mat_vec(rt, w)
    alin = _mat_vec(rt, av + _cross(aw, p_fix))
    aang = _mat_vec(rt, aw)
    return (
        r_w @ r_fix,
        p_w + _mat_vec(r_w, np.broadcast_to(p_fix, p_w.shape)),
        np.concatenate([lin, ang], axis=-1),
        np.concatenate([alin, aang], axis=-1),
    )


def _revolute_y_child(state, p_fix, angle, rate, accel):
    """Child rotated by ``angle`` about the parent y-axis at parent point p_fix."""
    r_w, p_w, vel, acc = state
    rj = rot_y(angle)
    rt = np.swapaxes(rj, -1, -2)
    v, w = vel[..., :3], vel[..., 3:]
    av, aw = acc[..., :3], acc[..., 3:]
    lin = _mat_vec(rt, v + _cross(w, p_fix))
    ang = _mat_vec(rt, w)
    ang = ang + rate[..., None] * EY
    rate_vec = rate[..., None] * EY
    alin = _mat_vec(rt, av + _cross(aw, p_fix)) - _cross(rate_vec, lin)
    aang = _mat_vec(rt, aw) - _cross(rate_vec, ang) + accel[..., None] * EY
    return (
        r_w @ rj,
        p_w + _mat_vec(r_w, np.broadcast_to(p_fix, p_w.shape)),
        np.concatenate([lin, ang], axis=-1),
        np.concatenate([alin, aang], axis=-1),
    )


def _prismatic_x_child(state, disp, rate, accel):
    """Child sliding along the parent x-axis; orientations coincide."""
    r_w, p_w, vel, acc = state
    r = disp[..., None] * EX
    v, w = vel[..., :3], vel[..., 3:]
    av, aw = acc[..., :3], acc[..., 3:]
    lin = v + _cross(w, r) + rate[..., None] * EX
    alin = av + _cross(aw, r) + rate[..., None] * _cross(w, EX) + accel[..., None] * EX
    return (
        r_w,
        p_w + _mat_vec(r_w, r),
        np.concatenate([lin, w], axis=-1),
        np.concatenate([alin, aw], axis=-1),
    )


def _net_wrench(body: RigidBodyParams, state):
    """M dV + C(w) V + G via direct cross products (no 6x6 assembly).

    Equivalent to :func:`emlaopt.spatial.net_force`; the identity is pinned
    by a regression test.
    """
    r_w, _, vel, acc = state
    m, r = body.mass, body.com_offset
    i_com = body.inertia
    rx = skew(r)
    i_origin = i_com - m * (rx @ rx)
    v, w = vel[..., :3], vel[..., 3:]
    av, aw = acc[..., :3], acc[..., 3:]
    # inertial terms about the frame origin
    lin = m * (av - _cross(r, aw))
    ang = m * _cross(r, av) + _mat_vec(i_origin, aw)
    # Coriolis/centrifugal: u = w x (v - r x w)
    u = _cross(w, v - _cross(r, w))
    lin = lin + m * u
    ang = ang + m * _cross(r, u) + _cross(w, _mat_vec(i_com, w))
    # gravity support wrench
    g_body = m * np.einsum("...ji,j->...i", r_w, body.gravity)
    lin = lin + g_body
    ang = ang + _cross(r, g_body)
    return np.concatenate([lin, ang], axis=-1)


def _force_to_parent(rotation, offset, force):
    """Re-express a child-frame wrench in the parent frame; rotation=None is identity."""
    if rotation is None:
        lin = force[..., :3]
        ang = force[..., 3:]
    else:
        lin = _mat_vec(rotation, force[..., :3])
        ang = _mat_vec(rotation, force[..., 3:])
    ang = ang + _cross(offset, lin)
    return np.concatenate([lin, ang], axis=-1)


@dataclass
class DynamicsState:
    """Everything one evaluation produces: frames, wrenches, piston forces."""

    model: ChainModel
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    frames: dict  # name -> (R_world, p_world, V, A)
    net_wrenches: dict  # body name -> wrench in body frame
    frame_forces: dict  # frame name -> transmitted wrench in frame coords
    piston_forces: np.ndarray  # (..., n)
    chain_angles: dict  # stage name -> (q_hinge, q_anchor, q_pin)

    def velocity(self, frame: str) -> SpatialVec:
        return SpatialVec(self.frames[frame][2], MOTION)

    def acceleration(self, frame: str) -> SpatialVec:
        return SpatialVec(self.frames[frame][3], MOTION)

    def world_position(self, frame: str) -> np.ndarray:
        return self.frames[frame][1]

    def force(self, frame: str) -> SpatialVec:
        return SpatialVec(self.frame_forces[frame], FORCE)


def _evaluate(model: ChainModel, q, qd, qdd) -> DynamicsState:
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    if q.shape != qd.shape or q.shape != qdd.shape or q.shape[-1] != model.n_joints:
        raise ValueError("q, qd, qdd must share shape (..., n_joints)")
    batch = q.shape[:-1]

    zeros6 = np.zeros(batch + (6,))
    ground = (
        np.broadcast_to(np.eye(3), batch + (3, 3)),
        np.zeros(batch + (3,)),
        zeros6,
        zeros6.copy(),
    )
    frames = {"ground": ground}
    base_state = _fixed_child(ground, rot_y(model.base_angle), model.base_pos)
    frames["base"] = base_state

    net = {"base": _net_wrench(model.base, base_state)}
    chain_angles = {}
    per_stage = []  # bookkeeping for the backward pass

    state = base_state
    for k, stage in enumerate(model.stages):
        x, xd, xdd = q[..., k], qd[..., k], qdd[..., k]
        if isinstance(stage, ClosedChainStage):
            geom = stage.geometry
            (qh, qh_d, qh_dd), (qa, qa_d, qa_dd), (qp, qp_d, qp_dd) = closure_rates(
                geom, x, xd, xdd
            )
            if np.any(np.abs(np.sin(qp)) < SINGULARITY_TOL):
                raise SingularConfigurationError(
                    f"{stage.name}: pin angle within {SINGULARITY_TOL} of a fold"
                )
            c = x + geom.zero_stroke_len
            theta_a = stage.base_angle

            hinge_base = _fixed_child(state, rot_y(theta_a), stage.hinge_pos)
            boom = _revolute_y_child(hinge_base, np.zeros(3), qh, qh_d, qh_dd)
            pin_upper = _fixed_child(boom, np.eye(3), geom.rocker_len * EX)
            anchor_base = _fixed_child(state, rot_y(theta_a + np.pi), stage.anchor_pos)
            barrel = _revolute_y_child(anchor_base, np.zeros(3), -qa, -qa_d, -qa_dd)
            rod = _prismatic_x_child(barrel, c - geom.rod_frame_setback, xd, xdd)
            pin_lower = _revolute_y_child(
                rod, geom.rod_frame_setback * EX, -qp, -qp_d, -qp_dd
            )
            mount = _fixed_child(boom, rot_y(stage.mount_angle), stage.mount_pos)

            nm = stage.name
            frames.update(
                {
                    f"{nm}.hinge_base": hinge_base,
                    f"{nm}.boom": boom,
                    f"{nm}.pin_upper": pin_upper,
                    f"{nm}.anchor_base": anchor_base,
                    f"{nm}.barrel": barrel,
                    f"{nm}.rod": rod,
                    f"{nm}.pin_lower": pin_lower,
                    f"{nm}.mount": mount,
                }
            )
            net[f"{nm}.boom"] = _net_wrench(stage.boom, boom)
            net[f"{nm}.barrel"] = _net_wrench(stage.barrel, barrel)
            net[f"{nm}.rod"] = _net_wrench(stage.rod, rod)
            chain_angles[nm] = (qh, qa, qp)
            per_stage.append(("chain", stage, {"q_pin": qp, "c": c}))
            state = mount
        else:
            slide = _fixed_child(state, np.eye(3), stage.slide_pos)
            carriage = _prismatic_x_child(slide, x, xd, xdd)
            mount = _fixed_child(carriage, rot_y(stage.mount_angle), stage.mount_pos)
            nm = stage.name
            frames[f"{nm}.slide"] = slide
            frames[f"{nm}.carriage"] = carriage
            frames[f"{nm}.mount"] = mount
            net[f"{nm}.carriage"] = _net_wrench(stage.carriage, carriage)
            per_stage.append(("telescope", stage, {"x": x}))
            state = mount

    # backward pass: aggregate leaf-to-root, resolving each chain's pin force
    frame_forces = {}
    piston = [None] * model.n_joints
    carried = np.zeros(batch + (6,))  # wrench entering the mount of the current stage
    for k in range(model.n_joints - 1, -1, -1):
        kind, stage, info = per_stage[k]
        nm = stage.name
        if kind == "telescope":
            subtree = net[f"{nm}.carriage"] + _force_to_parent(
                rot_y(stage.mount_angle), stage.mount_pos, carried
            )
            frame_forces[f"{nm}.carriage"] = subtree
            piston[k] = subtree @ ChainModel.PISTON_AXIS
            # transmitted through the slide to the carrying body
            x = info["x"]
            at_slide = _force_to_parent(None, x[..., None] * EX, subtree)
            carried = _force_to_parent(np.eye(3), stage.slide_pos, at_slide)
            frame_forces[f"{nm}.stage_total"] = carried
        else:
            geom = stage.geometry
            qh, qa, qp = chain_angles[nm]
            c = info["c"]
            f_rod = net[f"{nm}.rod"]
            f_barrel = net[f"{nm}.barrel"]
            boom_subtree = net[f"{nm}.boom"] + _force_to_parent(
                rot_y(stage.mount_angle), stage.mount_pos, carried
            )
            frame_forces[f"{nm}.boom_subtree"] = boom_subtree

            # constraint resolution (moments about the hinge, anchor and pin
            # y-axes): lateral slide force, then the axial piston force
            ax_f = ChainModel.PISTON_AXIS
            ax_l = ChainModel.LATERAL_AXIS
            ax_m = ChainModel.HINGE_MOMENT_AXIS
            lam = (
                f_barrel @ ax_m + f_rod @ ax_m + geom.rod_frame_setback * (f_rod @ ax_l)
            ) / c
            sin_qp, tan_qp = np.sin(qp), np.tan(qp)
            f_c = (
                f_rod @ ax_f
                + (lam - f_rod @ ax_l) / tan_qp
                + (boom_subtree @ ax_m) / (geom.rocker_len * sin_qp)
            )
            piston[k] = f_c

            # pin force applied by the rod to the driven link, rod-frame axes
            pin_force_rod = np.zeros(batch + (6,))
            pin_force_rod[..., 0] = f_c - f_rod @ ax_f
            pin_force_rod[..., 2] = lam - f_rod @ ax_l
            pin_in_pin = _force_to_parent(
                np.swapaxes(rot_y(-qp), -1, -2), np.zeros(3), pin_force_rod
            )
            frame_forces[f"{nm}.pin_upper"] = pin_in_pin
            frame_forces[f"{nm}.pin_lower"] = -pin_in_pin

            # hinge bearing force: upper subtree minus the pin contribution
            pin_at_boom = _force_to_parent(None, geom.rocker_len * EX, pin_in_pin)
            hinge_at_boom = boom_subtree - pin_at_boom
            hinge = _force_to_parent(rot_y(qh), np.zeros(3), hinge_at_boom)
            frame_forces[f"{nm}.hinge_base"] = hinge

            # anchor bearing force: the slide transmits the rod net plus the
            # pin load the driven link puts back on the rod
            rod_total = f_rod + _force_to_parent(
                rot_y(-qp), geom.rod_frame_setback * EX, pin_in_pin
            )
            lower_at_barrel = f_barrel + _force_to_parent(
                None, (c - geom.rod_frame_setback)[..., None] * EX, rod_total
            )
            anchor = _force_to_parent(rot_y(-qa), np.zeros(3), lower_at_barrel)
            frame_forces[f"{nm}.anchor_base"] = anchor

            theta_a = stage.base_angle
            carried = _force_to_parent(rot_y(theta_a), stage.hinge_pos, hinge) + _force_to_parent(
                rot_y(theta_a + np.pi), stage.anchor_pos, anchor
            )
            frame_forces[f"{nm}.stage_total"] = carried

    base_total = net["base"] + carried
    frame_forces["base"] = base_total
    frame_forces["ground"] = _force_to_parent(
        rot_y(model.base_angle), model.base_pos, base_total
    )

    return DynamicsState(
        model=model,
        q=q,
        qd=qd,
        qdd=qdd,
        frames=frames,
        net_wrenches=net,
        frame_forces=frame_forces,
        piston_forces=np.stack(piston, axis=-1),
        chain_angles=chain_angles,
    )


# ---------------------------------------------------------------------------
# public API


def forward_velocities(model: ChainModel, q, qd) -> dict:
    """Body-frame spatial velocities of every frame at configuration (q, qd)."""
    state = _evaluate(model, q, qd, np.zeros_like(np.asarray(q, dtype=float)))
    return {name: SpatialVec(f[2], MOTION) for name, f in state.frames.items()}


def backward_forces(model: ChainModel, q, qd, qdd) -> dict:
    """Transmitted wrenches per frame (joint bearing forces, pin forces,
    per-stage totals and the ground reaction)."""
    return {
        name: SpatialVec(f, FORCE)
        for name, f in _evaluate(model, q, qd, qdd).frame_forces.items()
    }


def actuator_force(model: ChainModel, q, qd, qdd) -> np.ndarray:
    """Axial piston force per stage, from the chain constraint resolution."""
    return _evaluate(model, q, qd, qdd).piston_forces


def rnea(model: ChainModel, q, qd, qdd):
    """Inverse dynamics: piston velocities and forces for a stroke trajectory.

    Accepts single configurations (shape (n,)) or batches (..., n); the
    piston velocities equal the stroke rates since the strokes are the
    generalized coordinates.
    """
    state = _evaluate(model, q, qd, qdd)
    return state.qd.copy(), state.piston_forces


def evaluate_dynamics(model: ChainModel, q, qd, qdd) -> DynamicsState:
    """Full evaluation object for callers that need frames and wrenches."""
    return _evaluate(model, q, qd, qdd)


def kinetic_energy(model: ChainModel, q, qd):
    """Total kinetic energy [J] at (q, qd)."""
    state = _evaluate(model, q, qd, np.zeros_like(np.asarray(q, dtype=float)))
    total = 0.0
    for name, body in _iter_bodies(model):
        vel = state.frames[name][2]
        total = total + 0.5 * np.einsum(
            "...i,ij,...j->...", vel, body.mass_matrix(), vel
        )
    return total


def potential_energy(model: ChainModel, q):
    """Total gravitational potential energy [J] (g from each body's params)."""
    qz = np.zeros_like(np.asarray(q, dtype=float))
    state = _evaluate(model, q, qz, qz)
    total = 0.0
    for name, body in _iter_bodies(model):
        r_w, p_w = state.frames[name][0], state.frames[name][1]
        com_world = p_w + _mat_vec(r_w, np.broadcast_to(body.com_offset, p_w.shape))
        total = total + body.mass * np.einsum("...i,i->...", com_world, body.gravity)
    return total


def _iter_bodies(model: ChainModel):
    yield "base", model.base
    for stage in model.stages:
        if isinstance(stage, ClosedChainStage):
            yield f"{stage.name}.boom", stage.boom
            yield f"{stage.name}.barrel", stage.barrel
            yield f"{stage.name}.rod", stage.rod
        else:
            yield f"{stage.name}.carriage", stage.carriage
