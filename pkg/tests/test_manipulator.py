import numpy as np
import pytest
from dataclasses import replace

from emlaopt.chain import ClosedChainGeometry, StrokeRangeError
from emlaopt.manipulator import (
    ChainModel,
    ClosedChainStage,
    SingularConfigurationError,
    actuator_force,
    backward_forces,
    evaluate_dynamics,
    forward_velocities,
    kinetic_energy,
    potential_energy,
    rnea,
)
from emlaopt.presets import default_manipulator
from emlaopt.spatial import RigidBodyParams

rng = np.random.default_rng(77)


def random_state(model, margin=0.15):
    lo, hi = model.stroke_limits()
    q = lo + (hi - lo) * rng.uniform(margin, 1 - margin, model.n_joints)
    qd = 0.1 * rng.standard_normal(model.n_joints)
    qdd = 0.3 * rng.standard_normal(model.n_joints)
    return q, qd, qdd


def total_mass(model):
    masses = [model.base.mass]
    for s in model.stages:
        if isinstance(s, ClosedChainStage):
            masses += [s.boom.mass, s.barrel.mass, s.rod.mass]
        else:
            masses.append(s.carriage.mass)
    return sum(masses)


def test_zero_rates_zero_velocities(model):
    q, _, _ = random_state(model)
    vels = forward_velocities(model, q, np.zeros(3))
    for name, v in vels.items():
        assert np.abs(v.data).max() == 0.0, name


def test_closed_chain_velocity_consistency(model):
    for _ in range(20):
        q, qd, qdd = random_state(model)
        st = evaluate_dynamics(model, q, qd, qdd)
        for nm in ("lift", "tilt"):
            dv = st.frames[f"{nm}.pin_upper"][2] - st.frames[f"{nm}.pin_lower"][2]
            da = st.frames[f"{nm}.pin_upper"][3] - st.frames[f"{nm}.pin_lower"][3]
            assert np.abs(dv).max() <= 1e-9
            assert np.abs(da).max() <= 1e-7


def test_end_effector_velocity_matches_fk_difference(model):
    q, qd, _ = random_state(model)
    st = evaluate_dynamics(model, q, qd, np.zeros(3))
    h = 1e-6
    for frame in ("telescope.mount", "tilt.boom", "lift.rod"):
        p_plus = evaluate_dynamics(model, q + h * qd, qd, np.zeros(3)).frames[frame][1]
        p_minus = evaluate_dynamics(model, q - h * qd, qd, np.zeros(3)).frames[frame][1]
        v_world_fd = (p_plus - p_minus) / (2 * h)
        r_w, _, vel, _ = st.frames[frame]
        assert np.abs(r_w @ vel[:3] - v_world_fd).max() < 1e-6


def test_nearly_massless_bodies_give_no_forces():
    model = default_manipulator()
    scaled = model.scaled_masses(1e-9)
    q, qd, qdd = random_state(scaled)
    forces = backward_forces(scaled, q, qd, qdd)
    for name, f in forces.items():
        assert np.abs(f.data).max() < 1e-4, name


def test_static_ground_reaction_is_total_weight(model):
    q, _, _ = random_state(model)
    st = evaluate_dynamics(model, q, np.zeros(3), np.zeros(3))
    fg = st.frame_forces["ground"]
    assert np.abs(fg[0]) < 1e-8
    assert np.abs(fg[1]) < 1e-8
    assert np.isclose(fg[2], total_mass(model) * 9.81, rtol=1e-12)


def test_ground_wrench_equals_momentum_rate_plus_gravity(model):
    q, qd, qdd = random_state(model)
    h = 1e-6

    def world_momentum(qq, qqd):
        st = evaluate_dynamics(model, qq, qqd, np.zeros(3))
        total = np.zeros(6)
        from emlaopt.manipulator import _iter_bodies

        for name, body in _iter_bodies(model):
            r_w, p_w, vel, _ = st.frames[name]
            h_body = body.mass_matrix() @ vel
            lin = r_w @ h_body[:3]
            ang = r_w @ h_body[3:] + np.cross(p_w, lin)
            total += np.concatenate([lin, ang])
        return total

    mom_dot = (
        world_momentum(q + h * qd, qd + h * qdd) - world_momentum(q - h * qd, qd - h * qdd)
    ) / (2 * h)
    st = evaluate_dynamics(model, q, qd, qdd)
    fg = st.frame_forces["ground"]  # ground frame == world frame here
    weight = total_mass(model) * 9.81
    assert np.allclose(fg[:3], mom_dot[:3] + np.array([0, 0, weight]), rtol=1e-5, atol=1e-3)


def test_static_forces_match_potential_gradient(model):
    lo, hi = model.stroke_limits()
    q = lo + (hi - lo) * 0.5
    _, f = rnea(model, q, np.zeros(3), np.zeros(3))
    h = 1e-6
    for i in range(3):
        dq = np.zeros(3)
        dq[i] = h
        grad = (potential_energy(model, q + dq) - potential_energy(model, q - dq)) / (2 * h)
        assert np.isclose(f[i], grad, rtol=1e-6, atol=1e-3)


def test_doubling_masses_doubles_static_forces(model):
    q, _, _ = random_state(model)
    _, f1 = rnea(model, q, np.zeros(3), np.zeros(3))
    _, f2 = rnea(model.scaled_masses(2.0), q, np.zeros(3), np.zeros(3))
    assert np.allclose(f2, 2.0 * f1, rtol=1e-12)


def test_power_identity_on_smooth_trajectory(model):
    lo, hi = model.stroke_limits()
    mid, amp = (lo + hi) / 2, 0.28 * (hi - lo)
    phases = np.array([0.0, 1.1, 2.3])

    def traj(t):
        t = np.atleast_1d(t)
        arg = 2 * np.pi * t[:, None] + phases
        q = mid + amp * np.sin(arg)
        qd = amp * 2 * np.pi * np.cos(arg)
        qdd = -amp * (2 * np.pi) ** 2 * np.sin(arg)
        return q, qd, qdd

    ts = np.linspace(0.0, 0.63, 1500)
    q, qd, qdd = traj(ts)
    v, f = rnea(model, q, qd, qdd)
    from scipy.integrate import simpson

    work = simpson(np.sum(v * f, axis=1), x=ts)
    e0 = kinetic_energy(model, q[0], qd[0]) + potential_energy(model, q[0])
    e1 = kinetic_energy(model, q[-1], qd[-1]) + potential_energy(model, q[-1])
    assert abs(work - (e1 - e0)) <= 1e-5 * max(1.0, abs(e1 - e0))


def test_actuator_force_equals_virtual_work_dynamically(model):
    """f . qd equals the mechanical energy rate at a random dynamic state."""
    q, qd, qdd = random_state(model)
    v, f = rnea(model, q, qd, qdd)
    h = 1e-6
    e_p = kinetic_energy(model, q + h * qd, qd + h * qdd) + potential_energy(model, q + h * qd)
    e_m = kinetic_energy(model, q - h * qd, qd - h * qdd) + potential_energy(model, q - h * qd)
    e_dot = (e_p - e_m) / (2 * h)
    assert np.isclose(np.sum(f * v), e_dot, rtol=1e-6, atol=1e-2)


def test_stage_total_equals_net_wrench_sum(model):
    """The constraint-path aggregation must match the direct subtree sum."""
    q, qd, qdd = random_state(model)
    st = evaluate_dynamics(model, q, qd, qdd)
    fg = st.frame_forces["ground"]
    total = np.zeros(6)
    from emlaopt.manipulator import _iter_bodies

    for name, body in _iter_bodies(model):
        r_w, p_w, _, _ = st.frames[name]
        f6 = st.net_wrenches[name]
        lin = r_w @ f6[:3]
        ang = r_w @ f6[3:] + np.cross(p_w, lin)
        total += np.concatenate([lin, ang])
    assert np.allclose(fg, total, rtol=1e-9, atol=1e-6)


def test_infeasible_configuration_raises(model):
    lo, hi = model.stroke_limits()
    bad = hi + 1.0
    with pytest.raises(StrokeRangeError):
        forward_velocities(model, bad, np.zeros(3))


def test_singular_configuration_detected():
    # stroke range ends within ~4e-13 of the fully unfolded triangle, where
    # the pin angle's sine drops below the singularity threshold
    geom = ClosedChainGeometry(
        base_len=1.0, rocker_len=0.6, barrel_len=1.0, rod_root_len=0.5,
        rod_frame_setback=0.1, stroke_min=-0.1, stroke_max=0.1 - 4e-13,
    )
    body = RigidBodyParams(mass=10.0, inertia=np.eye(3), com_offset=np.zeros(3))
    model = ChainModel(
        base=body,
        base_pos=np.zeros(3),
        stages=(
            ClosedChainStage(
                name="j", geometry=geom,
                hinge_pos=np.zeros(3), anchor_pos=np.array([1.0, 0.0, 0.0]),
                boom=body, barrel=body, rod=body,
                mount_pos=np.array([0.6, 0.0, 0.0]),
            ),
        ),
    )
    with pytest.raises(SingularConfigurationError):
        rnea(model, np.array([0.1 - 4.1e-13]), np.zeros(1), np.zeros(1))


def test_batch_matches_scalar(model):
    q, qd, qdd = random_state(model)
    qs = np.stack([q, q * 1.01, q * 0.99])
    qds = np.stack([qd, -qd, 0.5 * qd])
    qdds = np.stack([qdd, qdd, -qdd])
    vb, fb = rnea(model, qs, qds, qdds)
    for k in range(3):
        v1, f1 = rnea(model, qs[k], qds[k], qdds[k])
        assert np.array_equal(fb[k], f1)
        assert np.array_equal(vb[k], v1)


def test_zero_gravity_zero_motion_zero_forces(model_no_gravity):
    lo, hi = model_no_gravity.stroke_limits()
    q = 0.5 * (lo + hi)
    f = actuator_force(model_no_gravity, q, np.zeros(3), np.zeros(3))
    assert np.abs(f).max() < 1e-9


def test_actuator_force_public_wrapper(model):
    q, qd, qdd = random_state(model)
    f = actuator_force(model, q, qd, qdd)
    _, f2 = rnea(model, q, qd, qdd)
    assert np.array_equal(f, f2)


def test_net_wrench_matches_spatial_net_force(model):
    """The fast in-line wrench evaluation equals the public net_force op."""
    from emlaopt.manipulator import _iter_bodies, _net_wrench
    from emlaopt.spatial import net_force

    q, qd, qdd = random_state(model)
    st = evaluate_dynamics(model, q, qd, qdd)
    for name, body in _iter_bodies(model):
        frame = st.frames[name]
        fast = _net_wrench(body, frame)
        slow = net_force(body, frame[2], frame[3], frame[0])
        assert np.allclose(fast, slow, rtol=1e-12, atol=1e-9)
