"""6-D spatial vector algebra for rigid-body chains.

Spatial vectors stack the linear part on top of the angular part:
velocities [v; w] and forces/moments [f; m], both expressed in a frame
attached to the body.  The frame-to-frame map is the 6x6 block transform
built from a rotation and the skew of the inter-origin offset; velocities
transform with its transpose, forces with the matrix itself, which keeps
the power pairing V.F invariant.

All functions broadcast over leading batch dimensions so a whole
trajectory of poses can be processed in one call.
"""

from dataclasses import dataclass, field

import numpy as np

MOTION = "motion"
FORCE = "force"


def skew(r):
    """Skew-symmetric matrix of a 3-vector: skew(r) @ v == cross(r, v)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape[:-1] + (3, 3))
    rx, ry, rz = r[..., 0], r[..., 1], r[..., 2]
    out[..., 0, 1] = -rz
    out[..., 0, 2] = ry
    out[..., 1, 0] = rz
    out[..., 1, 2] = -rx
    out[..., 2, 0] = -ry
    out[..., 2, 1] = rx
    return out


@dataclass(frozen=True)
class SpatialVec:
    """Role-tagged 6-vector; mixing motion and force arithmetic raises."""

    data: np.ndarray
    kind: str = MOTION

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.shape[-1] != 6:
            raise ValueError("spatial vectors have 6 components")
        if self.kind not in (MOTION, FORCE):
            raise ValueError("kind must be 'motion' or 'force'")
        object.__setattr__(self, "data", arr)

    @property
    def lin(self):
        return self.data[..., :3]

    @property
    def ang(self):
        return self.data[..., 3:]

    def _check(self, other):
        if not isinstance(other, SpatialVec) or other.kind != self.kind:
            raise TypeError("spatial arithmetic requires matching kinds")

    def __add__(self, other):
        self._check(other)
        return SpatialVec(self.data + other.data, self.kind)

    def __sub__(self, other):
        self._check(other)
        return SpatialVec(self.data - other.data, self.kind)

    def __mul__(self, scalar):
        return SpatialVec(self.data * scalar, self.kind)

    __rmul__ = __mul__

    def pair(self, other) -> np.ndarray:
        """Power pairing: motion . force (frame invariant)."""
        if not isinstance(other, SpatialVec) or other.kind == self.kind:
            raise TypeError("pairing requires one motion and one force vector")
        return np.einsum("...i,...i->...", self.data, other.data)


def _orthonormal(r, tol=1e-10):
    err = np.abs(np.swapaxes(r, -1, -2) @ r - np.eye(3)).max()
    return err <= tol and np.all(np.linalg.det(r) > 0)


@dataclass(frozen=True)
class TransformU:
    """Pose of frame B relative to frame A: rotation and origin offset.

    ``rotation`` maps B-frame coordinates into A, ``offset`` is the vector
    from A's origin to B's origin expressed in A.  ``matrix`` assembles the
    6x6 force transform [[R, 0], [skew(r) R, R]].
    """

    rotation: np.ndarray
    offset: np.ndarray
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        off = np.asarray(self.offset, dtype=float)
        if rot.shape[-2:] != (3, 3) or off.shape[-1] != 3:
            raise ValueError("rotation must be (...,3,3) and offset (...,3)")
        if not self._checked and not _orthonormal(rot):
            raise ValueError("rotation is not orthonormal with det +1")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "_checked", True)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @property
    def matrix(self) -> np.ndarray:
        """The 6x6 block transform (force convention)."""
        r = self.rotation
        top = np.concatenate([r, np.zeros(r.shape)], axis=-1)
        bottom = np.concatenate([skew(self.offset) @ r, r], axis=-1)
        return np.concatenate([top, bottom], axis=-2)

    def compose(self, other: "TransformU") -> "TransformU":
        """Transform of other's child frame seen from this one's parent."""
        return TransformU(
            self.rotation @ other.rotation,
            self.offset + np.einsum("...ij,...j->...i", self.rotation, other.offset),
            _checked=True,
        )

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self) -> "TransformU":
        rt = np.swapaxes(self.rotation, -1, -2)
        return TransformU(rt, -np.einsum("...ij,...j->...i", rt, self.offset), _checked=True)

    def apply_point(self, p):
        """Map a point from the child frame to the parent frame."""
        return self.offset + np.einsum("...ij,...j->...i", self.rotation, np.asarray(p, dtype=float))

    def motion_to_child(self, v):
        """Velocity of the common rigid body re-expressed at/in the child frame (U^T V)."""
        arr = v.data if isinstance(v, SpatialVec) else np.asarray(v, dtype=float)
        rt = np.swapaxes(self.rotation, -1, -2)
        lin, ang = arr[..., :3], arr[..., 3:]
        lin_c = np.einsum("...ij,...j->...i", rt, lin + np.cross(ang, self.offset))
        ang_c = np.einsum("...ij,...j->...i", rt, ang)
        out = np.concatenate([lin_c, ang_c], axis=-1)
        return SpatialVec(out, MOTION) if isinstance(v, SpatialVec) else out

    def force_to_parent(self, f):
        """Wrench acting at the child frame re-expressed at/in the parent frame (U F)."""
        arr = f.data if isinstance(f, SpatialVec) else np.asarray(f, dtype=float)
        lin, ang = arr[..., :3], arr[..., 3:]
        lin_p = np.einsum("...ij,...j->...i", self.rotation, lin)
        ang_p = np.einsum("...ij,...j->...i", self.rotation, ang) + np.cross(self.offset, lin_p)
        out = np.concatenate([lin_p, ang_p], axis=-1)
        return SpatialVec(out, FORCE) if isinstance(f, SpatialVec) else out


@dataclass(frozen=True)
class RigidBodyParams:
    """Mass, rotational inertia about the COM (in body axes) and COM offset.

    ``com_offset`` runs from the body frame origin to the center of mass,
    expressed in the body frame.  ``gravity`` is the magnitude-signed world
    vector used by the gravity wrench (default [0, 0, 9.81]; the wrench it
    produces is the support force the body requires).
    """

    mass: float
    inertia: np.ndarray
    com_offset: np.ndarray
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 9.81]))

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0:
            raise ValueError("mass must be > 0")
        if inertia.shape != (3, 3):
            raise ValueError("inertia must be 3x3")
        if np.abs(inertia - inertia.T).max() > 1e-9:
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(inertia) <= 0):
            raise ValueError("inertia must be positive definite")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "com_offset", np.asarray(self.com_offset, dtype=float))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))

    def mass_matrix(self) -> np.ndarray:
        """6x6 spatial inertia about the body frame origin."""
        rx = skew(self.com_offset)
        m = self.mass
        top = np.concatenate([m * np.eye(3), -m * rx], axis=-1)
        bottom = np.concatenate([m * rx, self.inertia - m * (rx @ rx)], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


def coriolis_matrix(body: RigidBodyParams, omega) -> np.ndarray:
    """6x6 Coriolis/centrifugal operator at angular velocity omega (body frame)."""
    wx = skew(omega)
    rx = skew(body.com_offset)
    m = body.mass
    eye_a = body.inertia
    top = np.concatenate([m * wx, -m * (wx @ rx)], axis=-1)
    bottom = np.concatenate(
        [m * (rx @ wx), wx @ eye_a + eye_a @ wx - m * (rx @ wx @ rx)], axis=-1
    )
    return np.concatenate([top, bottom], axis=-2)


def gravity_wrench(body: RigidBodyParams, rot_world) -> np.ndarray:
    """Gravity term [m R g; m skew(r) R g] with R mapping world vectors into the body frame."""
    rot_world = np.asarray(rot_world, dtype=float)
    r_ai = np.swapaxes(rot_world, -1, -2)
    g_body = np.einsum("...ij,j->...i", r_ai, body.gravity) * body.mass
    ang = np.cross(np.broadcast_to(body.com_offset, g_body.shape), g_body)
    return np.concatenate([g_body, ang], axis=-1)


def net_force(body: RigidBodyParams, vel, acc, rot_world):
    """Net wrench a body requires for its current motion, in its own frame.

    ``vel`` and ``acc`` are the body-frame spatial velocity and its apparent
    (frame-relative) time derivative; ``rot_world`` maps body coordinates to
    the world (gravity) frame.  Returns M dV + C(w) V + G.
    """
    tagged = isinstance(vel, SpatialVec)
    v = vel.data if tagged else np.asarray(vel, dtype=float)
    a = acc.data if isinstance(acc, SpatialVec) else np.asarray(acc, dtype=float)
    omega = v[..., 3:]
    out = (
        np.einsum("ij,...j->...i", body.mass_matrix(), a)
        + np.einsum("...ij,...j->...i", coriolis_matrix(body, omega), v)
        + gravity_wrench(body, rot_world)
    )
    return SpatialVec(out, FORCE) if tagged else out


def rot_y(angle):
    """Rotation about the +y axis; broadcasts over the angle array."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(angle.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def planar_angle(v):
    """Angle t of an x-z plane vector such that v = |v| * rot_y(t) @ ex."""
    v = np.asarray(v, dtype=float)
    return np.arctan2(-v[..., 2], v[..., 0])
