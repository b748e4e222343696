"""Rigid motions of the plane and of 3-space: twists, exponential and
logarithm maps, and the distances used for convergence tests and error
reporting.

Rotations are n x n orthonormal matrices with determinant +1, n in {2, 3}.
A twist is the pair (omega, v): omega holds the coefficients of the skew
basis J^pq = E_pq - E_qp (p < q), v is the linear velocity.  For n = 3 the
three coefficients are stored in the usual cross-product convention, so
that hat(omega) @ x == cross(omega, x); for n = 2 omega is a single
coefficient multiplying J^12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Switch the exponential coefficients to their series expansion below this
# rotation magnitude; sin(t*theta)/theta and friends lose digits earlier,
# the series is exact to machine precision here.
SMALL_ANGLE = 1e-8

# The rotation logarithm is numerically meaningless this close to the
# pi branch cut.
BRANCH_CUT_MARGIN = 1e-6

# Composed rotations are re-projected onto the orthonormal manifold once
# accumulated drift exceeds this Frobenius norm.
ROTATION_DRIFT_TOL = 1e-9

# Construction rejects matrices further than this from any rotation;
# beyond it the input is garbage, not drift.
ROTATION_REJECT_TOL = 1e-6


class BranchCutError(ValueError):
    """Rotation angle is at or beyond pi - 1e-6, where log is unstable."""


def _as_float_array(a, name: str) -> np.ndarray:
    out = np.array(a, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    return out


@dataclass(frozen=True)
class Twist:
    """Element of the Lie algebra: skew coefficients plus linear velocity."""

    omega: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        omega = _as_float_array(self.omega, "omega")
        v = _as_float_array(self.v, "v")
        if (v.shape, omega.shape) not in {((2,), (1,)), ((3,), (3,))}:
            raise ValueError(
                f"unsupported twist shapes omega={omega.shape}, v={v.shape};"
                " expected (1,)/(2,) or (3,)/(3,)"
            )
        omega.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    def hat(self) -> np.ndarray:
        return hat(self.omega)

    def norms(self) -> tuple[float, float]:
        """(rotation coefficient norm, translation norm)."""
        return float(np.linalg.norm(self.omega)), float(np.linalg.norm(self.v))


def hat(omega: np.ndarray) -> np.ndarray:
    """Skew matrix from coefficients; inverse of vee."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape == (3,):
        wx, wy, wz = omega
        return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])
    if omega.shape == (1,):
        (c,) = omega
        return np.array([[0.0, c], [-c, 0.0]])
    raise ValueError(f"unsupported omega shape {omega.shape}")


def vee(m: np.ndarray) -> np.ndarray:
    """Coefficients from a skew matrix; inverse of hat."""
    m = np.asarray(m, dtype=float)
    if m.shape == (3, 3):
        return np.array([m[2, 1], m[0, 2], m[1, 0]])
    if m.shape == (2, 2):
        return np.array([m[0, 1]])
    raise ValueError(f"unsupported matrix shape {m.shape}")


def _project_rotation(r: np.ndarray) -> np.ndarray:
    """Nearest rotation in Frobenius norm (polar projection via SVD)."""
    u, _, vt = np.linalg.svd(r)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


@dataclass(frozen=True)
class Isometry:
    """Rigid motion x -> R @ x + T."""

    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = _as_float_array(self.r, "rotation")
        t = _as_float_array(self.t, "translation")
        n = t.shape[0] if t.ndim == 1 else 0
        if n not in (2, 3) or r.shape != (n, n):
            raise ValueError(f"inconsistent shapes r={r.shape}, t={t.shape}")
        drift = np.linalg.norm(r @ r.T - np.eye(n))
        if drift > ROTATION_REJECT_TOL or np.linalg.det(r) <= 0.0:
            raise ValueError("matrix is not a rotation (orthonormality or det)")
        if drift > ROTATION_DRIFT_TOL:
            r = _project_rotation(r)
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.t.shape[0]

    @classmethod
    def identity(cls, n: int = 3) -> "Isometry":
        return cls(np.eye(n), np.zeros(n))

    def compose(self, other: "Isometry") -> "Isometry":
        """self followed after other: (self * other)(x) = self(other(x))."""
        return Isometry(self.r @ other.r, self.r @ other.t + self.t)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return self.compose(other)

    def inverse(self) -> "Isometry":
        rt = self.r.T
        return Isometry(rt, -(rt @ self.t))

    def act(self, points: np.ndarray) -> np.ndarray:
        """Apply to one point (n,) or a stack of points (N, n)."""
        points = np.asarray(points, dtype=float)
        return points @ self.r.T + self.t

    def inverse_act(self, points: np.ndarray) -> np.ndarray:
        """Apply the inverse motion without forming it."""
        points = np.asarray(points, dtype=float)
        return (points - self.t) @ self.r

    def matrix(self) -> np.ndarray:
        """Homogeneous (n+1) x (n+1) matrix."""
        n = self.n
        m = np.eye(n + 1)
        m[:n, :n] = self.r
        m[:n, n] = self.t
        return m


def _exp_coefficients(theta: float, t: float) -> tuple[float, float, float]:
    """Coefficients (A, B, C) of the closed-form rigid exponential.

    exp of t*(omega, v) has rotation I + A*hat + B*hat^2 and translation
    (t*I + B*hat + C*hat^2) @ v, using hat^3 = -theta^2 * hat.
    """
    x = t * theta
    if theta < SMALL_ANGLE:
        x2 = x * x
        a = t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0)
        b = t * t * (0.5 - x2 / 24.0 + x2 * x2 / 720.0 - x2 * x2 * x2 / 40320.0)
        c = t ** 3 * (
            1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362880.0
        )
        return a, b, c
    th2 = theta * theta
    a = np.sin(x) / theta
    # 1 - cos(x) written as 2 sin^2(x/2): the direct form loses all digits
    # for small x and this coefficient is multiplied by hat, not hat^2
    half = np.sin(0.5 * x)
    b = 2.0 * half * half / th2
    c = (x - np.sin(x)) / (th2 * theta)
    return a, b, c


def exp_twist(xi: Twist, t: float = 1.0) -> Isometry:
    """Closed-form exponential of the scaled twist t * xi."""
    n = xi.n
    w = xi.hat()
    theta = float(np.linalg.norm(xi.omega))
    a, b, c = _exp_coefficients(theta, t)
    w2 = w @ w
    r = np.eye(n) + a * w + b * w2
    trans = (t * np.eye(n) + b * w + c * w2) @ xi.v
    return Isometry(r, trans)


def _rotation_angle(r: np.ndarray) -> float:
    """Unsigned rotation angle in [0, pi] for n in {2, 3}."""
    n = r.shape[0]
    if n == 3:
        s = 0.5 * np.linalg.norm(vee(r - r.T))
        c = 0.5 * (np.trace(r) - 1.0)
    else:
        s = abs(r[0, 1])
        c = r[0, 0]
    return float(np.arctan2(s, min(max(c, -1.0), 1.0)))


def log_iso(h: Isometry) -> Twist:
    """Logarithm of a rigid motion.

    Raises BranchCutError once the rotation angle reaches pi - 1e-6; the
    axis is not recoverable from the skew part there.
    """
    n = h.n
    theta = _rotation_angle(h.r)
    if theta >= np.pi - BRANCH_CUT_MARGIN:
        raise BranchCutError(f"rotation angle {theta:.9f} too close to pi")
    if n == 3:
        half = vee(h.r - h.r.T) * 0.5  # sin(theta) * axis
        if theta < 1e-4:
            # theta/sin(theta) to machine precision without the 0/0
            th2 = theta * theta
            scale = 1.0 + th2 / 6.0 + 7.0 * th2 * th2 / 360.0
        else:
            scale = theta / np.sin(theta)
        omega = half * scale
    else:
        omega = np.array([np.arctan2(h.r[0, 1], h.r[0, 0])])
    _, b, c = _exp_coefficients(theta, 1.0)
    w = hat(omega)
    v_mat = np.eye(n) + b * w + c * (w @ w)
    v = np.linalg.solve(v_mat, h.t)
    return Twist(omega, v)


def rot_distance(h1: Isometry, h2: Isometry) -> float:
    """Frobenius norm of log(R1 @ R2^T); equals sqrt(2) * angle."""
    return np.sqrt(2.0) * _rotation_angle(h1.r @ h2.r.T)


def trans_distance(h1: Isometry, h2: Isometry) -> float:
    """Norm of the translation block of h1 * h2^-1."""
    return float(np.linalg.norm(h1.t - h1.r @ h2.r.T @ h2.t))


def iso_distance(h1: Isometry, h2: Isometry) -> float:
    """Frobenius norm of the matrix log of h1 * h2^-1.

    Inherits the branch-cut error from log_iso when the relative rotation
    is within 1e-6 of pi.
    """
    xi = log_iso(h1 @ h2.inverse())
    w, v = xi.norms()
    return float(np.sqrt(2.0 * w * w + v * v))


# --- text form -------------------------------------------------------------
#
# One pose per line, "tx ty tz qx qy qz qw", unit quaternion with the scalar
# part last.  Written with 17 significant digits so a read-back reproduces
# the same floats.


def _quat_from_rotation(r: np.ndarray) -> np.ndarray:
    from scipy.spatial.transform import Rotation as _R

    return _R.from_matrix(r).as_quat()  # scalar-last


def _rotation_from_quat(q: np.ndarray) -> np.ndarray:
    from scipy.spatial.transform import Rotation as _R

    return _R.from_quat(q).as_matrix()


def format_pose(h: Isometry) -> str:
    """'tx ty tz qx qy qz qw' for a spatial isometry."""
    if h.n != 3:
        raise ValueError("pose text form is defined for n = 3 only")
    q = _quat_from_rotation(h.r)
    vals = [*h.t, *q]
    return " ".join(f"{v:.17g}" for v in vals)


def parse_pose(line: str) -> Isometry:
    """Inverse of format_pose."""
    parts = line.split()
    if len(parts) != 7:
        raise ValueError(f"expected 7 fields 'tx ty tz qx qy qz qw', got {len(parts)}")
    vals = np.array([float(p) for p in parts])
    q = vals[3:7]
    norm = np.linalg.norm(q)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"quaternion norm {norm:.6f} is not 1")
    return Isometry(_rotation_from_quat(q / norm), vals[:3])
