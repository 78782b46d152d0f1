"""SO(3) primitives: hat/vee, Cayley and exponential maps, logarithm, metric.

Vectors are ``(3,)`` float arrays and matrices ``(3, 3)`` float arrays. The
maps here never re-orthonormalize their output; drift away from SO(3) is left
visible so callers can monitor it.
"""
import math

import numpy as np

ORTHO_TOL = 1e-10
SKEW_TOL = 1e-9
NEAR_PI_MARGIN = 1e-6
_SMALL_ANGLE = 1e-4

IDENTITY = np.eye(3)
IDENTITY.setflags(write=False)


class NotSkew(ValueError):
    """Raised by :func:`vee` when the input is not skew-symmetric."""


class NotRotation(ValueError):
    """Raised when a matrix fails the SO(3) membership checks."""


class NearPi(ValueError):
    """Raised by :func:`logmap` when the rotation angle is too close to pi."""


def hat(v):
    """Skew matrix of ``v`` so that ``hat(v) @ w == cross(v, w)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(S, tol=SKEW_TOL):
    """Inverse of :func:`hat`; returns ``(S32, S13, S21)``."""
    S = np.asarray(S, dtype=float)
    if np.linalg.norm(S + S.T) > tol:
        raise NotSkew(f"matrix is not skew-symmetric (|S + S^T|_F = {np.linalg.norm(S + S.T):.3e})")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def skew_part_vee(A):
    """``vee(A - A^T)`` for an arbitrary 3x3 matrix."""
    return np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])


def cross(a, b):
    # np.cross carries a lot of overhead for length-3 inputs
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def cay(x):
    """Cayley map ``(I - x^/2)^{-1} (I + x^/2)``.

    Written in closed form as ``I + 4/(4+|x|^2) x^ + 2/(4+|x|^2) x^^2``. It is
    the rotation about ``x/|x|`` by ``2 atan(|x|/2)``.
    """
    X = hat(x)
    denom = 4.0 + float(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    return IDENTITY + (4.0 / denom) * X + (2.0 / denom) * (X @ X)


def _sinc_coefficients(theta):
    """Return ``sin(t)/t`` and ``(1 - cos t)/t^2`` with a Taylor branch near 0."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / (theta * theta)


def expmap(x):
    """Rodrigues formula: rotation about ``x/|x|`` by angle ``|x|``."""
    theta = math.sqrt(float(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
    a, b = _sinc_coefficients(theta)
    X = hat(x)
    return IDENTITY + a * X + b * (X @ X)


def rotation_angle(Q):
    c = 0.5 * (Q[0, 0] + Q[1, 1] + Q[2, 2] - 1.0)
    return math.acos(min(1.0, max(-1.0, c)))


def logmap(Q):
    """Axis-angle vector of ``Q``; inverse of :func:`expmap` below angle pi.

    Raises:
        NearPi: if the rotation angle is within 1e-6 of pi, where the axis
            cannot be recovered from the skew part.
    """
    theta = rotation_angle(Q)
    if theta >= math.pi - NEAR_PI_MARGIN:
        raise NearPi(f"rotation angle {theta!r} too close to pi for logmap")
    if theta < _SMALL_ANGLE:
        scale = 0.5 * (1.0 + theta * theta / 6.0 + 7.0 * theta ** 4 / 360.0)
    else:
        scale = theta / (2.0 * math.sin(theta))
    return scale * skew_part_vee(Q)


def dist(Q1, Q2):
    """Frobenius-induced metric ``sqrt(2 tr(I - Q1^T Q2))`` on SO(3)."""
    # tr(Q1^T Q2) is the entrywise inner product
    tr = float(np.sum(Q1 * Q2))
    return math.sqrt(max(0.0, 2.0 * (3.0 - tr)))


def orthogonality_defect(Q):
    """``|Q^T Q - I|_F``."""
    return float(np.linalg.norm(Q.T @ Q - IDENTITY))


def rotation_matrix(A, tol=ORTHO_TOL):
    """Validate ``A`` as an element of SO(3) and return a read-only copy.

    Nothing is repaired: a matrix that is not orthogonal to within ``tol`` or
    whose determinant is off by more than ``tol`` is rejected.
    """
    Q = np.array(A, dtype=float)
    if Q.shape != (3, 3):
        raise NotRotation(f"expected a 3x3 matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise NotRotation("matrix has non-finite entries")
    defect = orthogonality_defect(Q)
    if defect > tol:
        raise NotRotation(f"|Q^T Q - I|_F = {defect:.3e} exceeds {tol:.1e}")
    det = float(np.linalg.det(Q))
    if abs(det - 1.0) > tol:
        raise NotRotation(f"det(Q) = {det!r} is not +1")
    Q.setflags(write=False)
    return Q
