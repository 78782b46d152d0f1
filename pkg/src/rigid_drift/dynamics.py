"""Rigid body in a static potential: energies, torque and the equations of motion.

The potential used throughout is

    U(Q) = (dist(Q, I) - 1)**2 - alpha / dist(Q, Qm)

whose first term is minimal on the shell ``dist(Q, I) == 1`` and whose second
term attracts the body toward ``Qm``. Passing ``potential=None`` anywhere
below selects the free rigid body (zero potential, zero torque).
"""
from dataclasses import dataclass
import math

import numpy as np

from .so3 import IDENTITY, dist, hat, rotation_matrix, skew_part_vee, cross, expmap

SINGULAR_DIST = 1e-8


class SingularPotential(ValueError):
    """The configuration is too close to the attraction point ``Qm``."""


class SingularGradient(ValueError):
    """The configuration is too close to the identity for the shell gradient."""


@dataclass(frozen=True)
class InertiaMatrix:
    """Diagonal inertia tensor ``diag(I1, I2, I3)``."""

    I1: float
    I2: float
    I3: float

    def __post_init__(self):
        for name in ("I1", "I2", "I3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"inertia {name} must be positive, got {value!r}")
        object.__setattr__(self, "diag", np.array([self.I1, self.I2, self.I3], dtype=float))

    def matrix(self):
        return np.diag(self.diag)

    def apply(self, W):
        return self.diag * W

    def solve(self, M):
        return M / self.diag


@dataclass(frozen=True)
class PotentialParams:
    """Tuning parameter ``alpha >= 0`` and attraction point ``Qm`` in SO(3)."""

    alpha: float
    Qm: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be nonnegative, got {self.alpha!r}")
        object.__setattr__(self, "Qm", rotation_matrix(self.Qm))


@dataclass(frozen=True)
class State:
    """Configuration ``Q`` and body angular velocity ``W``.

    No SO(3) check happens here, since integrators build one of these every
    step and the orthogonality defect is a quantity we want to observe rather
    than reject. Use :func:`make_state` for validated user input.
    """

    Q: np.ndarray
    W: np.ndarray


def make_state(Q, W):
    W = np.array(W, dtype=float)
    if W.shape != (3,) or not np.all(np.isfinite(W)):
        raise ValueError(f"W must be a finite 3-vector, got {W!r}")
    return State(rotation_matrix(Q), W)


def kinetic_energy(inertia, W):
    return 0.5 * float(W @ (inertia.diag * W))


def _distances(p, Q):
    # the trace form cannot resolve distances below ~1e-8, so guard on |Q - Qm|_F
    gap = float(np.linalg.norm(Q - p.Qm))
    if gap <= SINGULAR_DIST:
        raise SingularPotential(f"dist(Q, Qm) = {gap:.3e} is below {SINGULAR_DIST:.0e}")
    return dist(Q, IDENTITY), dist(Q, p.Qm)


def potential(p, Q):
    """Potential energy at ``Q``; zero when ``p`` is None."""
    if p is None:
        return 0.0
    d_i, d_m = _distances(p, Q)
    return (d_i - 1.0) ** 2 - p.alpha / d_m


def torque(p, Q):
    """Body torque ``tau`` with ``tau(Q)^T y = -DU(Q) . Q y^``.

    Closed form, obtained from ``D tr(A Q) . Q y^ = -y^T vee(AQ - (AQ)^T)``::

        tau = -2 (d_I - 1)/d_I vee(Q - Q^T) - alpha/d_m**3 vee(M - M^T),  M = Qm^T Q
    """
    if p is None:
        return np.zeros(3)
    d_i, d_m = _distances(p, Q)
    if np.linalg.norm(Q - IDENTITY) <= SINGULAR_DIST:
        raise SingularGradient(f"dist(Q, I) = {d_i:.3e} is below {SINGULAR_DIST:.0e}")
    shell = -2.0 * (d_i - 1.0) / d_i * skew_part_vee(Q)
    if p.alpha == 0.0:
        return shell
    M = p.Qm.T @ Q
    return shell - (p.alpha / d_m ** 3) * skew_part_vee(M)


def torque_fd(p, Q, y, eps=1e-5):
    """Central difference ``-[U(Q exp(eps y)) - U(Q exp(-eps y))] / (2 eps)``.

    Independent of :func:`torque`; used to check it.
    """
    y = np.asarray(y, dtype=float)
    up = potential(p, Q @ expmap(eps * y))
    down = potential(p, Q @ expmap(-eps * y))
    return -(up - down) / (2.0 * eps)


def total_energy(inertia, p, s):
    return kinetic_energy(inertia, s.W) + potential(p, s.Q)


def continuous_rhs(inertia, p, s):
    """Right-hand side ``(Q W^, I^{-1}(I W x W + tau(Q)))`` of the equations of motion."""
    Q_dot = s.Q @ hat(s.W)
    W_dot = inertia.solve(cross(inertia.apply(s.W), s.W) + torque(p, s.Q))
    return Q_dot, W_dot
