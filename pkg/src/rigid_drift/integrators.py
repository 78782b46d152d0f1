"""One-step maps for the rigid body on SO(3).

``step_lie_newmark`` (NMB), ``step_lie_verlet`` (VLV) and ``step_liemid_ea``
are symmetric, second-order Lie group methods. Their implicit substeps only
involve the angular velocity (or the rotation increment), never the torque,
and are solved by plain fixed-point iteration. ``step_rk4_reference`` is a
classical RK4 step on the flattened 12-dimensional system, used as a
high-accuracy reference over short horizons.
"""
from dataclasses import dataclass

import numpy as np

from .dynamics import State, continuous_rhs, torque
from .so3 import cay, cross, expmap


class NoConvergence(RuntimeError):
    """Fixed-point iteration did not meet the tolerance."""

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-12
    max_iterations: int = 50

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be an integer >= 1, got {self.max_iterations!r}")


DEFAULT_SOLVER = SolverConfig()


@dataclass(frozen=True)
class StepResult:
    state: State
    solver_iterations: int


def fixed_point_solve(fn, guess, cfg=DEFAULT_SOLVER):
    """Iterate ``v <- fn(v)`` until the sup-norm of the increment is below tolerance.

    Once the test passes one more evaluation of ``fn`` is applied, which for a
    contraction with factor ``L`` leaves an error of order ``L**2 * tol``
    rather than ``L * tol``.

    Returns:
        ``(v, iterations)`` where ``iterations`` counts the evaluations of
        ``fn`` up to and including the one that passed the test.

    Raises:
        NoConvergence: after ``cfg.max_iterations`` evaluations; carries the
            last iterate and its increment.
    """
    v = np.asarray(guess, dtype=float)
    increment = np.inf
    for k in range(1, cfg.max_iterations + 1):
        new = fn(v)
        increment = float(np.max(np.abs(new - v)))
        v = new
        if increment <= cfg.tolerance:
            return fn(v), k
    raise NoConvergence(
        f"fixed-point iteration did not converge in {cfg.max_iterations} iterations "
        f"(last increment {increment:.3e})",
        iterate=v,
        residual=increment,
    )


def _euler_rate(inertia, W):
    """``I W x W``."""
    return cross(inertia.apply(W), W)


def step_lie_newmark(inertia, p, s, h, cfg=DEFAULT_SOLVER):
    """Lie-Newmark: explicit half kick, Cayley drift, velocity-implicit half kick."""
    half = 0.5 * h
    W_half = s.W + half * inertia.solve(_euler_rate(inertia, s.W) + torque(p, s.Q))
    Q_next = s.Q @ cay(h * W_half)
    tau_next = torque(p, Q_next)

    def update(W):
        return W_half + half * inertia.solve(_euler_rate(inertia, W) + tau_next)

    W_next, iters = fixed_point_solve(update, W_half, cfg)
    return StepResult(State(Q_next, W_next), iters)


def step_lie_verlet(inertia, p, s, h, cfg=DEFAULT_SOLVER):
    """Lie-Verlet: implicit half kick with the cubic correction, Cayley drift, explicit half kick."""
    half = 0.5 * h
    tau = torque(p, s.Q)

    def update(V):
        IV = inertia.apply(V)
        return s.W + half * inertia.solve(cross(IV, V) - half * float(V @ IV) * V + tau)

    W_half, iters = fixed_point_solve(update, s.W, cfg)
    Q_next = s.Q @ cay(h * W_half)
    I_half = inertia.apply(W_half)
    W_next = W_half + half * inertia.solve(
        cross(I_half, W_half) + half * float(W_half @ I_half) * W_half + torque(p, Q_next)
    )
    return StepResult(State(Q_next, W_next), iters)


def step_liemid_ea(inertia, p, s, h, cfg=DEFAULT_SOLVER):
    """Explicit Lie-midpoint LIEMID[EA]: half step of a Lie-midpoint rule and its adjoint.

    The closing momentum update is rotated back by the increment solved in the
    second half step. Rotating by the first-half increment instead gives a
    non-symmetric, first-order method.
    """
    half = 0.5 * h
    momentum = inertia.apply(s.W) + half * torque(p, s.Q)

    def first(theta):
        return half * inertia.solve(expmap(-0.5 * theta) @ momentum)

    theta_a, iters_a = fixed_point_solve(first, half * s.W, cfg)
    Q_half = s.Q @ expmap(theta_a)
    pi_half = expmap(-theta_a) @ momentum
    W_half = inertia.solve(pi_half)

    def second(theta):
        return half * inertia.solve(expmap(-0.5 * theta) @ pi_half)

    theta_b, iters_b = fixed_point_solve(second, half * W_half, cfg)
    Q_next = Q_half @ expmap(theta_b)
    W_next = inertia.solve(expmap(-theta_b) @ pi_half + half * torque(p, Q_next))
    return StepResult(State(Q_next, W_next), max(iters_a, iters_b))


def step_rk4_reference(inertia, p, s, h):
    """Classical RK4 on the 9 + 3 components of ``(Q, W)``; no projection onto SO(3)."""

    def rhs(Q, W):
        return continuous_rhs(inertia, p, State(Q, W))

    Q, W = s.Q, s.W
    k1q, k1w = rhs(Q, W)
    k2q, k2w = rhs(Q + 0.5 * h * k1q, W + 0.5 * h * k1w)
    k3q, k3w = rhs(Q + 0.5 * h * k2q, W + 0.5 * h * k2w)
    k4q, k4w = rhs(Q + h * k3q, W + h * k3w)
    sixth = h / 6.0
    return State(
        Q + sixth * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        W + sixth * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )


STEPPERS = {
    "nmb": step_lie_newmark,
    "vlv": step_lie_verlet,
    "liemid-ea": step_liemid_ea,
}
