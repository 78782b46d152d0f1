"""Straight-line transcriptions of the three Lie group steps, used as oracles.

Deliberately independent of the package internals: the Cayley map is formed
by a linear solve, the exponential by ``scipy.linalg.expm``, the torque by
central differences, and every implicit equation is iterated a fixed 200
times.
"""
import numpy as np
from scipy.linalg import expm

N_ITER = 200


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def cayley(x):
    A = 0.5 * skew(x)
    return np.linalg.solve(np.eye(3) - A, np.eye(3) + A)


def rot_exp(x):
    return expm(skew(x))


def metric(Q1, Q2):
    return np.sqrt(max(0.0, 2.0 * np.trace(np.eye(3) - Q1.T @ Q2)))


def potential_energy(alpha, Qm, Q):
    return (metric(Q, np.eye(3)) - 1.0) ** 2 - alpha / metric(Q, Qm)


def fd_torque(alpha, Qm, Q, eps=1e-5):
    """tau_i = -dU/ds along Q exp(s e_i), by central differences (not used in step oracles)."""
    tau = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = eps
        tau[i] = -(potential_energy(alpha, Qm, Q @ rot_exp(e)) - potential_energy(alpha, Qm, Q @ rot_exp(-e))) / (2 * eps)
    return tau


def newmark(Idiag, tau, Q, W, h):
    Iinv = 1.0 / Idiag
    Wh = W + h / 2 * Iinv * (np.cross(Idiag * W, W) + tau(Q))
    Q1 = Q @ cayley(h * Wh)
    t1 = tau(Q1)
    W1 = Wh.copy()
    for _ in range(N_ITER):
        W1 = Wh + h / 2 * Iinv * (np.cross(Idiag * W1, W1) + t1)
    return Q1, W1


def verlet(Idiag, tau, Q, W, h):
    Iinv = 1.0 / Idiag
    t0 = tau(Q)
    Wh = W.copy()
    for _ in range(N_ITER):
        Wh = W + h / 2 * Iinv * (np.cross(Idiag * Wh, Wh) - h / 2 * (Wh @ (Idiag * Wh)) * Wh + t0)
    Q1 = Q @ cayley(h * Wh)
    W1 = Wh + h / 2 * Iinv * (np.cross(Idiag * Wh, Wh) + h / 2 * (Wh @ (Idiag * Wh)) * Wh + tau(Q1))
    return Q1, W1


def liemid(Idiag, tau, Q, W, h):
    Iinv = 1.0 / Idiag
    b = Idiag * W + h / 2 * tau(Q)
    th = np.zeros(3)
    for _ in range(N_ITER):
        th = h / 2 * Iinv * (rot_exp(-0.5 * th) @ b)
    Qh = Q @ rot_exp(th)
    Wh = Iinv * (rot_exp(-th) @ b)
    th1 = np.zeros(3)
    for _ in range(N_ITER):
        th1 = h / 2 * Iinv * (rot_exp(-0.5 * th1) @ (Idiag * Wh))
    Q1 = Qh @ rot_exp(th1)
    W1 = Iinv * (rot_exp(-th1) @ (Idiag * Wh) + h / 2 * tau(Q1))
    return Q1, W1


def random_states(n, seed):
    from rigid_drift.dynamics import make_state
    from rigid_drift.so3 import expmap

    rng = np.random.default_rng(seed)
    return [make_state(expmap(rng.uniform(-1.2, 1.2, size=3)), rng.uniform(-1, 1, size=3)) for _ in range(n)]
