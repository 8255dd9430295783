"""Screw Jacobians of the chain pose and Hessians of the wrench-weighted pose.

Jacobian columns are hybrid twists: velocity of the end point followed by the
angular velocity, both in the base frame. For a coordinate acting on unit axis
``u`` located at point ``p`` (prefix frame before the factor):

* prismatic: ``(u, 0)``
* revolute: ``(u x (p_end - p), u)``

The Hessian blocks are second derivatives of ``F . pose_diff(g(q, theta), g0)``
taken at the evaluation point. They are computed in closed form from the same
screws: the derivative of column ``a`` with respect to coordinate ``b`` only
involves the screws of factors that precede ``a``, plus the end-point velocity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import se3
from .chain import ChainModel


@dataclass(frozen=True)
class JacobianPair:
    J_theta: np.ndarray  # (6, m)
    J_q: np.ndarray  # (6, n)
    q: np.ndarray
    theta: np.ndarray


@dataclass(frozen=True)
class HessianSet:
    H_qq: np.ndarray  # (n, n)
    H_qtheta: np.ndarray  # (n, m)
    H_thetatheta: np.ndarray  # (m, m)
    q: np.ndarray
    theta: np.ndarray
    F: np.ndarray

    @property
    def H_thetaq(self) -> np.ndarray:
        return self.H_qtheta.T

    def full(self) -> np.ndarray:
        """Assembled ``(n+m, n+m)`` Hessian in ``(q, theta)`` order."""
        return np.block([[self.H_qq, self.H_qtheta], [self.H_qtheta.T, self.H_thetatheta]])


@dataclass(frozen=True)
class _Screws:
    """Per-coordinate screw data in chain order."""

    axes: np.ndarray  # (N, 3) unit axes in base frame
    points: np.ndarray  # (N, 3) prefix origins
    revolute: np.ndarray  # (N,) bool
    cols: np.ndarray  # (N,) column in the (q, theta) stacked coordinate vector
    p_end: np.ndarray
    T_end: np.ndarray

    def twists(self) -> np.ndarray:
        """(N, 6) Jacobian columns in chain order."""
        V = np.where(self.revolute[:, None], np.cross(self.axes, self.p_end - self.points), self.axes)
        W = np.where(self.revolute[:, None], self.axes, 0.0)
        return np.hstack([V, W])


def _screws(chain: ChainModel, q, theta) -> _Screws:
    prefixes, T_end = chain.frames(q, theta)
    coord_factors = [f for f in chain.factors if f.coord is not None]
    N = len(coord_factors)
    axes = np.empty((N, 3))
    points = np.empty((N, 3))
    revolute = np.empty(N, dtype=bool)
    cols = np.empty(N, dtype=int)
    for k, (f, A) in enumerate(zip(coord_factors, prefixes)):
        axes[k] = A[:3, :3] @ se3.axis_vector(f.axis)
        points[k] = A[:3, 3]
        revolute[k] = se3.is_revolute(f.axis)
        cols[k] = f.index if f.coord == "q" else chain.n + f.index
    return _Screws(axes, points, revolute, cols, T_end[:3, 3].copy(), T_end)


def jacobians(chain: ChainModel, q, theta) -> JacobianPair:
    q, theta = chain.check_dims(q, theta)
    s = _screws(chain, q, theta)
    J = np.zeros((6, chain.n + chain.m))
    J[:, s.cols] = s.twists().T
    return JacobianPair(J[:, chain.n:], J[:, : chain.n], q, theta)


def _wrench_derivative(s: _Screws, F: np.ndarray) -> np.ndarray:
    """``A[a, b] = d(F . J_a) / d c_b`` in chain order (not symmetric in general)."""
    f, mom = F[:3], F[3:]
    U, P, rev = s.axes, s.points, s.revolute
    N = len(U)
    V = s.twists()[:, :3]
    earlier = np.arange(N)[None, :] < np.arange(N)[:, None]  # [a, b]: b precedes a
    # dU[a, b] = d u_a / d c_b
    dU = np.where((earlier & rev[None, :])[:, :, None], np.cross(U[None, :, :], U[:, None, :]), 0.0)
    # dP[a, b] = d p_a / d c_b
    moved = np.where(rev[None, :, None], np.cross(U[None, :, :], P[:, None, :] - P[None, :, :]), U[None, :, :])
    dP = np.where(earlier[:, :, None], moved, 0.0)
    r = s.p_end - P  # (N, 3)
    lever = np.cross(dU, r[:, None, :]) + np.cross(U[:, None, :], V[None, :, :] - dP)
    A_rev = lever @ f + dU @ mom
    A_pri = dU @ f
    return np.where(rev[:, None], A_rev, A_pri)


def wrench_jacobian(chain: ChainModel, q, theta, F) -> np.ndarray:
    """``d(J^T F) / d(q, theta)`` in ``(q, theta)`` order; its symmetric part is the Hessian.

    The antisymmetric remainder only involves the applied torque and vanishes on
    displacements that keep the end-effector orientation.
    """
    q, theta = chain.check_dims(q, theta)
    F = np.asarray(F, dtype=float).reshape(-1)
    N = chain.n + chain.m
    out = np.zeros((N, N))
    if np.any(F):
        s = _screws(chain, q, theta)
        out[np.ix_(s.cols, s.cols)] = _wrench_derivative(s, F)
    return out


def hessians(chain: ChainModel, q, theta, F) -> HessianSet:
    """Hessian blocks of the scalar ``F . g(q, theta)`` (force N, torque N*m)."""
    q, theta = chain.check_dims(q, theta)
    F = np.asarray(F, dtype=float).reshape(-1)
    if F.shape != (6,):
        raise ValueError(f"wrench must be a 6-vector, got {F.shape}")
    n, m = chain.n, chain.m
    H = np.zeros((n + m, n + m))
    if np.any(F):
        s = _screws(chain, q, theta)
        A = _wrench_derivative(s, F)
        H[np.ix_(s.cols, s.cols)] = 0.5 * (A + A.T)
    return HessianSet(H[:n, :n], H[:n, n:], H[n:, n:], q, theta, F)


# ---------------------------------------------------------------------------
# finite-difference checks


def _pose_map(chain: ChainModel, q0, th0):
    """Twists from the pose at ``(q0, th0)`` to the poses at rows of coordinates ``(K, n+m)``."""
    ref = chain.end_transform(q0, th0)

    def g(coords):
        T = chain.end_transforms(coords)
        out = np.empty((T.shape[0], 6))
        out[:, :3] = T[:, :3, 3] - ref[:3, 3]
        out[:, 3:] = se3.rotation_log_batch(T[:, :3, :3] @ ref[:3, :3].T)
        return out

    return g


def fd_jacobian(chain: ChainModel, q, theta, step: float = 1e-7) -> np.ndarray:
    """Central differences of the pose twist, ``(6, n+m)`` in ``(q, theta)`` order."""
    q, theta = chain.check_dims(q, theta)
    c0 = np.concatenate([q, theta])
    if c0.size == 0:
        return np.zeros((6, 0))
    E = step * np.eye(c0.size)
    twists = _pose_map(chain, q, theta)(np.vstack([c0 + E, c0 - E]))
    return (twists[: c0.size] - twists[c0.size :]).T / (2 * step)


def fd_hessian(chain: ChainModel, q, theta, F, step: float = 1e-4) -> np.ndarray:
    """Central second differences of ``F . pose_diff(g(c), g(c0))`` in ``(q, theta)`` order."""
    q, theta = chain.check_dims(q, theta)
    F = np.asarray(F, dtype=float)
    c0 = np.concatenate([q, theta])
    N = c0.size
    if N == 0:
        return np.zeros((0, 0))
    I, J = np.tril_indices(N)
    E = step * np.eye(N)
    ei, ej = E[I], E[J]
    points = np.vstack([c0 + ei + ej, c0 + ei - ej, c0 - ei + ej, c0 - ei - ej])
    v = (_pose_map(chain, q, theta)(points) @ F).reshape(4, -1)
    H = np.zeros((N, N))
    H[I, J] = (v[0] - v[1] - v[2] + v[3]) / (4 * step**2)
    H[J, I] = H[I, J]
    return H


def _rel_err(a: np.ndarray, b: np.ndarray, scale: float) -> float:
    if a.size == 0 or scale == 0.0:
        return 0.0
    return float(np.abs(a - b).max() / scale)


def fd_validate(chain: ChainModel, q, theta, F, step: float = 1e-6) -> dict[str, float]:
    """Max deviation between analytic and central-difference derivatives, per block.

    Deviations are relative to the largest entry of the whole Jacobian (or
    Hessian, at least ``|F| |J|^2``), so blocks that vanish analytically are
    judged on the same scale as the rest.
    The Jacobian is differenced with ``step``; second differences for the
    Hessian use ``max(step, 1e-4)`` to stay clear of roundoff.
    """
    if not 1e-9 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-9, 1e-3]")
    q, theta = chain.check_dims(q, theta)
    F = np.asarray(F, dtype=float)
    n = chain.n
    jp = jacobians(chain, q, theta)
    J = np.hstack([jp.J_q, jp.J_theta])
    J_fd = fd_jacobian(chain, q, theta, step)
    H = hessians(chain, q, theta, F).full()
    H_fd = fd_hessian(chain, q, theta, F, max(step, 1e-4)) if np.any(F) else np.zeros_like(H)
    sj = max(np.abs(J).max(initial=0.0), np.abs(J_fd).max(initial=0.0))
    # a Hessian that vanishes analytically is judged against its natural size |F| |J|^2
    sh = max(np.abs(H).max(initial=0.0), np.abs(H_fd).max(initial=0.0), np.abs(F).max() * sj**2)
    return {
        "J_q": _rel_err(J[:, :n], J_fd[:, :n], sj),
        "J_theta": _rel_err(J[:, n:], J_fd[:, n:], sj),
        "H_qq": _rel_err(H[:n, :n], H_fd[:n, :n], sh),
        "H_qtheta": _rel_err(H[:n, n:], H_fd[:n, n:], sh),
        "H_thetatheta": _rel_err(H[n:, n:], H_fd[n:, n:], sh),
    }
