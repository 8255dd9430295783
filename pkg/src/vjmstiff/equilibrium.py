"""Loaded static equilibrium for a prescribed end-effector pose.

The basic iteration linearizes the kinematics at the current ``(q, theta)`` and
solves the saddle-point system

    [[J_t C J_t^T, J_q], [J_q^T, 0]] [F; dq] = [e + J_t theta; 0]

where ``C`` is the spring compliance and ``e`` the pose error towards the
target, followed by ``q += dq`` and ``theta = C J_t^T F``. A fixed point
satisfies ``J_t^T F = K theta`` and ``J_q^T F = 0`` exactly.

This iteration ignores how the Jacobians change with the configuration, so it
stops contracting once the load-induced (geometric) stiffness is comparable to
a spring's own stiffness. When that happens the solver switches to Newton
steps, which solve the same block system with the wrench derivatives added
(the matrix of the loaded stiffness model).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import null_space

from . import se3
from .chain import ChainModel
from .diff import hessians, jacobians, wrench_jacobian
from .se3 import Pose

log = logging.getLogger(__name__)

METHODS = ("auto", "fixed-point", "newton")

# stability margins above -STABILITY_RTOL * max|K_theta| count as non-negative (eigenvalue roundoff)
STABILITY_RTOL = 1e-12


class SolverError(RuntimeError):
    """Base class for equilibrium failures."""


class SingularityError(SolverError):
    """Saddle-point matrix singular with an inconsistent right-hand side."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3g})")
        self.condition = condition


class NoEquilibriumError(SolverError):
    def __init__(self, message: str, best: "EquilibriumState | None"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SolverSettings:
    """Convergence control.

    ``method`` selects the basic fixed-point iteration, Newton steps, or
    ``auto`` (fixed point, switching to Newton once a step reduces the merit
    by less than ``switch_ratio``).
    With ``require_stable`` a converged but unstable equilibrium counts as a
    failed attempt and triggers a perturbed restart.
    """

    tol_pose: float = 1e-9
    tol_static: float = 1e-8
    max_iter: int = 100
    restart_noise: float = 1e-4
    max_restarts: int = 10
    rng_seed: int = 0
    method: str = "auto"
    require_stable: bool = False
    switch_ratio: float = 0.05  # auto mode: merit ratio per step above which Newton takes over
    noise_growth: float = 3.0  # amplitude factor between successive stability restarts
    char_length: float = 1.0  # weight of rotations in the pose residual, m
    stall_window: int = 10
    stall_factor: float = 0.99

    def __post_init__(self):
        if min(self.tol_pose, self.tol_static, self.char_length) <= 0:
            raise ValueError("tolerances and characteristic length must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass(frozen=True)
class EquilibriumState:
    q: np.ndarray
    theta: np.ndarray
    F: np.ndarray
    pose: Pose
    target: Pose
    iterations: int = 0
    residual_pose: float = 0.0
    residual_static: float = 0.0
    restarts: int = 0
    converged: bool = True
    stable: bool | None = None

    def energy(self, chain: ChainModel) -> float:
        return 0.5 * float(self.theta @ chain.K_theta @ self.theta)


def unloaded_state(chain: ChainModel, q0) -> EquilibriumState:
    q0, theta = chain.check_dims(q0, np.zeros(chain.m))
    pose = Pose.from_matrix(chain.end_transform(q0, theta))
    return EquilibriumState(q0, theta, np.zeros(6), pose, pose, stable=True)


def _pose_residual(e: np.ndarray, char_length: float) -> float:
    return float(np.hypot(np.linalg.norm(e[:3]), char_length * np.linalg.norm(e[3:])))


def _static_residual(chain: ChainModel, J_theta, J_q, theta, F) -> float:
    tau = chain.K_theta @ theta
    r_theta = np.abs(J_theta.T @ F - tau).max(initial=0.0) / (1.0 + np.abs(tau).max(initial=0.0))
    r_q = np.abs(J_q.T @ F).max(initial=0.0) / (1.0 + np.abs(F).max())
    return float(max(r_theta, r_q))


def residuals(chain: ChainModel, state: EquilibriumState, char_length: float = 1.0) -> tuple[float, float]:
    """``(residual_pose, residual_static)`` of a state against its target."""
    pose = Pose.from_matrix(chain.end_transform(state.q, state.theta))
    e = se3.pose_diff(state.target, pose)
    jp = jacobians(chain, state.q, state.theta)
    return _pose_residual(e, char_length), _static_residual(chain, jp.J_theta, jp.J_q, state.theta, state.F)


def reduced_stiffness_eigs(chain: ChainModel, state: EquilibriumState) -> np.ndarray:
    """Eigenvalues of the energy Hessian restricted to motions that keep the end-effector pose.

    All positive means the equilibrium is a strict local energy minimum
    under the prescribed pose.
    """
    jp = jacobians(chain, state.q, state.theta)
    N = null_space(np.hstack([jp.J_q, jp.J_theta]))
    if N.shape[1] == 0:
        return np.array([np.inf])
    E = np.zeros((chain.n + chain.m,) * 2)
    E[chain.n :, chain.n :] = chain.K_theta
    E -= hessians(chain, state.q, state.theta, state.F).full()
    S = N.T @ E @ N
    return np.linalg.eigvalsh(0.5 * (S + S.T))


def is_stable(chain: ChainModel, state: EquilibriumState, rtol: float = STABILITY_RTOL) -> bool:
    eigs = reduced_stiffness_eigs(chain, state)
    scale = np.abs(chain.K_theta).max() if chain.m else 1.0
    return bool(eigs[0] > -rtol * scale)


def solve_saddle(
    M: np.ndarray, rhs: np.ndarray, rcond: float = 1e-13, max_defect: float = 0.5
) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares solution of a small dense system.

    Rank-deficient systems arise for chains that cannot move in some
    directions at all; the reaction there is indeterminate and set to zero.
    The part of ``rhs`` outside the range of ``M`` is normally a curvature
    remainder that vanishes as the iteration converges. When it exceeds
    ``max_defect`` of the whole right-hand side the requested motion is
    mostly unattainable and a :class:`SingularityError` is raised.
    """
    U, s, Vt = np.linalg.svd(M)
    cond = s[0] / s[-1] if s[-1] > 0 else np.inf
    keep = s > rcond * s[0]
    x = Vt[keep].T @ ((U[:, keep].T @ rhs) / s[keep])
    if not keep.all():
        defect = np.linalg.norm(M @ x - rhs)
        if defect > max_defect * np.linalg.norm(rhs):
            raise SingularityError("kinematic singularity at iterate", cond)
    return x, cond


def perturb_restart(q, theta, noise: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform noise in ``[-noise, noise]`` on every passive and spring coordinate."""
    q = np.asarray(q, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if noise == 0:
        return q.copy(), theta.copy()
    return q + rng.uniform(-noise, noise, q.shape), theta + rng.uniform(-noise, noise, theta.shape)


def _fixed_point_step(chain, Jt, Jq, e, theta):
    n = chain.n
    C = chain.C_theta
    M = np.zeros((6 + n, 6 + n))
    M[:6, :6] = Jt @ C @ Jt.T
    M[:6, 6:] = Jq
    M[6:, :6] = Jq.T
    x, _ = solve_saddle(M, np.concatenate([e + Jt @ theta, np.zeros(n)]))
    F = x[:6]
    return x[6:], C @ Jt.T @ F, F


def _newton_step(chain, q, theta, F, Jt, Jq, e):
    """Returns ``(dq, dtheta, dF)`` from the full linearization of pose and static equations."""
    n = chain.n
    A = wrench_jacobian(chain, q, theta, F)
    A_qq, A_qt, A_tq, A_tt = A[:n, :n], A[:n, n:], A[n:, :n], A[n:, n:]
    r_t = Jt.T @ F - chain.K_theta @ theta
    r_q = Jq.T @ F
    k = np.linalg.inv(chain.K_theta - A_tt)
    M = np.block([[Jt @ k @ Jt.T, Jq + Jt @ k @ A_tq], [Jq.T + A_qt @ k @ Jt.T, A_qq + A_qt @ k @ A_tq]])
    rhs = np.concatenate([e - Jt @ k @ r_t, -r_q - A_qt @ k @ r_t])
    x, _ = solve_saddle(M, rhs)
    dF, dq = x[:6], x[6:]
    dtheta = k @ (Jt.T @ dF + A_tq @ dq + r_t)
    return dq, dtheta, dF


def _iterate(chain, t_target, q, theta, F, settings, restart, total_iter):
    """One attempt. Returns ``(state, best, iterations_used)``; ``state`` is None unless converged."""
    mode = "fixed-point" if settings.method in ("auto", "fixed-point") else "newton"
    best, best_score = None, np.inf
    merits: list[float] = []
    for it in range(settings.max_iter + 1):
        pose = Pose.from_matrix(chain.end_transform(q, theta))
        e = se3.pose_diff(t_target, pose)
        jp = jacobians(chain, q, theta)
        Jt, Jq = jp.J_theta, jp.J_q
        r_pose = _pose_residual(e, settings.char_length)
        r_static = _static_residual(chain, Jt, Jq, theta, F)
        state = EquilibriumState(q, theta, F, pose, t_target, total_iter + it, r_pose, r_static, restart, False)
        merit = r_pose / settings.tol_pose + r_static / settings.tol_static
        if merit < best_score:
            best, best_score = state, merit
        if r_pose < settings.tol_pose and r_static < settings.tol_static:
            return replace(state, converged=True), best, it
        if it == settings.max_iter or not np.isfinite(merit):
            break
        if settings.method == "auto" and mode == "fixed-point" and len(merits) >= 2 and merit > settings.switch_ratio * merits[-1]:
            log.debug("fixed-point iteration stopped contracting at %d, switching to Newton", it)
            mode = "newton"
        merits.append(merit)
        w = settings.stall_window
        if len(merits) > w and merits[-1] > settings.stall_factor * merits[-1 - w]:
            log.debug("stalled at iteration %d (merit %.3g)", it, merit)
            break
        try:
            if mode == "newton":
                dq, dtheta, dF = _newton_step(chain, q, theta, F, Jt, Jq, e)
                q, theta, F = q + dq, theta + dtheta, F + dF
            else:
                dq, theta, F = _fixed_point_step(chain, Jt, Jq, e, theta)
                q = q + dq
        except np.linalg.LinAlgError:
            break
    return None, best, it


def solve_equilibrium(
    chain: ChainModel,
    t_target: Pose,
    start: EquilibriumState | tuple,
    settings: SolverSettings | None = None,
    rng: np.random.Generator | None = None,
) -> EquilibriumState:
    """Find ``(q, theta, F)`` holding the end effector at ``t_target``.

    ``start`` is a previous state (warm start; its wrench is reused) or a
    ``(q, theta)`` pair. Failed attempts restart from a perturbed copy of the
    best iterate seen so far.
    """
    settings = settings or SolverSettings()
    rng = rng if rng is not None else np.random.default_rng(settings.rng_seed)
    if isinstance(start, EquilibriumState):
        q, theta, F = start.q.copy(), start.theta.copy(), start.F.copy()
    else:
        q, theta = chain.check_dims(*start)
        q, theta, F = q.copy(), theta.copy(), np.zeros(6)
    best: EquilibriumState | None = None
    unstable: EquilibriumState | None = None
    total_iter = 0
    noise = settings.restart_noise

    for restart in range(settings.max_restarts + 1):
        state, attempt_best, used = _iterate(chain, t_target, q, theta, F, settings, restart, total_iter)
        total_iter += used
        if state is not None:
            if not settings.require_stable:
                return state
            if is_stable(chain, state):
                return replace(state, stable=True)
            log.debug("equilibrium at restart %d is unstable, perturbing", restart)
            if unstable is None:
                unstable = replace(state, stable=False)
            origin = state
            noise *= settings.noise_growth
        else:
            if best is None or (
                attempt_best.residual_pose / settings.tol_pose + attempt_best.residual_static / settings.tol_static
                < best.residual_pose / settings.tol_pose + best.residual_static / settings.tol_static
            ):
                best = attempt_best
            origin = best
        q, theta = perturb_restart(origin.q, origin.theta, noise, rng)
        F = origin.F.copy()
    if unstable is not None:
        return replace(unstable, restarts=settings.max_restarts, iterations=total_iter)
    raise NoEquilibriumError(
        f"no equilibrium found after {settings.max_restarts} restarts "
        f"(best residuals {best.residual_pose:.3g}, {best.residual_static:.3g})",
        best,
    )
