"""Cartesian stiffness in the unloaded and loaded modes, and multi-chain summation.

With ``k = (K_theta - H_tt)^-1`` the loaded tangent relation of one chain is

    [[J_t k J_t^T,          J_q + J_t k H_tq     ],   [dF]   [dt]
     [J_q^T + H_qt k J_t^T, H_qq + H_qt k H_tq   ]] . [dq] = [0 ]

and the stiffness matrix is the upper-left 6x6 block of its inverse. With
``F = 0`` the Hessians vanish and this reduces to the unloaded model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import ChainModel
from .diff import hessians, jacobians
from .equilibrium import EquilibriumState, unloaded_state
from .se3 import pose_diff

# relative size of the smallest spring-block eigenvalue treated as zero
CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class StiffnessResult:
    K: np.ndarray
    mode: str  # "loaded" | "unloaded"
    state: EquilibriumState | None
    spectrum: np.ndarray
    condition_of_block: float
    spring_block_min_eig: float = np.inf
    critical: bool = False  # spring block K_theta - H_tt not positive definite
    singular: bool = False  # block matrix rank deficient, pseudo-inverse used
    asymmetry: float = 0.0

    def directional(self, d) -> float:
        d = np.asarray(d, dtype=float)
        return float(d @ self.K @ d)


def _extract(M: np.ndarray) -> tuple[np.ndarray, float, bool]:
    s = np.linalg.svd(M, compute_uv=False)
    cond = s[0] / s[-1] if s[-1] > 0 else np.inf
    singular = not np.isfinite(cond) or cond > 1e14
    inv = np.linalg.pinv(M, rcond=1e-13, hermitian=False) if singular else np.linalg.inv(M)
    return inv[:6, :6], float(cond), singular


def _finish(K6: np.ndarray, mode, state, cond, singular, min_eig=np.inf, critical=False) -> StiffnessResult:
    norm = np.abs(K6).max()
    asym = float(np.abs(K6 - K6.T).max() / norm) if norm > 0 else 0.0
    K = 0.5 * (K6 + K6.T)
    return StiffnessResult(
        K=K,
        mode=mode,
        state=state,
        spectrum=np.linalg.eigvalsh(K),
        condition_of_block=cond,
        spring_block_min_eig=float(min_eig),
        critical=critical,
        singular=singular,
        asymmetry=asym,
    )


def spring_block_eigs(chain: ChainModel, state: EquilibriumState) -> np.ndarray:
    """Eigenvalues of ``K_theta - H_tt`` at a state."""
    H = hessians(chain, state.q, state.theta, state.F).H_thetatheta
    B = chain.K_theta - H
    return np.linalg.eigvalsh(0.5 * (B + B.T))


def stiffness_loaded(chain: ChainModel, state: EquilibriumState) -> StiffnessResult:
    """Tangent stiffness at a loaded equilibrium."""
    jp = jacobians(chain, state.q, state.theta)
    hs = hessians(chain, state.q, state.theta, state.F)
    Jt, Jq = jp.J_theta, jp.J_q
    B = chain.K_theta - hs.H_thetatheta
    eigs = np.linalg.eigvalsh(0.5 * (B + B.T)) if chain.m else np.array([np.inf])
    min_eig = eigs[0]
    scale = np.abs(chain.K_theta).max() if chain.m else 1.0
    mode = "loaded" if np.any(state.F) else "unloaded"
    if abs(min_eig) <= CRITICAL_RTOL * scale:
        nan = np.full((6, 6), np.nan)
        return StiffnessResult(nan, mode, state, np.full(6, np.nan), np.inf, float(min_eig), True, True, 0.0)
    k = np.linalg.inv(B)
    H_tq = hs.H_qtheta.T
    M = np.block(
        [
            [Jt @ k @ Jt.T, Jq + Jt @ k @ H_tq],
            [Jq.T + hs.H_qtheta @ k @ Jt.T, hs.H_qq + hs.H_qtheta @ k @ H_tq],
        ]
    )
    K6, cond, singular = _extract(M)
    return _finish(K6, mode, state, cond, singular, min_eig, bool(min_eig <= 0))


def stiffness_unloaded(chain: ChainModel, q0) -> StiffnessResult:
    """Classical stiffness at ``F = 0``, ``theta = 0``."""
    state = unloaded_state(chain, q0)
    jp = jacobians(chain, state.q, state.theta)
    Jt, Jq = jp.J_theta, jp.J_q
    n = chain.n
    M = np.block([[Jt @ chain.C_theta @ Jt.T, Jq], [Jq.T, np.zeros((n, n))]])
    K6, cond, singular = _extract(M)
    min_eig = np.linalg.eigvalsh(chain.K_theta)[0] if chain.m else np.inf
    return _finish(K6, "unloaded", state, cond, singular, min_eig, False)


def aggregate_parallel(results: Sequence[StiffnessResult], pose_tol: float = 1e-9) -> StiffnessResult:
    """Sum chain stiffnesses expressed in a common end-effector frame."""
    results = list(results)
    if not results:
        raise ValueError("aggregate_parallel needs at least one result")
    poses = [r.state.pose for r in results if r.state is not None]
    for p in poses[1:]:
        if np.abs(pose_diff(p, poses[0])).max() > pose_tol:
            raise ValueError("chains do not share the end-effector frame")
    K = sum(r.K for r in results)
    loaded = any(r.mode == "loaded" for r in results)
    return StiffnessResult(
        K=K,
        mode="loaded" if loaded else "unloaded",
        state=results[0].state,
        spectrum=np.linalg.eigvalsh(0.5 * (K + K.T)),
        condition_of_block=max(r.condition_of_block for r in results),
        spring_block_min_eig=min(r.spring_block_min_eig for r in results),
        critical=any(r.critical for r in results),
        singular=any(r.singular for r in results),
        asymmetry=max(r.asymmetry for r in results),
    )
