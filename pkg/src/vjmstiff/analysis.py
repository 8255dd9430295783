"""Displacement-driven sweeps and buckling detection.

A sweep moves the end effector from its start pose along a fixed direction in
equal steps, solving each equilibrium from the previous one. Every sample keeps
the smallest eigenvalue of the constrained energy Hessian found on the
continued branch: it turns negative where that branch loses stability, which is
the buckling criterion used by :func:`detect_buckling`. Unstable samples are
re-solved with perturbed restarts so the curve follows the stable (buckled)
branch afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .chain import ChainModel
from .equilibrium import (
    EquilibriumState,
    STABILITY_RTOL,
    SolverError,
    SolverSettings,
    is_stable,
    reduced_stiffness_eigs,
    solve_equilibrium,
    unloaded_state,
)
from .stiffness import StiffnessResult, stiffness_loaded

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepSample:
    delta: float  # m
    force: float  # N along the sweep direction
    tangent: float  # N/m, d^T K d
    iterations: int
    restarts: int
    critical: bool  # solver restarted, branch unstable, or spring block indefinite
    margin: float  # smallest constrained-stiffness eigenvalue on the continued branch
    branch_force: float  # force on the continued branch before any stability restart
    stable: bool
    state: EquilibriumState = field(repr=False)


@dataclass
class SweepCurve:
    direction: np.ndarray
    step: float
    delta_max: float
    samples: list[SweepSample] = field(default_factory=list)
    failure: str | None = None  # set when the sweep was cut short

    @property
    def deltas(self) -> np.ndarray:
        return np.array([s.delta for s in self.samples])

    @property
    def forces(self) -> np.ndarray:
        return np.array([s.force for s in self.samples])

    @property
    def tangents(self) -> np.ndarray:
        return np.array([s.tangent for s in self.samples])

    @property
    def complete(self) -> bool:
        return self.failure is None


@dataclass(frozen=True)
class BucklingReport:
    """Stiffness figures of a force-displacement curve.

    ``K0`` unloaded, ``K1`` just before the critical point, ``K2`` just after,
    ``K3`` at the large deformation ``delta1``. Forces in N, stiffness in N/m,
    displacements in m. Without buckling only ``K0..K3`` are set.
    """

    K0: float
    K1: float
    F_cr: float | None
    delta_cr: float | None
    K2: float
    F1: float | None
    delta1: float | None
    K3: float
    detected: bool
    method: str | None = None  # "eigenvalue" or "tangent-drop"
    critical_index: int | None = None

    def as_dict(self) -> dict:
        return {
            "K0": self.K0,
            "K1": self.K1,
            "F_cr": self.F_cr,
            "delta_cr": self.delta_cr,
            "K2": self.K2,
            "F1": self.F1,
            "delta1": self.delta1,
            "K3": self.K3,
            "detected": self.detected,
            "method": self.method,
            "critical_index": self.critical_index,
        }


def _stability_margin(chain: ChainModel, state: EquilibriumState) -> float:
    return float(reduced_stiffness_eigs(chain, state)[0])


def _sample(chain, state, direction, delta, iterations, restarts, margin, branch_force, stable) -> SweepSample:
    res = stiffness_loaded(chain, state)
    return SweepSample(
        delta=delta,
        force=float(state.F @ direction),
        tangent=res.directional(direction),
        iterations=iterations,
        restarts=restarts,
        critical=bool(restarts > 0 or not stable or res.critical),
        margin=margin,
        branch_force=branch_force,
        stable=stable,
        state=state,
    )


def displacement_sweep(
    chain: ChainModel,
    start,
    direction,
    delta_max: float,
    step: float,
    settings: SolverSettings | None = None,
) -> SweepCurve:
    """Force-displacement curve from ``start`` (a state or passive-joint values) along ``direction``.

    Samples sit at ``i * step`` for ``i = 0 .. round(delta_max / step)``. A solver
    failure ends the curve early and is recorded in ``failure``.
    """
    if not step > 0 or not delta_max >= step:
        raise ValueError("need step > 0 and delta_max >= step")
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.shape != (6,) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit 6-vector")
    settings = settings or SolverSettings()
    plain = replace(settings, require_stable=False)
    strict = replace(settings, require_stable=True)
    rng = np.random.default_rng(settings.rng_seed)
    state = start if isinstance(start, EquilibriumState) else unloaded_state(chain, start)
    t0 = state.pose
    scale = np.abs(chain.K_theta).max() if chain.m else 1.0

    curve = SweepCurve(direction=d, step=float(step), delta_max=float(delta_max))
    margin = _stability_margin(chain, state)
    force0 = float(state.F @ d)
    curve.samples.append(_sample(chain, state, d, 0.0, 0, 0, margin, force0, margin > -STABILITY_RTOL * scale))

    count = int(round(delta_max / step))
    for i in range(1, count + 1):
        delta = i * step
        target = t0.displaced(delta * d)
        try:
            branch = solve_equilibrium(chain, target, state, plain, rng)
            margin = _stability_margin(chain, branch)
            iterations, restarts = branch.iterations, branch.restarts
            if margin > -STABILITY_RTOL * scale:
                state, stable = replace(branch, stable=True), True
            else:
                log.info("branch unstable at delta=%.6g m (margin %.3g), restarting", delta, margin)
                state = solve_equilibrium(chain, target, branch, strict, rng)
                stable = bool(state.stable)
                iterations += state.iterations
                restarts += max(state.restarts, 1)
        except SolverError as exc:
            curve.failure = f"{type(exc).__name__} at delta={delta!r} m: {exc}"
            log.warning("sweep truncated: %s", curve.failure)
            break
        curve.samples.append(
            _sample(chain, state, d, delta, iterations, restarts, margin, float(branch.F @ d), stable)
        )
    return curve


_KNEE_WINDOW = 10


def stiffness_at_offset(
    chain: ChainModel, q0, offset, settings: SolverSettings | None = None
) -> tuple[EquilibriumState, StiffnessResult]:
    """Equilibrium and loaded stiffness with the end effector displaced by ``offset``.

    ``offset`` is a twist (m, rad) applied to the unloaded pose at ``q0``; a zero
    offset returns the unloaded state with ``F = 0`` exactly.
    """
    offset = np.asarray(offset, dtype=float).reshape(-1)
    if offset.shape != (6,):
        raise ValueError("offset must be a 6-vector")
    start = unloaded_state(chain, q0)
    state = solve_equilibrium(chain, start.pose.displaced(offset), start, settings)
    if state.stable is None:
        state = replace(state, stable=is_stable(chain, state))
    return state, stiffness_loaded(chain, state)


def _nearest(deltas: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(deltas - value)))


def detect_buckling(curve: SweepCurve, drop_factor: float = 5.0) -> BucklingReport:
    """Locate the critical point of a sweep and report the stiffness figures around it.

    The critical sample is the first whose continued branch has a negative
    stability margin; ``F_cr`` and ``delta_cr`` are interpolated to the zero of
    the margin. Curves whose margin never changes sign (imperfect bifurcations,
    smooth knees) fall back to the first sample whose tangent drops below the
    running maximum divided by ``drop_factor``, moved to the nearby sample
    where the margin is smallest.
    """
    samples = curve.samples
    if len(samples) < 10:
        raise ValueError(f"buckling detection needs at least 10 samples, got {len(samples)}")
    if drop_factor <= 1:
        raise ValueError("drop_factor must exceed 1")
    deltas = curve.deltas
    tangents = curve.tangents
    K0 = float(tangents[0])

    idx, method = None, None
    for i in range(1, len(samples)):
        if samples[i].margin < 0 and samples[i - 1].margin > 0:
            idx, method = i, "eigenvalue"
            break
    if idx is None:
        running = np.fmax.accumulate(np.nan_to_num(tangents, nan=-np.inf))
        for i in range(1, len(samples)):
            if not tangents[i] >= running[i - 1] / drop_factor:
                idx, method = i, "tangent-drop"
                break
        if idx is not None:
            # the drop only brackets the knee; its sharpest point is where the margin comes closest to zero
            lo, hi = max(1, idx - _KNEE_WINDOW), min(len(samples) - 1, idx + _KNEE_WINDOW)
            margins = np.array([samples[j].margin for j in range(lo, hi)])
            if np.all(np.isfinite(margins)):
                idx = lo + int(np.argmin(margins))
    if idx is None:
        return BucklingReport(K0, K0, None, None, K0, None, None, K0, False)

    prev, cur = samples[idx - 1], samples[idx]
    if method == "eigenvalue":
        frac = prev.margin / (prev.margin - cur.margin)
        delta_cr = prev.delta + frac * (cur.delta - prev.delta)
        F_cr = prev.force + frac * (cur.branch_force - prev.force)
    else:
        delta_cr, F_cr = cur.delta, cur.force

    after = [j for j in range(idx + 1, len(samples)) if samples[j].stable and np.isfinite(tangents[j])]
    j2 = after[0] if after else min(idx + 1, len(samples) - 1)
    delta1 = min(2.0 * delta_cr, curve.delta_max, float(deltas[-1]))
    j3 = _nearest(deltas, delta1)
    return BucklingReport(
        K0=K0,
        K1=float(tangents[idx - 1]),
        F_cr=float(F_cr),
        delta_cr=float(delta_cr),
        K2=float(tangents[j2]),
        F1=float(samples[j3].force),
        delta1=float(deltas[j3]),
        K3=float(tangents[j3]),
        detected=True,
        method=method,
        critical_index=idx,
    )
