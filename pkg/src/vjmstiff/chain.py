"""Manipulator chains as ordered element sequences.

A chain is a product of elementary factors. Each factor is either constant
(rigid links, locked actuators) or driven by one coordinate: a passive joint
``q[i]`` or a virtual-spring coordinate ``theta[j]``. A 6-d.o.f. spring expands
into six factors ``Tx Ty Tz Rx Ry Rz`` over six consecutive spring coordinates.

Units are SI throughout: stiffness in N/m, N*m/rad (and N/rad for couplings),
compliance in m/N and rad/(N*m).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.linalg import block_diag

from . import se3
from .se3 import AXES, Pose


class ChainError(ValueError):
    """Malformed chain description or inconsistent chain data."""


@dataclass(frozen=True)
class SpringBlock:
    """Symmetric positive-definite stiffness of one virtual spring."""

    stiffness: np.ndarray
    compliance: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.stiffness, dtype=float))
        check_spd(K, self.name or "spring stiffness")
        # roundoff-level asymmetry is tolerated on input but never stored
        object.__setattr__(self, "stiffness", 0.5 * (K + K.T))

    @classmethod
    def from_compliance(cls, compliance, scale: float = 1.0, name: str = "") -> "SpringBlock":
        """Invert a compliance matrix (symmetrized first), then scale the stiffness."""
        C = np.asarray(compliance, dtype=float)
        if C.shape != (6, 6):
            raise ChainError(f"compliance matrix {name!r} must be 6x6, got {C.shape}")
        C = 0.5 * (C + C.T)
        check_spd(C, f"compliance matrix {name!r}")
        K = np.linalg.inv(C)
        return cls(scale * 0.5 * (K + K.T), compliance=C, name=name)


def check_spd(A: np.ndarray, what: str) -> None:
    if A.shape[0] != A.shape[1]:
        raise ChainError(f"{what} is not square")
    scale = max(np.abs(A).max(), 1e-300)
    if np.abs(A - A.T).max() > 1e-9 * scale:
        raise ChainError(f"{what} is not symmetric")
    eig = np.linalg.eigvalsh(0.5 * (A + A.T))
    if eig[0] <= 0:
        raise ChainError(f"{what} is not positive definite (eigenvalue {eig[0]:.6g})")


@dataclass(frozen=True)
class ChainElement:
    """One link of the chain description.

    ``kind`` is one of ``rigid``, ``passive``, ``actuated``, ``spring1``, ``spring6``.
    """

    kind: str
    axis: str | None = None
    transform: np.ndarray | None = None
    value: float = 0.0
    index: int | None = None
    spring: SpringBlock | None = None
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}({self.axis or ''})"


def rigid(T, name: str = "") -> ChainElement:
    return ChainElement("rigid", transform=se3.make_transform(T), name=name)


def rigid_axis(axis: str, value: float, name: str = "") -> ChainElement:
    return ChainElement("rigid", transform=se3.elementary(axis, value), name=name)


def passive(axis: str, index: int | None = None, name: str = "") -> ChainElement:
    return ChainElement("passive", axis=axis, index=index, name=name)


def actuated(axis: str, value: float = 0.0, name: str = "") -> ChainElement:
    return ChainElement("actuated", axis=axis, value=float(value), name=name)


def spring1(axis: str, k: float, index: int | None = None, name: str = "") -> ChainElement:
    return ChainElement("spring1", axis=axis, index=index, spring=SpringBlock(np.array([[float(k)]]), name=name), name=name)


def spring6(block: SpringBlock, index: int | None = None, name: str = "") -> ChainElement:
    if block.stiffness.shape != (6, 6):
        raise ChainError(f"spring6 {name!r} needs a 6x6 stiffness")
    return ChainElement("spring6", index=index, spring=block, name=name or block.name)


@dataclass(frozen=True)
class Factor:
    """Elementary factor of the expanded chain: constant, or one coordinate on one axis."""

    axis: str | None
    const: np.ndarray | None = None
    coord: str | None = None  # "q" or "theta"
    index: int = -1


class ChainModel:
    """Immutable chain: element list, coordinate counts and aggregated spring stiffness."""

    def __init__(self, elements: Sequence[ChainElement], name: str = "", metadata: dict | None = None):
        self.name = name
        self.metadata = dict(metadata or {})
        self.elements = tuple(elements)
        self._assign_indices()
        factors: list[Factor] = []
        blocks: list[tuple[int, np.ndarray]] = []
        for el in self.elements:
            if el.kind == "rigid":
                factors.append(Factor(None, const=el.transform))
            elif el.kind == "actuated":
                factors.append(Factor(None, const=se3.elementary(el.axis, el.value)))
            elif el.kind == "passive":
                factors.append(Factor(el.axis, coord="q", index=el.index))
            elif el.kind == "spring1":
                factors.append(Factor(el.axis, coord="theta", index=el.index))
                blocks.append((el.index, el.spring.stiffness))
            elif el.kind == "spring6":
                for k, ax in enumerate(se3.SPRING_AXES):
                    factors.append(Factor(ax, coord="theta", index=el.index + k))
                blocks.append((el.index, el.spring.stiffness))
        self.factors = tuple(factors)
        blocks.sort(key=lambda b: b[0])
        self.K_theta = block_diag(*[b for _, b in blocks]) if blocks else np.zeros((0, 0))
        self.C_theta = block_diag(*[np.linalg.inv(b) for _, b in blocks]) if blocks else np.zeros((0, 0))
        self.K_theta.setflags(write=False)
        self.C_theta.setflags(write=False)

    def _assign_indices(self) -> None:
        q_used, th_used = [], []
        nq = nth = 0
        resolved = []
        for el in self.elements:
            if el.kind not in ("rigid", "passive", "actuated", "spring1", "spring6"):
                raise ChainError(f"unknown element kind {el.kind!r} in {el.label}")
            if el.kind in ("passive", "actuated", "spring1") and el.axis not in AXES:
                raise ChainError(f"element {el.label}: bad axis {el.axis!r}")
            if el.kind == "passive":
                idx = nq if el.index is None else el.index
                q_used.append((idx, el))
                nq += 1
            elif el.kind in ("spring1", "spring6"):
                width = 1 if el.kind == "spring1" else 6
                idx = nth if el.index is None else el.index
                th_used.extend((idx + k, el) for k in range(width))
                nth += width
            else:
                idx = None
            resolved.append(el if idx is None or idx == el.index else _replace_index(el, idx))
        for used, count, what in ((q_used, nq, "q"), (th_used, nth, "theta")):
            seen = {}
            for idx, el in used:
                if idx in seen:
                    raise ChainError(f"duplicate {what} index {idx} in element {el.label}")
                seen[idx] = el
            if sorted(seen) != list(range(count)):
                raise ChainError(f"{what} indices must cover 0..{count - 1} exactly, got {sorted(seen)}")
        self.elements = tuple(resolved)
        self.n = nq
        self.m = nth

    def __repr__(self) -> str:
        return f"ChainModel(name={self.name!r}, n={self.n}, m={self.m}, elements={len(self.elements)})"

    def check_dims(self, q, theta) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=float).reshape(-1)
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if q.shape != (self.n,) or theta.shape != (self.m,):
            raise ValueError(f"dimension mismatch: expected q[{self.n}], theta[{self.m}], got q{q.shape}, theta{theta.shape}")
        return q, theta

    def frames(self, q, theta) -> tuple[list[np.ndarray], np.ndarray]:
        """Prefix transform before every coordinate factor (chain order) and the end transform."""
        q, theta = self.check_dims(q, theta)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(theta))):
            raise ValueError("non-finite joint or spring coordinate")
        T = np.eye(4)
        prefixes = []
        for f in self.factors:
            if f.const is not None:
                T = T @ f.const
                continue
            prefixes.append(T.copy())
            se3.right_multiply_elementary(T, f.axis, q[f.index] if f.coord == "q" else theta[f.index])
        return prefixes, T

    def end_transform(self, q, theta) -> np.ndarray:
        return self.frames(q, theta)[1]

    def end_transforms(self, coords) -> np.ndarray:
        """End transforms ``(K, 4, 4)`` for rows of ``(q, theta)`` coordinates ``(K, n+m)``."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[1] != self.n + self.m:
            raise ValueError(f"dimension mismatch: expected rows of {self.n + self.m} coordinates")
        if not np.all(np.isfinite(coords)):
            raise ValueError("non-finite joint or spring coordinate")
        T = np.tile(np.eye(4), (coords.shape[0], 1, 1))
        for f in self.factors:
            if f.const is not None:
                T = T @ f.const
            else:
                col = f.index if f.coord == "q" else self.n + f.index
                se3.right_multiply_elementary(T, f.axis, coords[:, col])
        return T

    def zero_theta(self) -> np.ndarray:
        return np.zeros(self.m)


def _replace_index(el: ChainElement, idx: int) -> ChainElement:
    return ChainElement(el.kind, el.axis, el.transform, el.value, idx, el.spring, el.name)


def forward_kinematics(chain: ChainModel, q, theta) -> Pose:
    """End-effector pose of the ordered product of all element transforms."""
    return Pose.from_matrix(chain.end_transform(q, theta))


def spring_torques(chain: ChainModel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (chain.m,):
        raise ValueError(f"dimension mismatch: expected theta[{chain.m}], got {theta.shape}")
    return chain.K_theta @ theta


class IKError(RuntimeError):
    pass


def inverse_kinematics_unloaded(
    chain: ChainModel,
    t_target: Pose,
    q_guess,
    max_iter: int = 200,
    damping: float = 1e-6,
    tol: float = 1e-9,
) -> np.ndarray:
    """Passive-joint coordinates reaching ``t_target`` with relaxed springs.

    Damped least squares; steps capped at 0.2 rad / 0.05 m per coordinate.
    Only the error components the passive joints can act on are driven to zero.
    """
    from .diff import jacobians

    if chain.n < 1:
        raise IKError("chain has no passive joints")
    q = np.array(q_guess, dtype=float).reshape(-1)
    theta = chain.zero_theta()
    caps = np.array([0.2 if chain_axis(chain, i)[0] == "R" else 0.05 for i in range(chain.n)])
    for _ in range(max_iter):
        e = se3.pose_diff(t_target, forward_kinematics(chain, q, theta))
        Jq = jacobians(chain, q, theta).J_q
        JtJ = Jq.T @ Jq
        g = Jq.T @ e
        dq = np.linalg.solve(JtJ + damping * np.eye(chain.n), g)
        # residual of e in the column space of J_q
        controllable = Jq @ np.linalg.lstsq(Jq, e, rcond=None)[0]
        if np.linalg.norm(controllable) < tol and np.linalg.norm(dq) < tol:
            return q
        dq = np.clip(dq, -caps, caps)
        q = q + dq
    raise IKError("unreachable or singular target")


def chain_axis(chain: ChainModel, q_index: int) -> str:
    for f in chain.factors:
        if f.coord == "q" and f.index == q_index:
            return f.axis
    raise KeyError(q_index)


# ---------------------------------------------------------------------------
# chain-description documents

_ELEMENT_FIELDS = {
    "rigid": {"kind", "name", "matrix", "axis", "value"},
    "passive": {"kind", "name", "axis", "index"},
    "actuated": {"kind", "name", "axis", "value"},
    "spring1": {"kind", "name", "axis", "k", "index"},
    "spring6": {"kind", "name", "stiffness", "compliance", "scale", "index"},
}
_TOP_FIELDS = {"name", "elements", "compliance_matrices", "metadata"}


def parse_chain(doc: dict[str, Any] | str) -> ChainModel:
    """Build a :class:`ChainModel` from a chain-description document (dict or JSON text)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ChainError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ChainError("chain document must be a JSON object")
    unknown = set(doc) - _TOP_FIELDS
    if unknown:
        raise ChainError(f"unknown top-level fields: {sorted(unknown)}")
    if "elements" not in doc or not isinstance(doc["elements"], list):
        raise ChainError("chain document needs an 'elements' array")
    named = {}
    for key, mat in (doc.get("compliance_matrices") or {}).items():
        arr = np.asarray(mat, dtype=float)
        if arr.shape != (6, 6):
            raise ChainError(f"compliance matrix {key!r} must be 6x6, got {arr.shape}")
        named[key] = arr

    elements = []
    for i, raw in enumerate(doc["elements"]):
        where = f"element #{i}" + (f" ({raw.get('name')})" if isinstance(raw, dict) and raw.get("name") else "")
        try:
            elements.append(_parse_element(raw, named, where))
        except ChainError as exc:
            raise ChainError(f"{where}: {exc}") from None
        except (TypeError, ValueError, KeyError) as exc:
            raise ChainError(f"{where}: {exc}") from None
    metadata = doc.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise ChainError("'metadata' must be an object")
    return ChainModel(elements, name=str(doc.get("name", "")), metadata=metadata)


def _parse_element(raw, named: dict[str, np.ndarray], where: str) -> ChainElement:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ChainError("element must be an object with a 'kind'")
    kind = raw["kind"]
    if kind not in _ELEMENT_FIELDS:
        raise ChainError(f"unknown element kind {kind!r}")
    unknown = set(raw) - _ELEMENT_FIELDS[kind]
    if unknown:
        raise ChainError(f"unknown fields {sorted(unknown)} for kind {kind!r}")
    name = str(raw.get("name", ""))
    index = raw.get("index")
    if index is not None and (not isinstance(index, int) or index < 0):
        raise ChainError(f"bad index {index!r}")
    if kind == "rigid":
        if "matrix" in raw:
            return rigid(raw["matrix"], name=name)
        return rigid_axis(raw["axis"], raw.get("value", 0.0), name=name)
    if kind == "passive":
        return passive(raw["axis"], index, name=name)
    if kind == "actuated":
        return actuated(raw["axis"], raw.get("value", 0.0), name=name)
    if kind == "spring1":
        return spring1(raw["axis"], float(raw["k"]), index, name=name)
    scale = float(raw.get("scale", 1.0))
    if ("stiffness" in raw) == ("compliance" in raw):
        raise ChainError("spring6 needs exactly one of 'stiffness' or 'compliance'")
    if "stiffness" in raw:
        K = np.asarray(raw["stiffness"], dtype=float)
        if K.shape != (6, 6):
            raise ChainError(f"stiffness must be 6x6, got {K.shape}")
        return spring6(SpringBlock(scale * 0.5 * (K + K.T), name=name), index, name=name)
    ref = raw["compliance"]
    if isinstance(ref, str):
        if ref not in named:
            raise ChainError(f"unknown compliance matrix {ref!r}")
        return spring6(SpringBlock.from_compliance(named[ref], scale, name=ref), index, name=name)
    return spring6(SpringBlock.from_compliance(ref, scale, name=name), index, name=name)


def load_chain(path: str | Path) -> ChainModel:
    return parse_chain(Path(path).read_text())
