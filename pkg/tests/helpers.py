"""Shared builders for the test suite: random chains and independent reference evaluations."""

from __future__ import annotations

import numpy as np

from vjmstiff.chain import ChainModel, SpringBlock, passive, rigid, rigid_axis, spring1, spring6

AXES = ("Tx", "Ty", "Tz", "Rx", "Ry", "Rz")


def naive_elementary(kind: str, v: float) -> np.ndarray:
    """Elementary transform written out longhand, without sharing code with the library."""
    c, s = np.cos(v), np.sin(v)
    if kind == "Tx":
        return np.array([[1, 0, 0, v], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
    if kind == "Ty":
        return np.array([[1, 0, 0, 0], [0, 1, 0, v], [0, 0, 1, 0], [0, 0, 0, 1.0]])
    if kind == "Tz":
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, v], [0, 0, 0, 1.0]])
    if kind == "Rx":
        return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1.0]])
    if kind == "Ry":
        return np.array([[c, 0, s, 0], [0, 1, 0, 0], [-s, 0, c, 0], [0, 0, 0, 1.0]])
    if kind == "Rz":
        return np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
    raise KeyError(kind)


def naive_forward(chain: ChainModel, q, theta) -> np.ndarray:
    """Left fold over the element list using :func:`naive_elementary`."""
    T = np.eye(4)
    for el in chain.elements:
        if el.kind == "rigid":
            T = T @ el.transform
        elif el.kind == "actuated":
            T = T @ naive_elementary(el.axis, el.value)
        elif el.kind == "passive":
            T = T @ naive_elementary(el.axis, q[el.index])
        elif el.kind == "spring1":
            T = T @ naive_elementary(el.axis, theta[el.index])
        else:
            for k, ax in enumerate(AXES):
                T = T @ naive_elementary(ax, theta[el.index + k])
    return T


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q @ np.diag(np.sign(np.diag(R)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    return Q


def random_transform(rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = random_rotation(rng)
    T[:3, 3] = rng.uniform(-scale, scale, 3)
    return T


def random_spd(rng: np.random.Generator, size: int = 6, low: float = 10.0, high: float = 1e4) -> np.ndarray:
    Q = random_rotation(rng) if size == 3 else np.linalg.qr(rng.normal(size=(size, size)))[0]
    return Q @ np.diag(rng.uniform(low, high, size)) @ Q.T


def random_chain(rng: np.random.Generator, n_elements: int = 8, n_passive: int | None = None) -> ChainModel:
    """Random mix of rigid links, passive joints and 1- and 6-d.o.f. springs (at least one spring)."""
    elements = []
    passives = 0
    for i in range(n_elements):
        r = rng.uniform()
        if r < 0.3:
            elements.append(rigid(random_transform(rng)))
        elif r < 0.55 and (n_passive is None or passives < n_passive):
            elements.append(passive(str(rng.choice(AXES))))
            passives += 1
        elif r < 0.85:
            elements.append(spring1(str(rng.choice(AXES)), float(rng.uniform(50, 5e3))))
        else:
            elements.append(spring6(SpringBlock(random_spd(rng))))
    if not any(e.kind.startswith("spring") for e in elements):
        elements.append(spring1("Rz", 100.0))
    return ChainModel(elements, name="random")


def random_state(rng: np.random.Generator, chain: ChainModel, spread: float = 0.5, theta_spread: float = 0.05):
    return rng.uniform(-spread, spread, chain.n), rng.uniform(-theta_spread, theta_spread, chain.m)


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
    return 0.0 if scale == 0 else float(np.abs(a - b).max() / scale)


def sweep_slope(curve, i: int) -> float:
    """Centered difference of the sweep force at sample ``i``."""
    s = curve.samples
    return (s[i + 1].force - s[i - 1].force) / (s[i + 1].delta - s[i - 1].delta)
