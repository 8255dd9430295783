"""Ready-made chains: the Orthoglide leg and small benchmark mechanisms.

Orthoglide leg, base to tool::

    T_base . Tx(theta_a) . [foot spring] . Ry(q1) . Rz(q2) . Tx(L) . [link spring] . Rz(q3) . Ry(q4) . T_tool

The foot and bar compliance matrices below are given in N, mm, rad units
(translation mm/N, rotation rad/(N*mm), couplings 1/N) and converted to SI
on use. Read this way the unloaded axial stiffness of posture A is about
3.3e6 N/m = 3.3e3 N/mm. The link spring is the bar stiffness doubled, standing
in for the two bars of the parallelogram.

Bar length, actuator stiffness and the foot-frame roll are not known and are
set to documented ASSUMED values in :class:`OrthoglideGeometry`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .chain import ChainModel, parse_chain, passive, rigid_axis, spring1

FOOT_COMPLIANCE_MM = np.array(
    [
        [28e-5, -33e-5, 0, 0, 0, -40e-7],
        [-33e-5, 41e-5, 0, 0, 0, 54e-7],
        [0, 0, 19e-4, 11e-6, -15e-6, 0],
        [0, 0, 11e-6, 23e-8, 0, 0],
        [0, 0, -15e-6, 0, 23e-8, 0],
        [-40e-7, 54e-7, 0, 0, 0, 84e-9],
    ]
)

# entries (2, 6) and (6, 2) disagree as printed (11e-5 vs 11e-4); parsing averages them
BAR_COMPLIANCE_MM = np.array(
    [
        [46e-6, 0, 0, 0, 0, 0],
        [0, 23e-2, 0, 0, 0, 11e-5],
        [0, 0, 51e-3, 0, -24e-5, 0],
        [0, 0, 0, 29e-6, 0, 0],
        [0, 0, -24e-5, 0, 15e-7, 0],
        [0, 11e-4, 0, 0, 0, 72e-7],
    ]
)

_MM_TO_SI = np.diag([1e-3**0.5] * 3 + [1e3**0.5] * 3)

POSTURES = {
    "A": (0.0, 0.0, 0.0, 0.0),
    "B": (0.0, np.pi / 6, -np.pi / 6, 0.0),
    "C": (np.pi / 6, 0.0, 0.0, -np.pi / 6),
    "D": (np.pi / 6, np.pi / 6, -np.pi / 6, -np.pi / 6),
}

# Actuator axis; the sweeps pull the tool away from the base along it.
AXIAL = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def compliance_mm_to_si(C_mm) -> np.ndarray:
    """Convert a 6x6 compliance from (N, mm, rad) to (N, m, rad) units."""
    return _MM_TO_SI @ np.asarray(C_mm, dtype=float) @ _MM_TO_SI


@dataclass(frozen=True)
class OrthoglideGeometry:
    """Leg geometry. Fields marked ASSUMED are not given by the source data."""

    bar_length: float = 0.31  # m, ASSUMED
    actuator_stiffness: float = 1e10  # N/m, ASSUMED (1e7 N/mm: effectively rigid drive)
    foot_roll: float = -np.pi / 2  # rad about x, ASSUMED orientation of the foot compliance frame
    bar_stiffness_scale: float = 2.0
    base: np.ndarray = field(default_factory=lambda: np.eye(4))
    tool: np.ndarray = field(default_factory=lambda: np.eye(4))

    def metadata(self) -> dict:
        return {
            "bar_length_m": self.bar_length,
            "actuator_stiffness_n_per_m": self.actuator_stiffness,
            "foot_roll_rad": self.foot_roll,
            "bar_stiffness_scale": self.bar_stiffness_scale,
            "compliance_units": "source matrices read as N, mm, rad and converted to SI",
            "assumed": ["bar_length_m", "actuator_stiffness_n_per_m", "foot_roll_rad", "base", "tool"],
        }


def orthoglide_document(geometry: OrthoglideGeometry | None = None) -> dict:
    """Chain-description document of one Orthoglide leg."""
    g = geometry or OrthoglideGeometry()
    return {
        "name": "orthoglide-leg",
        "metadata": {"assumed_geometry": g.metadata(), "postures": {k: list(v) for k, v in POSTURES.items()}},
        "compliance_matrices": {
            "foot": compliance_mm_to_si(FOOT_COMPLIANCE_MM).tolist(),
            "bar": compliance_mm_to_si(BAR_COMPLIANCE_MM).tolist(),
        },
        "elements": [
            {"kind": "rigid", "name": "base", "matrix": np.asarray(g.base, dtype=float).tolist()},
            {"kind": "spring1", "name": "actuator", "axis": "Tx", "k": g.actuator_stiffness},
            {"kind": "rigid", "name": "foot-frame", "axis": "Rx", "value": g.foot_roll},
            {"kind": "spring6", "name": "foot", "compliance": "foot"},
            {"kind": "rigid", "name": "foot-frame-back", "axis": "Rx", "value": -g.foot_roll},
            {"kind": "passive", "name": "q1", "axis": "Ry"},
            {"kind": "passive", "name": "q2", "axis": "Rz"},
            {"kind": "rigid", "name": "bar", "axis": "Tx", "value": g.bar_length},
            {"kind": "spring6", "name": "link", "compliance": "bar", "scale": g.bar_stiffness_scale},
            {"kind": "passive", "name": "q3", "axis": "Rz"},
            {"kind": "passive", "name": "q4", "axis": "Ry"},
            {"kind": "rigid", "name": "tool", "matrix": np.asarray(g.tool, dtype=float).tolist()},
        ],
    }


def orthoglide_chain(posture: str = "A", geometry: OrthoglideGeometry | None = None) -> tuple[ChainModel, np.ndarray]:
    """Orthoglide leg and the passive-joint values of a named posture (A-D)."""
    key = str(posture).upper()
    if key not in POSTURES:
        raise ValueError(f"unknown posture {posture!r}; expected one of {sorted(POSTURES)}")
    return parse_chain(orthoglide_document(geometry)), np.array(POSTURES[key])


def orthoglide_legs(geometry: OrthoglideGeometry | None = None) -> list[tuple[ChainModel, np.ndarray]]:
    """Three legs with actuators along x, y and z meeting at a common tool frame.

    Each leg is the posture-A leg turned by a cyclic permutation of the axes and
    shifted back by the bar length, so all tool frames coincide with the world
    origin. Summing their stiffness gives the whole manipulator at its
    isotropic point.
    """
    g = geometry or OrthoglideGeometry()
    cycle = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])  # x -> y -> z -> x
    legs = []
    for k in range(3):
        R = np.linalg.matrix_power(cycle, k)
        base, tool = np.eye(4), np.eye(4)
        base[:3, :3] = R
        base[:3, 3] = -g.bar_length * R[:, 0]
        tool[:3, :3] = R.T
        legs.append(orthoglide_chain("A", replace(g, base=base, tool=tool)))
    return legs


# ---------------------------------------------------------------------------
# benchmark mechanisms


def single_spring(k: float = 1000.0) -> ChainModel:
    return ChainModel([spring1("Tx", k)], name="single-spring")


def series_springs(k1: float = 1000.0, k2: float = 2000.0) -> ChainModel:
    return ChainModel([spring1("Tx", k1), spring1("Tx", k2)], name="series-springs")


def inverted_pendulum(k: float = 10.0, length: float = 1.0, axial_k: float = 1000.0) -> ChainModel:
    """Rigid column on a rotational base spring, tip free to slide laterally and rotate.

    Under axial compression ``P`` the lateral tip stiffness is ``k/L^2 - P/L`` and
    the column buckles at ``P = k/L``. The axial spring gives a finite pre-buckling
    stiffness so the column can be displacement driven.
    """
    return ChainModel(
        [spring1("Tx", axial_k), spring1("Rz", k), rigid_axis("Tx", length), passive("Rz"), passive("Ty")],
        name="inverted-pendulum",
    )


def pinned_pendulum(k: float = 10.0, length: float = 1.0, axial_k: float = 1000.0) -> ChainModel:
    """Inverted pendulum whose tip is pinned in rotation only; lateral motion is prescribed."""
    return ChainModel(
        [spring1("Tx", axial_k), spring1("Rz", k), rigid_axis("Tx", length), passive("Rz")],
        name="pinned-pendulum",
    )


def euler_column(
    segments: int = 8, EI: float = 1.0, length: float = 1.0, axial_k: float = 1e4, lumping: str = "midpoint"
) -> ChainModel:
    """Cantilever column lumped into rigid segments joined by rotational springs ``EI / h``.

    With ``lumping="midpoint"`` each spring sits at the centre of its segment
    (half-length rigid pieces at both ends), so the critical load converges
    quadratically. ``"node"`` puts the springs at the clamp and interior nodes,
    a first-order scheme whose critical load is ``4 (EI/h^2) sin^2(pi / (2 (2n+1)))``.
    The free tip may slide laterally and rotate; the continuous critical load
    is ``pi^2 EI / (4 L^2)``.
    """
    if segments < 1:
        raise ValueError("need at least one segment")
    if lumping not in ("midpoint", "node"):
        raise ValueError("lumping must be 'midpoint' or 'node'")
    h = length / segments
    elements = [spring1("Tx", axial_k, name="axial")]
    if lumping == "midpoint":
        lengths = [h / 2] + [h] * (segments - 1) + [h / 2]
        elements.append(rigid_axis("Tx", lengths[0]))
        for i in range(segments):
            elements += [spring1("Rz", EI / h, name=f"hinge{i}"), rigid_axis("Tx", lengths[i + 1])]
    else:
        for i in range(segments):
            elements += [spring1("Rz", EI / h, name=f"hinge{i}"), rigid_axis("Tx", h)]
    elements += [passive("Rz", name="tip-rotation"), passive("Ty", name="tip-slide")]
    return ChainModel(elements, name=f"euler-column-{segments}")


def planar_2r(k1: float = 50.0, k2: float = 30.0, l1: float = 0.5, l2: float = 0.4, k_axial: float = 2e4) -> ChainModel:
    """Planar two-link arm with passive joints, elastic links and elastic joints."""
    return ChainModel(
        [
            passive("Rz"),
            spring1("Rz", k1),
            rigid_axis("Tx", l1),
            spring1("Tx", k_axial),
            passive("Rz"),
            spring1("Rz", k2),
            rigid_axis("Tx", l2),
            spring1("Ty", k_axial / 4),
        ],
        name="planar-2r",
    )
