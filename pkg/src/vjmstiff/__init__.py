"""Stiffness modeling of serial elastic chains with virtual springs, including loaded equilibria and buckling."""

from .analysis import BucklingReport, SweepCurve, SweepSample, detect_buckling, displacement_sweep, stiffness_at_offset
from .chain import (
    ChainElement,
    ChainError,
    ChainModel,
    SpringBlock,
    actuated,
    forward_kinematics,
    inverse_kinematics_unloaded,
    load_chain,
    parse_chain,
    passive,
    rigid,
    rigid_axis,
    spring1,
    spring6,
    spring_torques,
)
from .diff import fd_validate, hessians, jacobians
from .equilibrium import (
    EquilibriumState,
    NoEquilibriumError,
    SingularityError,
    SolverError,
    SolverSettings,
    is_stable,
    solve_equilibrium,
    unloaded_state,
)
from .models import AXIAL, POSTURES, OrthoglideGeometry, orthoglide_chain, orthoglide_legs
from .se3 import Pose, pose_diff, spring_transform
from .stiffness import StiffnessResult, aggregate_parallel, stiffness_loaded, stiffness_unloaded

__version__ = "0.1.0"
