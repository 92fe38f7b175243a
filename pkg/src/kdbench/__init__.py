"""Workspace dexterity analysis for serial kinematic chains.

The package models a two-gripper assembly as a single chain rooted at the
fixed gripper, and scores designs by the fraction of a workspace cube that
admits in-limit, collision-free, non-singular inverse-kinematics solutions.
"""

__version__ = "1.0.0"

from .chain import (
    ChainError,
    ChainSyntaxError,
    Diagnostic,
    KinematicChain,
    chain_to_document,
    load_chain,
    parse_chain,
    validate_chain,
)
from .collision import CollisionReport, check_self_collision, place_capsules, segment_distance
from .ik import IKConfig, IKSolution, NoSolution, solve_ik
from .kinematics import (
    SingularityVerdict,
    fk_and_jacobian,
    forward_kinematics,
    jacobian,
    limit_margins,
    screen_singularity,
)
from .metric import (
    KDReport,
    PointVerdict,
    WorkspaceGrid,
    canonical_json,
    compare_designs,
    compute_kd,
    generate_grid,
    target_pose_for_point,
)
from .transforms import Pose

__all__ = [
    "__version__",
    "ChainError",
    "ChainSyntaxError",
    "Diagnostic",
    "KinematicChain",
    "chain_to_document",
    "load_chain",
    "parse_chain",
    "validate_chain",
    "CollisionReport",
    "check_self_collision",
    "place_capsules",
    "segment_distance",
    "IKConfig",
    "IKSolution",
    "NoSolution",
    "solve_ik",
    "SingularityVerdict",
    "fk_and_jacobian",
    "forward_kinematics",
    "jacobian",
    "limit_margins",
    "screen_singularity",
    "KDReport",
    "PointVerdict",
    "WorkspaceGrid",
    "canonical_json",
    "compare_designs",
    "compute_kd",
    "generate_grid",
    "target_pose_for_point",
    "Pose",
]
