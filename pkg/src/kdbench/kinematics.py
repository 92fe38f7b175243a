"""Forward kinematics, geometric Jacobian, and singularity screening.

All quantities are expressed in the fixed-gripper (base) frame. The
Jacobian row convention is fixed as linear velocity (x, y, z) in the top
three rows, then angular velocity (x, y, z); columns follow chain order.
Linear columns carry m/rad, angular columns rad/rad, and no characteristic
length rescaling is applied before the singular-value test, so the
threshold ``epsilon`` lives in those mixed units.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .chain import KinematicChain
from .transforms import Pose, rotation_about_axis

TASK_DIM = 6


class _CompiledChain:
    """Chain constants stacked into arrays for the solver-facing hot path."""

    __slots__ = (
        "origins_r",
        "origins_t",
        "axes",
        "axes_pre",
        "k_mats",
        "k2_mats",
        "tip_r",
        "tip_t",
    )

    def __init__(self, chain: KinematicChain):
        n = chain.dof
        self.origins_r = np.stack([j.origin.rotation for j in chain.joints]) if n else np.empty((0, 3, 3))
        self.origins_t = np.stack([j.origin.translation for j in chain.joints]) if n else np.empty((0, 3))
        self.axes = np.stack([j.axis for j in chain.joints]) if n else np.empty((0, 3))
        # world axis of joint k needs the prefix rotation *after* the joint's
        # origin rotation; fold that constant product in now
        self.axes_pre = np.einsum("kij,kj->ki", self.origins_r, self.axes)
        # Rodrigues terms: R(q) = I + sin(q) K + (1 - cos(q)) K^2
        k = np.zeros((n, 3, 3))
        k[:, 0, 1] = -self.axes[:, 2]
        k[:, 0, 2] = self.axes[:, 1]
        k[:, 1, 0] = self.axes[:, 2]
        k[:, 1, 2] = -self.axes[:, 0]
        k[:, 2, 0] = -self.axes[:, 1]
        k[:, 2, 1] = self.axes[:, 0]
        self.k_mats = k
        self.k2_mats = k @ k
        self.tip_r = chain.tip_offset.rotation
        self.tip_t = chain.tip_offset.translation


_COMPILED: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _compiled(chain: KinematicChain) -> _CompiledChain:
    cached = _COMPILED.get(chain)
    if cached is None:
        cached = _CompiledChain(chain)
        _COMPILED[chain] = cached
    return cached


@dataclass(frozen=True)
class SingularityVerdict:
    """Outcome of the limit-pruned smallest-singular-value test."""

    sigma_min: float
    removed_columns: frozenset[int]
    near_singular: bool


def joint_frames(chain: KinematicChain, q) -> list[Pose]:
    """World pose of every joint frame at configuration ``q``.

    Frame k is the joint's own frame after its rotation has been applied,
    which is where attached collision capsules live.
    """
    q = chain.check_q(q)
    rot = np.eye(3)
    pos = np.zeros(3)
    frames: list[Pose] = []
    for k, joint in enumerate(chain.joints):
        pos = rot @ joint.origin.translation + pos
        rot = rot @ joint.origin.rotation
        rot = rot @ rotation_about_axis(joint.axis, q[k])
        frames.append(Pose(rot, pos))
    return frames


def forward_kinematics(chain: KinematicChain, q) -> Pose:
    """Pose of the free-gripper tool frame in the fixed-gripper frame."""
    q = chain.check_q(q)
    rot = np.eye(3)
    pos = np.zeros(3)
    for k, joint in enumerate(chain.joints):
        pos = rot @ joint.origin.translation + pos
        rot = rot @ joint.origin.rotation
        rot = rot @ rotation_about_axis(joint.axis, q[k])
    tip = chain.tip_offset
    return Pose(rot @ tip.rotation, rot @ tip.translation + pos)


def fk_and_jacobian(chain: KinematicChain, q) -> tuple[Pose, np.ndarray]:
    """Tool pose and geometric Jacobian in one forward pass.

    Column k is ``(z_k x (p_tip - p_k), z_k)`` for the world-frame axis
    ``z_k`` and joint origin ``p_k`` of revolute joint k.
    """
    q = chain.check_q(q)
    n = chain.dof
    comp = _compiled(chain)
    sines = np.sin(q)
    one_minus_cos = 1.0 - np.cos(q)
    # local rotations for all joints in one shot, then one composed step
    # (origin transform followed by the joint rotation) per joint
    r_loc = (
        np.eye(3)
        + sines[:, None, None] * comp.k_mats
        + one_minus_cos[:, None, None] * comp.k2_mats
    )
    steps = np.matmul(comp.origins_r, r_loc)
    axes_world = np.empty((n, 3))
    origins_world = np.empty((n, 3))
    rot = np.eye(3)
    pos = np.zeros(3)
    for k in range(n):
        pos = rot @ comp.origins_t[k] + pos
        origins_world[k] = pos
        # the rotation axis is invariant under the joint's own rotation
        axes_world[k] = rot @ comp.axes_pre[k]
        rot = rot @ steps[k]
    tool = Pose(rot @ comp.tip_r, rot @ comp.tip_t + pos)

    jac = np.empty((TASK_DIM, n))
    if n:
        jac[0:3, :] = np.cross(axes_world, tool.translation - origins_world).T
        jac[3:6, :] = axes_world.T
    if not np.all(np.isfinite(jac)):
        raise ValueError(f"Jacobian of chain {chain.name!r} has non-finite entries")
    return tool, jac


def jacobian(chain: KinematicChain, q) -> np.ndarray:
    """6xDOF geometric Jacobian at the tool frame, base-frame coordinates."""
    return fk_and_jacobian(chain, q)[1]


def limit_margins(chain: KinematicChain, fraction: float) -> np.ndarray:
    """Per-joint limit margin in radians, as a fraction of each joint's range."""
    if fraction < 0.0:
        raise ValueError(f"margin fraction must be >= 0, got {fraction}")
    return fraction * (chain.limits_upper - chain.limits_lower)


def screen_singularity(
    chain: KinematicChain,
    q,
    jac: np.ndarray,
    epsilon: float,
    limit_margin,
) -> SingularityVerdict:
    """Drop columns of joints near their limits, then test the smallest
    singular value of what is left against ``epsilon``.

    ``limit_margin`` is in radians, either one scalar for all joints or a
    per-joint array. A joint exactly at the margin boundary counts as near
    its limit. If fewer than six columns survive, the chain cannot span the
    six task dimensions and the verdict is near-singular with
    ``sigma_min`` reported as 0.0; removing every column (fully pinned
    chain) is the extreme case of the same rule.
    """
    q = chain.check_q(q)
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2 or jac.shape[0] != TASK_DIM or jac.shape[1] != chain.dof:
        raise ValueError(
            f"Jacobian shape {jac.shape} does not match chain with {chain.dof} joints"
        )
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    margins = np.broadcast_to(np.asarray(limit_margin, dtype=float), (chain.dof,))
    if np.any(margins < 0.0):
        raise ValueError("limit margins must be >= 0")

    removed: set[int] = set()
    lower = chain.limits_lower
    upper = chain.limits_upper
    for k in range(chain.dof):
        if q[k] - lower[k] <= margins[k] or upper[k] - q[k] <= margins[k]:
            removed.add(k)

    kept = [k for k in range(chain.dof) if k not in removed]
    if len(kept) < TASK_DIM:
        sigma_min = 0.0
    else:
        sigma_min = float(np.linalg.svd(jac[:, kept], compute_uv=False)[-1])
    return SingularityVerdict(
        sigma_min=sigma_min,
        removed_columns=frozenset(removed),
        near_singular=sigma_min < epsilon,
    )
