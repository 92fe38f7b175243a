"""Capsule-based self-collision checking.

Every collision body is a capsule (segment plus radius) rigidly attached
to one joint frame. Two capsules overlap when the closest distance
between their core segments is strictly less than the sum of their radii.
Pairs listed in the chain's exemption set are never tested, which is how
adjacent bodies that touch by construction are silenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import KinematicChain
from .kinematics import joint_frames


@dataclass(frozen=True, eq=False)
class PlacedCapsule:
    """A capsule with its segment endpoints expressed in the base frame."""

    source_index: int
    attached_joint: int
    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    radius: float


@dataclass(frozen=True)
class CollisionReport:
    colliding: bool
    # first offending pair as capsule indices, None when collision-free
    first_pair: tuple[int, int] | None
    min_distance: float


def segment_distance(p0, p1, q0, q1) -> float:
    """Closest distance between segments [p0, p1] and [q0, q1].

    The squared distance is a convex quadratic in the two segment
    parameters (s, t) over the unit box, so its minimiser is either the
    interior critical point or sits on one of the four box edges, where
    it reduces to a clamped 1-D projection.  Evaluating every candidate
    and keeping the best is exact for all inputs, including degenerate
    (point) segments and nearly parallel pairs.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    b = float(d1 @ d2)
    c = float(d1 @ r)
    f = float(d2 @ r)

    candidates = []
    denom = a * e - b * b
    if denom > 0.0:
        s = (b * f - c * e) / denom
        if 0.0 < s < 1.0:
            t = (b * s + f) / e
            if 0.0 < t < 1.0:
                candidates.append((s, t))
    if a > 0.0:
        candidates.append((min(max(-c / a, 0.0), 1.0), 0.0))
        candidates.append((min(max((b - c) / a, 0.0), 1.0), 1.0))
    else:
        candidates.append((0.0, 0.0))
        candidates.append((0.0, 1.0))
    if e > 0.0:
        candidates.append((0.0, min(max(f / e, 0.0), 1.0)))
        candidates.append((1.0, min(max((b + f) / e, 0.0), 1.0)))
    else:
        candidates.append((0.0, 0.0))
        candidates.append((1.0, 0.0))

    best = math.inf
    for s, t in candidates:
        v = r + s * d1 - t * d2
        best = min(best, float(v @ v))
    return math.sqrt(best)


def place_capsules(chain: KinematicChain, q) -> list[PlacedCapsule]:
    """Transform every capsule of the chain into the base frame at ``q``."""
    frames = joint_frames(chain, q)
    placed = []
    for i, cap in enumerate(chain.capsules):
        joint_idx = chain.joint_index(cap.attached_joint)
        frame = frames[joint_idx]
        placed.append(
            PlacedCapsule(
                source_index=i,
                attached_joint=joint_idx,
                endpoint_a=frame.transform_point(cap.endpoint_a),
                endpoint_b=frame.transform_point(cap.endpoint_b),
                radius=cap.radius,
            )
        )
    return placed


def check_self_collision(chain: KinematicChain, q) -> CollisionReport:
    """Test all non-exempt capsule pairs at configuration ``q``.

    ``min_distance`` is the smallest surface clearance over the tested
    pairs (negative when penetrating); inf when nothing was tested.
    """
    placed = place_capsules(chain, q)
    colliding = False
    first_pair = None
    min_clearance = np.inf
    for i in range(len(placed)):
        for j in range(i + 1, len(placed)):
            if (i, j) in chain.collision_exemptions:
                continue
            ci = placed[i]
            cj = placed[j]
            dist = segment_distance(ci.endpoint_a, ci.endpoint_b, cj.endpoint_a, cj.endpoint_b)
            clearance = dist - (ci.radius + cj.radius)
            if clearance < min_clearance:
                min_clearance = clearance
            if clearance < 0.0 and not colliding:
                colliding = True
                first_pair = (i, j)
    return CollisionReport(
        colliding=colliding,
        first_pair=first_pair,
        min_distance=float(min_clearance),
    )
