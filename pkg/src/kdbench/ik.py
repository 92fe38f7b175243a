"""Damped least-squares inverse kinematics with deterministic restarts.

The solver iterates dq = J^T (J J^T + damping * I)^-1 * e on the 6-vector
pose error (translation difference stacked on the axis-angle of
R_target @ R_current^T), clamping joint values to their limits after every
step. Attempt 0 starts from the mid-range configuration; each later
attempt restarts from the next point of a scrambled Halton sequence over
the limit box, so the whole search is a pure function of
(chain, target, config, salt) and enlarging the attempt budget only
appends new starts without disturbing earlier ones.

A converged candidate must also pass an independent self-collision check;
candidates that match the pose but collide are rejected and counted, which
is what separates a "no pose match" failure from a "pose reachable but
always in collision" failure downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .chain import KinematicChain
from .collision import check_self_collision
from .kinematics import TASK_DIM, fk_and_jacobian, forward_kinematics
from .transforms import Pose, rotation_log

# a clamped update this small means the iteration is pinned and cannot move
_STALL_STEP = 1e-12
# give up on an attempt when the error improves by less than 0.1% over
# this many consecutive iterations (a crawl along a singular direction)
_PLATEAU_WINDOW = 30
_PLATEAU_IMPROVEMENT = 1e-3


@dataclass(frozen=True)
class IKConfig:
    """Solver budget and tolerances. All fields are validated on creation."""

    position_tolerance: float = 1e-4
    orientation_tolerance: float = 1e-3
    max_iterations: int = 200
    restarts: int = 16
    damping: float = 1e-3
    step_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not self.position_tolerance > 0.0:
            raise ValueError(f"position_tolerance must be > 0, got {self.position_tolerance}")
        if not self.orientation_tolerance > 0.0:
            raise ValueError(
                f"orientation_tolerance must be > 0, got {self.orientation_tolerance}"
            )
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if not self.damping > 0.0:
            raise ValueError(f"damping must be > 0, got {self.damping}")
        if not self.step_scale > 0.0:
            raise ValueError(f"step_scale must be > 0, got {self.step_scale}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a non-negative 64-bit integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class IKSolution:
    """An in-limit, collision-free configuration matching the target pose."""

    q: np.ndarray
    position_error: float
    orientation_error: float
    iterations_used: int
    restart_index: int


@dataclass(frozen=True)
class NoSolution:
    """Verdict that no acceptable configuration was found within budget.

    ``collision_rejections`` counts attempts that matched the pose within
    tolerance but were rejected by the self-collision check.
    """

    restarts_used: int
    collision_rejections: int
    best_position_error: float
    best_orientation_error: float


def pose_error(target: Pose, current: Pose) -> np.ndarray:
    """6-vector error: translation difference, then rotation axis-angle."""
    err = np.empty(TASK_DIM)
    err[0:3] = target.translation - current.translation
    err[3:6] = rotation_log(target.rotation @ current.rotation.T)
    return err


def restart_configuration(chain: KinematicChain, config: IKConfig, salt, attempt: int) -> np.ndarray:
    """Deterministic start for the given attempt index.

    Attempt 0 is the mid-range configuration; attempt r >= 1 maps the
    (r-1)-th point of a scrambled Halton sequence into the limit box. The
    sequence is seeded by (config.seed, *salt), so the start for a given
    attempt never depends on the total budget.
    """
    if attempt == 0:
        return chain.mid_configuration()
    seq = qmc.Halton(
        d=chain.dof,
        scramble=True,
        seed=np.random.default_rng(np.random.SeedSequence((int(config.seed), *salt))),
    )
    sample = seq.random(attempt)[-1]
    lower = chain.limits_lower
    upper = chain.limits_upper
    return lower + sample * (upper - lower)


def solve_ik(
    chain: KinematicChain,
    target: Pose,
    config: IKConfig,
    salt: tuple[int, ...] = (),
    error_mask=None,
) -> IKSolution | NoSolution:
    """Search for an in-limit, collision-free q whose tool pose matches target.

    ``salt`` extends the seed so independent call sites (grid points) get
    independent restart sequences while staying reproducible.
    ``error_mask`` optionally selects which of the six error rows the
    solver drives and checks (a diagnostic hook; the workspace metric
    always uses the full pose).
    Returns NoSolution rather than raising when the budget is exhausted:
    absence of a solution is a result, not a failure.
    """
    if not target.is_orthonormal():
        raise ValueError("target rotation must be orthonormal")
    if error_mask is None:
        mask = np.ones(TASK_DIM, dtype=bool)
    else:
        mask = np.asarray(error_mask, dtype=bool)
        if mask.shape != (TASK_DIM,):
            raise ValueError(f"error_mask must have {TASK_DIM} entries, got shape {mask.shape}")
        if not mask.any():
            raise ValueError("error_mask must keep at least one error row")
    pos_mask = mask[0:3]
    ori_mask = mask[3:6]

    if chain.dof == 0:
        # a rigid chain has exactly one configuration; judge it directly
        q = np.zeros(0)
        err = pose_error(target, forward_kinematics(chain, q))
        pos_err = float(np.linalg.norm(err[0:3][pos_mask]))
        ori_err = float(np.linalg.norm(err[3:6][ori_mask]))
        if pos_err <= config.position_tolerance and ori_err <= config.orientation_tolerance:
            if not check_self_collision(chain, q).colliding:
                return IKSolution(
                    q=q,
                    position_error=pos_err,
                    orientation_error=ori_err,
                    iterations_used=1,
                    restart_index=0,
                )
            return NoSolution(
                restarts_used=1,
                collision_rejections=1,
                best_position_error=pos_err,
                best_orientation_error=ori_err,
            )
        return NoSolution(
            restarts_used=1,
            collision_rejections=0,
            best_position_error=pos_err,
            best_orientation_error=ori_err,
        )

    lower = chain.limits_lower
    upper = chain.limits_upper
    collision_rejections = 0
    best_pos = np.inf
    best_ori = np.inf

    # quick reject: targets beyond the chain's maximum extension can never
    # be matched in position, no matter the start
    if pos_mask.all() and np.linalg.norm(target.translation) > chain.reach_upper_bound():
        return NoSolution(
            restarts_used=config.restarts,
            collision_rejections=0,
            best_position_error=np.inf,
            best_orientation_error=np.inf,
        )

    n_masked = int(mask.sum())
    damping_eye = config.damping * np.eye(n_masked)

    full_mask = bool(mask.all())
    for attempt in range(config.restarts):
        q = restart_configuration(chain, config, salt, attempt)
        iterations = 0
        attempt_best = np.inf
        no_improvement = 0
        for _ in range(config.max_iterations):
            iterations += 1
            current, jac = fk_and_jacobian(chain, q)
            err = pose_error(target, current)
            pos_err = float(np.linalg.norm(err[0:3][pos_mask]))
            ori_err = float(np.linalg.norm(err[3:6][ori_mask]))
            if pos_err < best_pos:
                best_pos = pos_err
            if ori_err < best_ori:
                best_ori = ori_err
            if pos_err <= config.position_tolerance and ori_err <= config.orientation_tolerance:
                if not check_self_collision(chain, q).colliding:
                    return IKSolution(
                        q=q.copy(),
                        position_error=pos_err,
                        orientation_error=ori_err,
                        iterations_used=iterations,
                        restart_index=attempt,
                    )
                collision_rejections += 1
                break
            jm = jac if full_mask else jac[mask]
            em = err if full_mask else err[mask]
            total_err = float(np.linalg.norm(em))
            if total_err < attempt_best * (1.0 - _PLATEAU_IMPROVEMENT):
                attempt_best = total_err
                no_improvement = 0
            else:
                no_improvement += 1
                if no_improvement >= _PLATEAU_WINDOW:
                    break
            # saturating step: joints pinned at a limit with the update
            # still pushing outward contribute nothing, so zero their
            # columns and re-solve until the step respects the box
            free = np.ones(chain.dof, dtype=bool)
            for _pass in range(chain.dof + 1):
                jz = jm * free[None, :]
                dq = jz.T @ np.linalg.solve(jz @ jz.T + damping_eye, em)
                pushing = (((q >= upper) & (dq > 0.0)) | ((q <= lower) & (dq < 0.0))) & free
                if not pushing.any():
                    break
                free &= ~pushing
            q_next = np.clip(q + config.step_scale * dq, lower, upper)
            if float(np.max(np.abs(q_next - q))) < _STALL_STEP:
                break
            q = q_next

    return NoSolution(
        restarts_used=config.restarts,
        collision_rejections=collision_rejections,
        best_position_error=best_pos,
        best_orientation_error=best_ori,
    )
