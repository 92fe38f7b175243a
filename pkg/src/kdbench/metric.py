"""Workspace grid, per-point classification, and the dexterity score.

The score is the fraction of sampled workspace points that admit an
in-limit, collision-free configuration whose limit-pruned Jacobian is not
near-singular. Points come from a cube whose near face is centered on the
base-frame origin and which extends along ``axis_direction``; each point
gets a full 6-DOF target pose whose approach axis (gripper z) points back
at the origin.

Per-point work is a pure function of (chain, point, configs, global seed,
point index), so evaluation can be split across processes and merged by
index without changing a single bit of the result.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .chain import KinematicChain
from .ik import IKConfig, IKSolution, solve_ik
from .kinematics import fk_and_jacobian, limit_margins, screen_singularity
from .transforms import Pose

FORMAT_VERSION = 1

STATUS_VALID = "valid"
STATUS_NEAR_SINGULAR = "near_singular"
STATUS_UNREACHABLE = "unreachable"

SUB_CAUSE_NONE = "none"
SUB_CAUSE_NO_IK = "no_ik"
SUB_CAUSE_SELF_COLLISION = "self_collision"

_UNIT_TOL = 1e-9
# displacement applied to a grid point at exactly the origin, where the
# approach direction would otherwise be undefined
ORIGIN_NUDGE = 1e-6


@dataclass(frozen=True, eq=False)
class WorkspaceGrid:
    """Cube of target points in the base frame.

    ``points`` has shape (resolution**3, 3) and is ordered row-major over
    (axis coordinate, first perpendicular, second perpendicular), the
    axis coordinate varying slowest.
    """

    side_length: float
    resolution: int
    axis_direction: np.ndarray
    points: np.ndarray


@dataclass(frozen=True, eq=False)
class PointVerdict:
    """Classification of one grid point.

    ``restarts_used`` counts solver attempts consumed, including the
    initial mid-range start. ``sigma_min`` is present exactly when a
    configuration matching the target pose was found.
    """

    index: int
    position: np.ndarray
    status: str
    sub_cause: str
    sigma_min: float | None
    restarts_used: int | None


@dataclass(frozen=True, eq=False)
class KDReport:
    chain_name: str
    kd: float
    n_total: int
    n_valid: int
    n_singular: int
    n_unreachable: int
    verdicts: tuple[PointVerdict, ...]
    config_echo: dict
    wall_time: float
    # grid indices whose point sat exactly at the origin and was nudged
    origin_adjusted_indices: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ComparisonRow:
    chain_name: str
    kd: float
    n_valid: int
    n_total: int


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    """Per-chain reports over one shared grid, best score first."""

    rows: tuple[ComparisonRow, ...]
    reports: tuple[KDReport, ...]


def grid_basis(axis_direction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed orthonormal frame (a, b, c) with a = axis_direction.

    b is the normalized cross product of world +z with a; when a is
    parallel to world z, b falls back to world +x.
    """
    a = np.asarray(axis_direction, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ValueError("axis_direction must be a finite 3-vector")
    if abs(float(np.linalg.norm(a)) - 1.0) > _UNIT_TOL:
        raise ValueError(f"axis_direction must have unit norm, got {a.tolist()}")
    b = np.cross([0.0, 0.0, 1.0], a)
    norm_b = float(np.linalg.norm(b))
    if norm_b < _UNIT_TOL:
        b = np.array([1.0, 0.0, 0.0])
    else:
        b = b / norm_b
    c = np.cross(a, b)
    return a, b, c


def generate_grid(side_length: float, resolution: int, axis_direction=(1.0, 0.0, 0.0)) -> WorkspaceGrid:
    """Cube of resolution**3 points with its near face centered at the origin.

    Along the axis the coordinates span [0, side_length]; along the two
    perpendicular directions they span [-side_length/2, +side_length/2].
    """
    if not side_length > 0.0:
        raise ValueError(f"side_length must be > 0, got {side_length}")
    if isinstance(resolution, bool) or int(resolution) != resolution or resolution < 2:
        raise ValueError(f"resolution must be an integer >= 2, got {resolution!r}")
    resolution = int(resolution)
    a, b, c = grid_basis(axis_direction)
    along = np.linspace(0.0, side_length, resolution)
    across = np.linspace(-side_length / 2.0, side_length / 2.0, resolution)
    u, v, w = np.meshgrid(along, across, across, indexing="ij")
    points = (
        u.reshape(-1, 1) * a + v.reshape(-1, 1) * b + w.reshape(-1, 1) * c
    )
    return WorkspaceGrid(
        side_length=float(side_length),
        resolution=resolution,
        axis_direction=a,
        points=points,
    )


def target_pose_for_point(p) -> Pose:
    """Full target pose at p: approach axis (gripper z) points at the origin.

    The free roll about the approach axis is fixed canonically: gripper x
    is the component of world +z orthogonal to the approach axis (world +x
    when the approach is parallel to world z), and y completes the
    right-handed frame.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError("point must be a finite 3-vector")
    norm_p = float(np.linalg.norm(p))
    if norm_p == 0.0:
        raise ValueError("target pose is undefined at the origin")
    z = -p / norm_p
    x = np.array([0.0, 0.0, 1.0]) - z[2] * z
    norm_x = float(np.linalg.norm(x))
    if norm_x < _UNIT_TOL:
        x = np.array([1.0, 0.0, 0.0])
    else:
        x = x / norm_x
    y = np.cross(z, x)
    rotation = np.column_stack([x, y, z])
    return Pose(rotation, p)


def classify_point(
    chain: KinematicChain,
    p,
    ik_config: IKConfig,
    epsilon: float,
    limit_margin,
    index: int = 0,
) -> PointVerdict:
    """Run the full per-point pipeline and return the verdict.

    ``limit_margin`` is in radians (scalar or per-joint), as consumed by
    the singularity screen. ``index`` both labels the verdict and salts
    the solver's restart sequence, so a point's verdict depends only on
    (chain, point, configs, seed, index), never on evaluation order.
    """
    target = target_pose_for_point(p)
    result = solve_ik(chain, target, ik_config, salt=(index,))
    if isinstance(result, IKSolution):
        _, jac = fk_and_jacobian(chain, result.q)
        screen = screen_singularity(chain, result.q, jac, epsilon, limit_margin)
        status = STATUS_NEAR_SINGULAR if screen.near_singular else STATUS_VALID
        return PointVerdict(
            index=index,
            position=np.asarray(p, dtype=float),
            status=status,
            sub_cause=SUB_CAUSE_NONE,
            sigma_min=screen.sigma_min,
            restarts_used=result.restart_index + 1,
        )
    sub_cause = SUB_CAUSE_SELF_COLLISION if result.collision_rejections > 0 else SUB_CAUSE_NO_IK
    return PointVerdict(
        index=index,
        position=np.asarray(p, dtype=float),
        status=STATUS_UNREACHABLE,
        sub_cause=sub_cause,
        sigma_min=None,
        restarts_used=result.restarts_used,
    )


def _classify_batch(chain, entries, ik_config, epsilon, limit_margin):
    """Worker task: classify (index, reported point, evaluated point) rows."""
    out = []
    for index, p_reported, p_effective in entries:
        verdict = classify_point(chain, p_effective, ik_config, epsilon, limit_margin, index=index)
        out.append(
            PointVerdict(
                index=index,
                position=p_reported,
                status=verdict.status,
                sub_cause=verdict.sub_cause,
                sigma_min=verdict.sigma_min,
                restarts_used=verdict.restarts_used,
            )
        )
    return out


def _margin_echo(limit_margin) -> list[float] | float:
    arr = np.asarray(limit_margin, dtype=float)
    return float(arr) if arr.ndim == 0 else [float(x) for x in arr]


def compute_kd(
    chain: KinematicChain,
    grid: WorkspaceGrid,
    ik_config: IKConfig,
    epsilon: float,
    limit_margin,
    workers: int = 1,
) -> KDReport:
    """Classify every grid point and aggregate the dexterity score.

    ``workers`` only distributes the work; the report content is
    bit-identical for any worker count because each point's seed derives
    from (global seed, point index) and results merge by index.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    start = time.perf_counter()

    entries = []
    origin_adjusted = []
    for index, p in enumerate(grid.points):
        p_reported = np.array(p, dtype=float)
        if float(np.linalg.norm(p_reported)) == 0.0:
            p_effective = p_reported + ORIGIN_NUDGE * grid.axis_direction
            origin_adjusted.append(index)
        else:
            p_effective = p_reported
        entries.append((index, p_reported, p_effective))

    if workers == 1:
        verdicts = _classify_batch(chain, entries, ik_config, epsilon, limit_margin)
    else:
        n_chunks = min(len(entries), workers * 4)
        chunks = [entries[i::n_chunks] for i in range(n_chunks)]
        collected: dict[int, PointVerdict] = {}
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
            futures = [
                pool.submit(_classify_batch, chain, chunk, ik_config, epsilon, limit_margin)
                for chunk in chunks
                if chunk
            ]
            for future in futures:
                for verdict in future.result():
                    collected[verdict.index] = verdict
        verdicts = [collected[i] for i in range(len(entries))]

    n_total = len(verdicts)
    n_valid = sum(1 for v in verdicts if v.status == STATUS_VALID)
    n_singular = sum(1 for v in verdicts if v.status == STATUS_NEAR_SINGULAR)
    n_unreachable = n_total - n_valid - n_singular
    config_echo = {
        "grid": {
            "side_length": grid.side_length,
            "resolution": grid.resolution,
            "axis_direction": [float(x) for x in grid.axis_direction],
        },
        "ik": {
            "position_tolerance": ik_config.position_tolerance,
            "orientation_tolerance": ik_config.orientation_tolerance,
            "max_iterations": ik_config.max_iterations,
            "restarts": ik_config.restarts,
            "damping": ik_config.damping,
            "step_scale": ik_config.step_scale,
            "seed": int(ik_config.seed),
        },
        "epsilon": float(epsilon),
        "limit_margin": _margin_echo(limit_margin),
    }
    return KDReport(
        chain_name=chain.name,
        kd=n_valid / n_total,
        n_total=n_total,
        n_valid=n_valid,
        n_singular=n_singular,
        n_unreachable=n_unreachable,
        verdicts=tuple(verdicts),
        config_echo=config_echo,
        wall_time=time.perf_counter() - start,
        origin_adjusted_indices=tuple(origin_adjusted),
    )


def compare_designs(
    chains,
    grid: WorkspaceGrid,
    ik_config: IKConfig,
    epsilon: float,
    limit_margin_fraction: float,
    workers: int = 1,
) -> ComparisonResult:
    """Score every chain on the identical grid and sort best-first.

    The limit margin is given as a fraction of each joint's range so that
    chains with heterogeneous limits are screened consistently. Ties in
    the score break by chain name. Duplicate chain names are rejected:
    rows would be indistinguishable.
    """
    chains = list(chains)
    if not chains:
        raise ValueError("at least one chain is required")
    names = [chain.name for chain in chains]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate chain names: {', '.join(dupes)}")
    reports = [
        compute_kd(
            chain,
            grid,
            ik_config,
            epsilon,
            limit_margins(chain, limit_margin_fraction),
            workers=workers,
        )
        for chain in chains
    ]
    order = sorted(range(len(reports)), key=lambda i: (-reports[i].kd, reports[i].chain_name))
    rows = tuple(
        ComparisonRow(
            chain_name=reports[i].chain_name,
            kd=reports[i].kd,
            n_valid=reports[i].n_valid,
            n_total=reports[i].n_total,
        )
        for i in order
    )
    return ComparisonResult(rows=rows, reports=tuple(reports[i] for i in order))


def report_to_document(report: KDReport) -> dict:
    """Plain-JSON form of a report, format_version 1."""
    return {
        "format_version": FORMAT_VERSION,
        "kind": "kd_report",
        "chain_name": report.chain_name,
        "kd": report.kd,
        "n_total": report.n_total,
        "n_valid": report.n_valid,
        "n_singular": report.n_singular,
        "n_unreachable": report.n_unreachable,
        "config_echo": report.config_echo,
        "wall_time": report.wall_time,
        "origin_adjusted_indices": list(report.origin_adjusted_indices),
        "verdicts": [
            {
                "index": v.index,
                "position": [float(x) for x in v.position],
                "status": v.status,
                "sub_cause": v.sub_cause,
                "sigma_min": v.sigma_min,
                "restarts_used": v.restarts_used,
            }
            for v in report.verdicts
        ],
    }


def comparison_to_document(result: ComparisonResult) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "kd_comparison",
        "rows": [
            {
                "chain_name": row.chain_name,
                "kd": row.kd,
                "n_valid": row.n_valid,
                "n_total": row.n_total,
            }
            for row in result.rows
        ],
        "reports": [report_to_document(r) for r in result.reports],
    }


def canonical_json(document: dict) -> str:
    """The one serialization used for every artifact: stable key order,
    two-space indent, trailing newline."""
    return json.dumps(document, sort_keys=True, indent=2) + "\n"
