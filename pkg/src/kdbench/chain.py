"""Serial-chain description: in-memory model, JSON chain files, validation.

A chain runs from the fixed gripper (the base coordinate frame) to the free
gripper (the tool frame at the tip). Only revolute joints are supported;
prismatic joints are a documented extension point. Collision geometry is a
list of capsules attached to joint frames, with an explicit exemption list
for pairs that are allowed to touch (typically adjacent links).

Chain file format (JSON, ``format_version`` 1)::

    {
      "format_version": 1,
      "name": "my_chain",
      "joints": [
        {"name": "j0", "axis": [0, 0, 1],
         "origin": {"translation": [0, 0, 0], "rotation_rpy": [0, 0, 0]},
         "limits": [-3.14, 3.14]}
      ],
      "tip_offset": {"translation": [0.1, 0, 0], "rotation_rpy": [0, 0, 0]},
      "capsules": [{"joint": "j0", "a": [0, 0, 0], "b": [0.1, 0, 0],
                    "radius": 0.02}],
      "collision_exemptions": [[0, 1]]
    }

Angles are radians, lengths are meters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .transforms import ORTHONORMALITY_TOL, Pose, matrix_to_rpy, rpy_to_matrix

FORMAT_VERSION = 1

AXIS_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding, tied to the chain-document field it concerns."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


class ChainError(ValueError):
    """Raised for chain documents that cannot be turned into a valid chain."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class ChainSyntaxError(ChainError):
    """Chain file is not well-formed JSON."""


@dataclass(frozen=True, eq=False)
class JointSpec:
    """Single revolute joint: rotation axis in the parent frame, the fixed
    transform from the previous joint frame, and position limits."""

    name: str
    axis: np.ndarray
    origin: Pose
    limit_lower: float
    limit_upper: float

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float).reshape(3))
        object.__setattr__(self, "limit_lower", float(self.limit_lower))
        object.__setattr__(self, "limit_upper", float(self.limit_upper))


@dataclass(frozen=True, eq=False)
class CapsuleSpec:
    """Capsule collision primitive in the frame of the joint it rides on.

    Coincident endpoints are allowed and degenerate to a sphere.
    """

    attached_joint: str
    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "endpoint_a", np.asarray(self.endpoint_a, dtype=float).reshape(3))
        object.__setattr__(self, "endpoint_b", np.asarray(self.endpoint_b, dtype=float).reshape(3))
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True, eq=False)
class KinematicChain:
    """Immutable serial chain from the fixed gripper to the free gripper.

    Instances are safe to share across worker processes; all mutating access
    happens at construction time.
    """

    name: str
    joints: tuple[JointSpec, ...]
    tip_offset: Pose
    capsules: tuple[CapsuleSpec, ...] = ()
    collision_exemptions: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "capsules", tuple(self.capsules))
        pairs = frozenset(
            (min(int(i), int(j)), max(int(i), int(j))) for i, j in self.collision_exemptions
        )
        object.__setattr__(self, "collision_exemptions", pairs)

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def limits_lower(self) -> np.ndarray:
        return np.array([j.limit_lower for j in self.joints])

    @property
    def limits_upper(self) -> np.ndarray:
        return np.array([j.limit_upper for j in self.joints])

    def joint_index(self, name: str) -> int:
        for k, joint in enumerate(self.joints):
            if joint.name == name:
                return k
        raise KeyError(f"chain {self.name!r} has no joint named {name!r}")

    def check_q(self, q) -> np.ndarray:
        """Coerce a joint vector and reject dimension mismatches."""
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape != (self.dof,):
            raise ValueError(
                f"joint vector has {q.shape[0]} values, chain {self.name!r} has {self.dof} joints"
            )
        return q

    def within_limits(self, q, tol: float = 0.0) -> bool:
        q = self.check_q(q)
        if self.dof == 0:
            return True
        return bool(
            np.all(q >= self.limits_lower - tol) and np.all(q <= self.limits_upper + tol)
        )

    def mid_configuration(self) -> np.ndarray:
        return (self.limits_lower + self.limits_upper) / 2.0

    def reach_upper_bound(self) -> float:
        """Upper bound on the tip distance from the base over all q."""
        total = float(np.linalg.norm(self.tip_offset.translation))
        for joint in self.joints:
            total += float(np.linalg.norm(joint.origin.translation))
        return total


def validate_chain(chain: KinematicChain) -> list[Diagnostic]:
    """Check every chain invariant; an empty list means the chain is valid."""
    out: list[Diagnostic] = []
    if not chain.name:
        out.append(Diagnostic("name", "chain name must be a non-empty string"))

    seen: set[str] = set()
    for k, joint in enumerate(chain.joints):
        where = f"joints[{k}]"
        if not joint.name:
            out.append(Diagnostic(f"{where}.name", "joint name must be non-empty"))
        elif joint.name in seen:
            out.append(Diagnostic(f"{where}.name", f"duplicate joint name {joint.name!r}"))
        seen.add(joint.name)

        if not np.all(np.isfinite(joint.axis)):
            out.append(Diagnostic(f"{where}.axis", f"axis of joint {joint.name!r} is not finite"))
        else:
            norm = float(np.linalg.norm(joint.axis))
            if abs(norm - 1.0) > AXIS_UNIT_TOL:
                out.append(
                    Diagnostic(
                        f"{where}.axis",
                        f"axis of joint {joint.name!r} has norm {norm:.12g}, expected unit",
                    )
                )
        if not joint.origin.is_orthonormal():
            out.append(
                Diagnostic(
                    f"{where}.origin.rotation_rpy",
                    f"origin rotation of joint {joint.name!r} is not orthonormal with det +1",
                )
            )
        if not (
            np.isfinite(joint.limit_lower)
            and np.isfinite(joint.limit_upper)
            and joint.limit_lower < joint.limit_upper
        ):
            out.append(
                Diagnostic(
                    f"{where}.limits",
                    f"joint {joint.name!r} needs limit_lower < limit_upper, "
                    f"got [{joint.limit_lower:.12g}, {joint.limit_upper:.12g}]",
                )
            )

    if not chain.tip_offset.is_orthonormal():
        out.append(Diagnostic("tip_offset.rotation_rpy", "tip offset rotation is not orthonormal"))

    joint_names = {j.name for j in chain.joints}
    for k, capsule in enumerate(chain.capsules):
        where = f"capsules[{k}]"
        if capsule.attached_joint not in joint_names:
            out.append(
                Diagnostic(
                    f"{where}.joint",
                    f"capsule references unknown joint {capsule.attached_joint!r}",
                )
            )
        if not (np.isfinite(capsule.radius) and capsule.radius > 0.0):
            out.append(Diagnostic(f"{where}.radius", f"radius must be > 0, got {capsule.radius:.12g}"))
        if not (np.all(np.isfinite(capsule.endpoint_a)) and np.all(np.isfinite(capsule.endpoint_b))):
            out.append(Diagnostic(f"{where}", "capsule endpoints must be finite"))

    n_capsules = len(chain.capsules)
    for i, j in sorted(chain.collision_exemptions):
        where = "collision_exemptions"
        if i == j:
            out.append(Diagnostic(where, f"exemption pair [{i}, {j}] repeats one capsule"))
        for idx in (i, j):
            if not 0 <= idx < n_capsules:
                out.append(
                    Diagnostic(
                        where,
                        f"exemption pair [{i}, {j}] references capsule {idx}, "
                        f"chain has {n_capsules} capsules",
                    )
                )
    return out


# ---------------------------------------------------------------------------
# document reading


class _DocReader:
    """Extract typed fields from a parsed JSON document, collecting one
    diagnostic per problem instead of stopping at the first."""

    def __init__(self):
        self.diagnostics: list[Diagnostic] = []

    def fail(self, where: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(where, message))

    def get(self, obj: dict, where: str, key: str, kind: type, required: bool = True):
        path = f"{where}.{key}" if where else key
        if key not in obj:
            if required:
                self.fail(path, "missing required field")
            return None
        value = obj[key]
        if kind is float:
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return float(value)
            self.fail(path, f"expected a number, got {type(value).__name__}")
            return None
        if kind is int:
            if isinstance(value, int) and not isinstance(value, bool):
                return value
            self.fail(path, f"expected an integer, got {type(value).__name__}")
            return None
        if not isinstance(value, kind):
            self.fail(path, f"expected {kind.__name__}, got {type(value).__name__}")
            return None
        return value

    def vec3(self, obj: dict, where: str, key: str):
        raw = self.get(obj, where, key, list)
        if raw is None:
            return None
        path = f"{where}.{key}" if where else key
        if len(raw) != 3 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
        ):
            self.fail(path, "expected 3 numbers")
            return None
        return np.array(raw, dtype=float)

    def transform(self, obj: dict, where: str, key: str) -> Pose | None:
        raw = self.get(obj, where, key, dict)
        if raw is None:
            return None
        path = f"{where}.{key}" if where else key
        translation = self.vec3(raw, path, "translation")
        rpy = self.vec3(raw, path, "rotation_rpy")
        if translation is None or rpy is None:
            return None
        return Pose(rpy_to_matrix(rpy), translation)


def chain_from_document(doc) -> KinematicChain:
    """Build and validate a chain from a parsed chain document.

    Raises :class:`ChainError` carrying one diagnostic per structural or
    semantic problem.
    """
    reader = _DocReader()
    if not isinstance(doc, dict):
        raise ChainError([Diagnostic("", f"chain document must be an object, got {type(doc).__name__}")])

    version = reader.get(doc, "", "format_version", int)
    if version is not None and version != FORMAT_VERSION:
        reader.fail("format_version", f"unsupported format_version {version}, expected {FORMAT_VERSION}")

    name = reader.get(doc, "", "name", str) or ""

    joints: list[JointSpec] = []
    raw_joints = reader.get(doc, "", "joints", list)
    if raw_joints is not None:
        for k, raw in enumerate(raw_joints):
            where = f"joints[{k}]"
            if not isinstance(raw, dict):
                reader.fail(where, "expected an object")
                continue
            jname = reader.get(raw, where, "name", str)
            axis = reader.vec3(raw, where, "axis")
            origin = reader.transform(raw, where, "origin")
            limits = reader.get(raw, where, "limits", list)
            lo = hi = None
            if limits is not None:
                if len(limits) == 2 and all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in limits
                ):
                    lo, hi = float(limits[0]), float(limits[1])
                else:
                    reader.fail(f"{where}.limits", "expected [lower, upper]")
            if any(v is None for v in (jname, axis, origin, lo, hi)):
                continue
            joints.append(JointSpec(jname, axis, origin, lo, hi))

    tip_offset = reader.transform(doc, "", "tip_offset")

    capsules: list[CapsuleSpec] = []
    raw_capsules = reader.get(doc, "", "capsules", list, required=False) or []
    for k, raw in enumerate(raw_capsules):
        where = f"capsules[{k}]"
        if not isinstance(raw, dict):
            reader.fail(where, "expected an object")
            continue
        cjoint = reader.get(raw, where, "joint", str)
        a = reader.vec3(raw, where, "a")
        b = reader.vec3(raw, where, "b")
        radius = reader.get(raw, where, "radius", float)
        if any(v is None for v in (cjoint, a, b, radius)):
            continue
        capsules.append(CapsuleSpec(cjoint, a, b, radius))

    exemptions: list[tuple[int, int]] = []
    raw_exemptions = reader.get(doc, "", "collision_exemptions", list, required=False) or []
    for k, raw in enumerate(raw_exemptions):
        if (
            isinstance(raw, list)
            and len(raw) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in raw)
        ):
            exemptions.append((raw[0], raw[1]))
        else:
            reader.fail(f"collision_exemptions[{k}]", "expected a pair of capsule indices")

    if reader.diagnostics:
        raise ChainError(reader.diagnostics)
    assert tip_offset is not None

    chain = KinematicChain(
        name=name,
        joints=tuple(joints),
        tip_offset=tip_offset,
        capsules=tuple(capsules),
        collision_exemptions=frozenset(exemptions),
    )
    problems = validate_chain(chain)
    if problems:
        raise ChainError(problems)
    return chain


def parse_chain(text: str) -> KinematicChain:
    """Parse a chain file; syntax errors are reported with line/column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChainSyntaxError(
            [Diagnostic("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")]
        ) from exc
    return chain_from_document(doc)


def load_chain(path) -> KinematicChain:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_chain(fh.read())


# ---------------------------------------------------------------------------
# document writing


def _transform_to_doc(pose: Pose) -> dict:
    return {
        "translation": [float(v) for v in pose.translation],
        "rotation_rpy": [float(v) for v in matrix_to_rpy(pose.rotation)],
    }


def chain_to_document(chain: KinematicChain) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "name": chain.name,
        "joints": [
            {
                "name": j.name,
                "axis": [float(v) for v in j.axis],
                "origin": _transform_to_doc(j.origin),
                "limits": [j.limit_lower, j.limit_upper],
            }
            for j in chain.joints
        ],
        "tip_offset": _transform_to_doc(chain.tip_offset),
        "capsules": [
            {
                "joint": c.attached_joint,
                "a": [float(v) for v in c.endpoint_a],
                "b": [float(v) for v in c.endpoint_b],
                "radius": c.radius,
            }
            for c in chain.capsules
        ],
        "collision_exemptions": [[i, j] for i, j in sorted(chain.collision_exemptions)],
    }
    return doc


def chain_to_json(chain: KinematicChain) -> str:
    return json.dumps(chain_to_document(chain), indent=2, sort_keys=True) + "\n"
