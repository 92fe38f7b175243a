"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from kdbench.chain import parse_chain

BUNDLED = ("bimanual_8dof", "bimanual_7dof", "bimanual_6dof", "dual_arm_12dof")


def joint_doc(name, axis, translation, limits, rpy=(0.0, 0.0, 0.0)):
    return {
        "name": name,
        "axis": list(axis),
        "origin": {"translation": list(translation), "rotation_rpy": list(rpy)},
        "limits": list(limits),
    }


def chain_doc(name, joints, tip_translation=(0.0, 0.0, 0.0), tip_rpy=(0.0, 0.0, 0.0),
              capsules=(), exemptions=()):
    return {
        "format_version": 1,
        "name": name,
        "joints": list(joints),
        "tip_offset": {"translation": list(tip_translation), "rotation_rpy": list(tip_rpy)},
        "capsules": [dict(c) for c in capsules],
        "collision_exemptions": [list(e) for e in exemptions],
    }


def make_chain(doc):
    return parse_chain(json.dumps(doc))


def planar_2r(l1=0.1, l2=0.1, lo=-math.pi, hi=math.pi):
    """Two z-revolute joints in the xy-plane; tip at the end of link 2."""
    return make_chain(
        chain_doc(
            "planar_2r",
            [
                joint_doc("shoulder", (0, 0, 1), (0, 0, 0), (lo, hi)),
                joint_doc("elbow", (0, 0, 1), (l1, 0, 0), (lo, hi)),
            ],
            tip_translation=(l2, 0, 0),
        )
    )


def rigid_chain(tip=(0.1, 0.0, 0.0)):
    return make_chain(chain_doc("rigid", [], tip_translation=tip))


@pytest.fixture(scope="session")
def bundled_chains():
    from kdbench.cli import resolve_chain_text

    out = {}
    for name in BUNDLED:
        text, _ = resolve_chain_text(name)
        out[name] = parse_chain(text)
    return out


def random_in_limit_configs(chain, count, rng):
    span = chain.limits_upper - chain.limits_lower
    return chain.limits_lower + rng.random((count, chain.dof)) * span


def strip_wall_times(doc):
    """Copy of a report/comparison document with every wall_time removed.

    Wall time is the one field allowed to differ between identical runs.
    """
    if isinstance(doc, dict):
        return {k: strip_wall_times(v) for k, v in doc.items() if k != "wall_time"}
    if isinstance(doc, list):
        return [strip_wall_times(v) for v in doc]
    return doc
