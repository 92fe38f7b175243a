"""Forward kinematics, Jacobian, and singularity screening.

Two independent routes are compared throughout: the package implementation
against scipy-based frame chaining (oracles.oracle_fk) and against central
finite differences of the package's own FK.
"""

import math

import numpy as np
import pytest
from scipy.linalg import svdvals

from kdbench.kinematics import (
    SingularityVerdict,
    fk_and_jacobian,
    forward_kinematics,
    jacobian,
    joint_frames,
    limit_margins,
    screen_singularity,
)
from kdbench.transforms import rotation_log
from conftest import chain_doc, joint_doc, make_chain, planar_2r, random_in_limit_configs, rigid_chain
from oracles import oracle_fk


def fd_jacobian(chain, q, h=1e-6):
    """Central finite differences of FK; the independent route for J."""
    jac = np.zeros((6, chain.dof))
    for k in range(chain.dof):
        qp = q.copy()
        qm = q.copy()
        qp[k] += h
        qm[k] -= h
        pose_p = forward_kinematics(chain, qp)
        pose_m = forward_kinematics(chain, qm)
        jac[0:3, k] = (pose_p.translation - pose_m.translation) / (2 * h)
        rel = pose_p.rotation @ pose_m.rotation.T
        jac[3:6, k] = rotation_log(rel) / (2 * h)
    return jac


def test_fk_matches_scipy_route_on_bundled(bundled_chains):
    rng = np.random.default_rng(11)
    for chain in bundled_chains.values():
        for q in random_in_limit_configs(chain, 10, rng):
            pose = forward_kinematics(chain, q)
            R_ref, p_ref = oracle_fk(chain, q)
            np.testing.assert_allclose(pose.translation, p_ref, atol=1e-12)
            np.testing.assert_allclose(pose.rotation, R_ref, atol=1e-12)


def test_fk_rest_pose_of_bimanual(bundled_chains):
    chain = bundled_chains["bimanual_8dof"]
    pose = forward_kinematics(chain, np.zeros(8))
    np.testing.assert_allclose(pose.translation, [0.33, 0.0, -0.04], atol=1e-12)
    np.testing.assert_allclose(pose.rotation[:, 2], [0.0, 0.0, -1.0], atol=1e-12)


def test_fk_planar_2r_analytic():
    chain = planar_2r(l1=0.1, l2=0.1)
    for q1, q2 in ((0.0, 0.0), (math.pi / 2, 0.0), (0.3, -1.1), (1.2, 2.0)):
        pose = forward_kinematics(chain, np.array([q1, q2]))
        expect = np.array(
            [
                0.1 * math.cos(q1) + 0.1 * math.cos(q1 + q2),
                0.1 * math.sin(q1) + 0.1 * math.sin(q1 + q2),
                0.0,
            ]
        )
        np.testing.assert_allclose(pose.translation, expect, atol=1e-12)


def test_fk_zero_dof_is_tip_offset():
    chain = rigid_chain(tip=(0.1, 0.0, 0.0))
    pose = forward_kinematics(chain, np.zeros(0))
    np.testing.assert_allclose(pose.translation, [0.1, 0.0, 0.0])
    np.testing.assert_allclose(pose.rotation, np.eye(3))


def test_joint_frames_count_and_consistency(bundled_chains):
    chain = bundled_chains["bimanual_6dof"]
    q = np.full(6, 0.25)
    frames = joint_frames(chain, q)
    assert len(frames) == 6
    pose = forward_kinematics(chain, q)
    tip = frames[-1].compose(chain.tip_offset)
    np.testing.assert_allclose(tip.translation, pose.translation, atol=1e-12)
    np.testing.assert_allclose(tip.rotation, pose.rotation, atol=1e-12)


def test_jacobian_matches_finite_differences(bundled_chains):
    rng = np.random.default_rng(5)
    for chain in bundled_chains.values():
        for q in random_in_limit_configs(chain, 5, rng):
            np.testing.assert_allclose(jacobian(chain, q), fd_jacobian(chain, q), atol=1e-6)


def test_fk_and_jacobian_consistent_with_separate_calls(bundled_chains):
    chain = bundled_chains["bimanual_8dof"]
    q = np.linspace(-0.8, 0.9, 8)
    pose, jac = fk_and_jacobian(chain, q)
    ref = forward_kinematics(chain, q)
    np.testing.assert_allclose(pose.translation, ref.translation, atol=1e-14)
    np.testing.assert_allclose(pose.rotation, ref.rotation, atol=1e-14)
    np.testing.assert_allclose(jac, jacobian(chain, q), atol=1e-14)


def test_jacobian_planar_2r_analytic():
    chain = planar_2r(l1=0.1, l2=0.1)
    q = np.array([0.4, 0.9])
    jac = jacobian(chain, q)
    s1, c1 = math.sin(q[0]), math.cos(q[0])
    s12, c12 = math.sin(q.sum()), math.cos(q.sum())
    np.testing.assert_allclose(
        jac[0:2],
        [[-0.1 * s1 - 0.1 * s12, -0.1 * s12], [0.1 * c1 + 0.1 * c12, 0.1 * c12]],
        atol=1e-12,
    )
    np.testing.assert_allclose(jac[5], [1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(jac[2:5], np.zeros((3, 2)), atol=1e-12)


def test_single_z_joint_jacobian_is_unit_angular_column():
    chain = make_chain(
        chain_doc(
            "one_z",
            [joint_doc("spin", (0, 0, 1), (0, 0, 0), (-3, 3))],
            tip_translation=(0.2, 0, 0),
        )
    )
    jac = jacobian(chain, np.array([0.7]))
    # angular part is the rotation axis itself, linear part is axis x r
    np.testing.assert_allclose(jac[3:6, 0], [0, 0, 1], atol=1e-12)
    tip = forward_kinematics(chain, np.array([0.7])).translation
    np.testing.assert_allclose(jac[0:3, 0], np.cross([0, 0, 1], tip), atol=1e-12)


# --- singularity screening ---


def test_screen_extended_2r_position_rows_is_singular():
    chain = planar_2r(l1=0.1, l2=0.1)
    q = np.zeros(2)
    jac = jacobian(chain, q)
    padded = np.zeros((6, 2))
    padded[0:3] = jac[0:3]
    verdict = screen_singularity(chain, q, padded, epsilon=1e-6, limit_margin=np.zeros(2))
    assert np.linalg.matrix_rank(padded) == 1
    assert verdict.near_singular
    assert verdict.removed_columns == frozenset()


def test_screen_interior_config_matches_independent_svd(bundled_chains):
    rng = np.random.default_rng(21)
    chain = bundled_chains["bimanual_8dof"]
    margins = limit_margins(chain, 0.02)
    for _ in range(10):
        span = chain.limits_upper - chain.limits_lower
        q = chain.limits_lower + span * (0.2 + 0.6 * rng.random(8))
        jac = jacobian(chain, q)
        verdict = screen_singularity(chain, q, jac, epsilon=1e-6, limit_margin=margins)
        assert verdict.removed_columns == frozenset()
        assert verdict.sigma_min == pytest.approx(svdvals(jac)[-1], abs=1e-9)


def test_screen_removes_at_limit_columns():
    chain = planar_2r(lo=-1.0, hi=1.0)
    q = np.array([1.0, 0.0])
    jac = jacobian(chain, q)
    verdict = screen_singularity(chain, q, jac, epsilon=1e-9, limit_margin=np.full(2, 0.05))
    assert verdict.removed_columns == frozenset({0})


def test_screen_margin_is_inclusive():
    # dyadic values so hi - q equals the margin exactly in floating point
    chain = planar_2r(lo=-1.0, hi=1.0)
    q = np.array([0.9375, 0.0])
    jac = jacobian(chain, q)
    verdict = screen_singularity(chain, q, jac, epsilon=1e-9, limit_margin=np.full(2, 0.0625))
    assert verdict.removed_columns == frozenset({0})


def test_screen_all_removed_is_singular_with_zero_sigma():
    chain = planar_2r(lo=-1.0, hi=1.0)
    q = np.array([1.0, -1.0])
    jac = jacobian(chain, q)
    verdict = screen_singularity(chain, q, jac, epsilon=1e-9, limit_margin=np.full(2, 0.1))
    assert verdict.removed_columns == frozenset({0, 1})
    assert verdict.sigma_min == 0.0
    assert verdict.near_singular


def test_screen_fewer_than_task_dim_columns_is_singular(bundled_chains):
    # a 2R chain can never span the 6-dim task space
    chain = planar_2r()
    q = np.array([0.3, 0.4])
    verdict = screen_singularity(chain, q, jacobian(chain, q), epsilon=1e-9, limit_margin=np.zeros(2))
    assert verdict.sigma_min == 0.0
    assert verdict.near_singular


def test_screen_epsilon_threshold_is_strict(bundled_chains):
    chain = bundled_chains["bimanual_8dof"]
    q = chain.mid_configuration() + 0.3
    jac = jacobian(chain, q)
    sigma = screen_singularity(chain, q, jac, epsilon=1e-9, limit_margin=np.zeros(8)).sigma_min
    at = screen_singularity(chain, q, jac, epsilon=sigma, limit_margin=np.zeros(8))
    above = screen_singularity(chain, q, jac, epsilon=sigma * 1.0000001, limit_margin=np.zeros(8))
    assert not at.near_singular  # < is strict
    assert above.near_singular


def test_screen_margin_monotonicity(bundled_chains):
    chain = bundled_chains["bimanual_8dof"]
    rng = np.random.default_rng(3)
    for q in random_in_limit_configs(chain, 5, rng):
        jac = jacobian(chain, q)
        prev_removed = frozenset()
        prev_sigma = np.inf
        for frac in (0.0, 0.05, 0.1, 0.2, 0.4, 0.6):
            verdict = screen_singularity(
                chain, q, jac, epsilon=1e-9, limit_margin=limit_margins(chain, frac)
            )
            assert verdict.removed_columns >= prev_removed
            assert verdict.sigma_min <= prev_sigma + 1e-12
            prev_removed = verdict.removed_columns
            prev_sigma = verdict.sigma_min


def test_screen_is_deterministic(bundled_chains):
    chain = bundled_chains["bimanual_7dof"]
    q = chain.mid_configuration() + 0.1
    jac = jacobian(chain, q)
    a = screen_singularity(chain, q, jac, epsilon=1e-3, limit_margin=limit_margins(chain, 0.02))
    b = screen_singularity(chain, q, jac, epsilon=1e-3, limit_margin=limit_margins(chain, 0.02))
    assert a == b


def test_screen_rejects_bad_epsilon_and_margin(bundled_chains):
    chain = bundled_chains["bimanual_6dof"]
    q = chain.mid_configuration()
    jac = jacobian(chain, q)
    with pytest.raises(ValueError):
        screen_singularity(chain, q, jac, epsilon=0.0, limit_margin=np.zeros(6))
    with pytest.raises(ValueError):
        screen_singularity(chain, q, jac, epsilon=1e-3, limit_margin=np.full(6, -0.1))


def test_limit_margins_scale_with_range():
    chain = planar_2r(lo=-2.0, hi=2.0)
    np.testing.assert_allclose(limit_margins(chain, 0.05), [0.2, 0.2])
    np.testing.assert_allclose(limit_margins(chain, 0.0), [0.0, 0.0])


def test_fk_rejects_wrong_length(bundled_chains):
    chain = bundled_chains["bimanual_8dof"]
    with pytest.raises(ValueError):
        forward_kinematics(chain, np.zeros(7))
