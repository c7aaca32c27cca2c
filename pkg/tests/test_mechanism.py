import math

import numpy as np
import pytest

from conftest import central_difference, random_quat, rel_err
from maxsim.mechanism import (
    WORLD,
    Body,
    ContactPoint,
    JointConstraint,
    MechanismError,
    build_mechanism,
    contact_jacobian,
    friction_basis,
    friction_map_derivative,
    friction_maps,
    joint_jacobian,
    joint_residual,
    max_joint_violation,
    signed_distance,
)
from maxsim.quaternion import IDENTITY, quat_from_axis_angle, quat_multiply, rotate_vector
from test_quaternion import perturb

KINDS = ["spherical", "revolute", "prismatic", "fixed"]


def body(id="b", x=(0, 0, 0), q=IDENTITY):
    return Body(id, 1.0, [0.1, 0.1, 0.1], x=x, q=q)


def test_body_validation():
    with pytest.raises(MechanismError):
        Body("b", 0.0, [1, 1, 1])
    with pytest.raises(MechanismError):
        Body("b", 1.0, [[1, 0.5, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(MechanismError):
        Body("b", 1.0, [1.0, -1.0, 1.0])
    b = Body("b", 1.0, [1, 2, 3], q=[2.0, 0, 0, 0])
    np.testing.assert_array_equal(b.q, IDENTITY)


def test_single_contact_graph_has_body_and_contact_nodes():
    m = build_mechanism([body()], [], [ContactPoint("c", "b", p=[0, 0, -0.5])])
    # the contact is split into four local nodes, all hanging off the one body
    assert m.graph.n_nodes == 1 + 4
    body_edges = [e for e in m.graph.edges if 0 in e]
    assert len(body_edges) == 3
    assert m.fill_in_count == 1


def test_three_link_chain_is_accepted():
    bodies = [body("trunk"), body("upper", x=(0, 0, -1)), body("lower", x=(0, 0, -2))]
    joints = [JointConstraint("hip", "trunk", "upper", anchor_parent=[0, 0, -0.5], anchor_child=[0, 0, 0.5]),
              JointConstraint("knee", "upper", "lower", anchor_parent=[0, 0, -0.5], anchor_child=[0, 0, 0.5])]
    foot = ContactPoint("foot", "lower", p=[0, 0, -0.5])
    m = build_mechanism(bodies, joints, [foot])
    assert m.graph.n_nodes == 3 + 2 + 4
    # contact nodes are eliminated before the body they hang from, and the
    # tree part adds no fill-in
    order = m.ordering
    for n in m.contact_nodes(0):
        assert order.index(n) < order.index(m.body_node(2))
    assert m.fill_in_count == 1


def test_kinematic_loop_rejected():
    with pytest.raises(MechanismError, match="loop"):
        build_mechanism([body("a"), body("b2")], [JointConstraint("j1", "a", "b2"), JointConstraint("j2", "a", "b2")])


def test_loop_through_world_rejected():
    joints = [JointConstraint("j1", WORLD, "a"), JointConstraint("j2", WORLD, "b2"), JointConstraint("j3", "a", "b2")]
    with pytest.raises(MechanismError, match="loop"):
        build_mechanism([body("a"), body("b2")], joints)


@pytest.mark.parametrize(
    "bodies, joints, contacts",
    [
        ([body("a"), body("a")], [], []),
        ([body("a")], [JointConstraint("j", "a", "missing")], []),
        ([body("a")], [], [ContactPoint("c", "missing", p=[0, 0, 0])]),
        ([body("a")], [], [ContactPoint("a", "a", p=[0, 0, 0])]),
        ([body(WORLD)], [], []),
    ],
)
def test_invalid_mechanisms_rejected(bodies, joints, contacts):
    with pytest.raises(MechanismError):
        build_mechanism(bodies, joints, contacts)


def test_separate_world_anchored_subtrees_factor(rng):
    bodies = [body("a", x=(1, 0, 0)), body("b2", x=(-1, 0, 0))]
    joints = [JointConstraint("ja", WORLD, "a", anchor_parent=[1, 0, 1], anchor_child=[0, 0, 1]),
              JointConstraint("jb", WORLD, "b2", anchor_parent=[-1, 0, 1], anchor_child=[0, 0, 1])]
    m = build_mechanism(bodies, joints)
    # world joints are roots: each comes after its body in the ordering
    for j in range(2):
        assert m.ordering.index(m.joint_node(j)) > m.ordering.index(m.body_node(j))


def test_joint_dimensions():
    dims = {k: JointConstraint("j", WORLD, "b", k).dim for k in KINDS}
    assert dims == {"spherical": 3, "revolute": 5, "prismatic": 5, "fixed": 6}
    with pytest.raises(MechanismError):
        JointConstraint("j", WORLD, "b", "helical")


def test_spherical_residual_examples():
    j = JointConstraint("j", "p", "c", "spherical", anchor_parent=[0, 0, -0.5], anchor_child=[0, 0, 0.5])
    states = {"p": (np.zeros(3), IDENTITY), "c": (np.array([0.0, 0.0, -1.0]), IDENTITY)}
    np.testing.assert_allclose(joint_residual(j, states), np.zeros(3), atol=1e-15)
    states["c"] = (np.array([0.1, 0.0, -1.0]), IDENTITY)
    np.testing.assert_allclose(joint_residual(j, states), [-0.1, 0.0, 0.0], atol=1e-15)


def test_prismatic_orientation_rows():
    j = JointConstraint("j", WORLD, "c", "prismatic", axis=[0, 0, 1], rest_offset=IDENTITY)
    q = quat_from_axis_angle([0, 0, 1], 0.2)
    r = joint_residual(j, {"c": (np.zeros(3), q)})
    np.testing.assert_allclose(r[:3], [0.0, 0.0, math.sin(0.1)], atol=1e-15)
    np.testing.assert_allclose(r[3:], 0.0, atol=1e-15)


def test_revolute_allows_rotation_about_axis_only():
    j = JointConstraint("j", WORLD, "c", "revolute", axis=[0, 1, 0], rest_offset=IDENTITY)
    about_axis = joint_residual(j, {"c": (np.zeros(3), quat_from_axis_angle([0, 1, 0], 0.7))})
    np.testing.assert_allclose(about_axis, 0.0, atol=1e-15)
    off_axis = joint_residual(j, {"c": (np.zeros(3), quat_from_axis_angle([1, 0, 0], 0.7))})
    assert np.abs(off_axis[3:]).max() > 0.1


def test_prismatic_allows_translation_along_axis_only():
    j = JointConstraint("j", WORLD, "c", "prismatic", axis=[1, 1, 0], rest_offset=IDENTITY)
    along = joint_residual(j, {"c": (np.array([0.3, 0.3, 0.0]), IDENTITY)})
    np.testing.assert_allclose(along, 0.0, atol=1e-15)
    across = joint_residual(j, {"c": (np.array([0.3, -0.3, 0.0]), IDENTITY)})
    assert np.abs(across).max() > 0.1


def test_rest_offset_defaults_to_initial_pose():
    q = quat_from_axis_angle([1, 2, 3], 0.8)
    m = build_mechanism([body("a"), body("c", x=(0, 0, -1), q=q)],
                        [JointConstraint("j", "a", "c", "fixed", anchor_parent=[0, 0, -1])])
    assert max_joint_violation(m, m.initial_state()) < 1e-12


def _pose_map(j, poses):
    return {k: v for k, v in poses.items() if k != WORLD}


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("world", [False, True])
def test_joint_jacobian_matches_finite_differences(kind, world, rng):
    for _ in range(100):
        j = JointConstraint("j", WORLD if world else "p", "c", kind, anchor_parent=rng.normal(size=3),
                            anchor_child=rng.normal(size=3), axis=rng.normal(size=3), rest_offset=random_quat(rng))
        poses = {"p": (rng.normal(size=3), random_quat(rng)), "c": (rng.normal(size=3), random_quat(rng))}
        G = joint_jacobian(j, poses)
        assert set(G) == ({"c"} if world else {"p", "c"})
        for key, blk in G.items():
            x0, q0 = poses[key]

            def g(d, key=key, x0=x0, q0=q0):
                p2 = dict(poses)
                p2[key] = (x0 + d[:3], perturb(q0, d[3:]))
                return joint_residual(j, p2)

            assert rel_err(blk, central_difference(g, np.zeros(6))) < 1e-6


def test_spherical_parent_translation_block_is_identity(rng):
    j = JointConstraint("j", "p", "c", anchor_parent=rng.normal(size=3), anchor_child=rng.normal(size=3))
    G = joint_jacobian(j, {"p": (np.zeros(3), random_quat(rng)), "c": (np.zeros(3), random_quat(rng))})
    np.testing.assert_array_equal(G["p"][:, :3], np.eye(3))
    np.testing.assert_array_equal(G["c"][:, :3], -np.eye(3))


@pytest.mark.parametrize(
    "x, q, expected",
    [
        ([0, 0, 0.5], IDENTITY, 0.0),
        ([0, 0, 1.0], IDENTITY, 0.5),
        ([0, 0, 0.2], [math.sqrt(0.5), 0, math.sqrt(0.5), 0], 0.2),
    ],
)
def test_signed_distance_examples(x, q, expected):
    cp = ContactPoint("c", "b", p=[0, 0, -0.5])
    assert signed_distance(cp, x, q) == pytest.approx(expected, abs=1e-15)


def test_signed_distance_respects_normal_and_offset():
    cp = ContactPoint("c", "b", p=[0, 0, 0], normal=[0, 0, 2], offset=0.25)
    assert signed_distance(cp, [5, -3, 1.0], IDENTITY) == pytest.approx(0.75)


def test_contact_jacobian(rng):
    cp = ContactPoint("c", "b", p=[0, 0, 0])
    np.testing.assert_array_equal(contact_jacobian(cp, np.zeros(3), random_quat(rng)),
                                  [0, 0, 1, 0, 0, 0])
    for _ in range(100):
        cp = ContactPoint("c", "b", p=rng.normal(size=3), normal=rng.normal(size=3), offset=rng.normal())
        x, q = rng.normal(size=3), random_quat(rng)
        fd = central_difference(lambda d: signed_distance(cp, x + d[:3], perturb(q, d[3:])), np.zeros(6))
        assert rel_err(contact_jacobian(cp, x, q), fd) < 1e-6


def test_friction_basis():
    np.testing.assert_allclose(friction_basis([0, 0, 1]), [[1, 0, 0], [0, 1, 0]])
    for n in ([0, 0, 1], [1, 2, 3], [0, -1, 0]):
        for k in (1, 2, 3, 5):
            B = friction_basis(n, k)
            nn = np.asarray(n, dtype=float) / np.linalg.norm(n)
            assert B.shape == (k, 3)
            np.testing.assert_allclose(np.linalg.norm(B, axis=1), 1.0, atol=1e-12)
            assert np.abs(B @ nn).max() < 1e-12


def test_friction_maps_examples():
    cp = ContactPoint("c", "b", p=[0, 0, 0])
    Bx, Bq = friction_maps(cp, IDENTITY)
    np.testing.assert_array_equal(Bx.T, np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]).T)
    np.testing.assert_array_equal(Bq, np.zeros((4, 3)))
    cp = ContactPoint("c", "b", p=[0, 0, -0.5])
    _, Bq = friction_maps(cp, IDENTITY)
    np.testing.assert_allclose(Bq.T[:, 0], [0.0, -0.5, 0.0])


def test_friction_map_derivative_matches_finite_differences(rng):
    for _ in range(100):
        cp = ContactPoint("c", "b", p=rng.normal(size=3), normal=rng.normal(size=3), n_pairs=int(rng.integers(1, 4)))
        q = random_quat(rng)
        D = friction_map_derivative(cp, q)
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1e-6
            fd = (friction_maps(cp, perturb(q, e))[1] - friction_maps(cp, perturb(q, -e))[1]) / 2e-6
            assert rel_err(D[i], fd) < 1e-6


def test_rotation_about_contact_point_has_no_tangential_velocity(rng):
    for _ in range(50):
        cp = ContactPoint("c", "b", p=rng.normal(size=3), normal=rng.normal(size=3), n_pairs=3)
        x, q = rng.normal(size=3), random_quat(rng)
        omega = rng.normal(size=3)  # body frame
        # zero velocity at the contact point: v = -R (omega x p)
        v = -rotate_vector(q, np.cross(omega, cp.p))
        Bx, Bq = friction_maps(cp, q)
        assert np.abs(Bx @ v + Bq @ omega).max() < 1e-10


def test_assembled_chain_joint_residual_is_zero():
    bodies = [body(f"l{i}", x=(0, 0, -i)) for i in range(4)]
    joints = [JointConstraint(f"j{i}", f"l{i - 1}", f"l{i}", kind, anchor_parent=[0, 0, -0.5], anchor_child=[0, 0, 0.5])
              for i, kind in zip(range(1, 4), ["spherical", "revolute", "fixed"])]
    m = build_mechanism(bodies, joints)
    assert max_joint_violation(m, m.initial_state()) <= 1e-12
    poses = {b.id: (b.x, b.q) for b in bodies}
    for j in m.joints:
        assert np.abs(joint_residual(j, poses)).max() <= 1e-12


def test_quaternion_composition_in_joint_error(rng):
    # relative rotation of the child about the revolute axis leaves the residual at 0
    qp = random_quat(rng)
    qc = quat_multiply(qp, quat_from_axis_angle([0, 0, 1], 1.1))
    j = JointConstraint("j", "p", "c", "revolute", axis=[0, 0, 1], rest_offset=IDENTITY)
    assert np.abs(joint_residual(j, {"p": (np.zeros(3), qp), "c": (np.zeros(3), qc)})).max() < 1e-12
