import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_difference, random_quat, rel_err
from maxsim.quaternion import (
    IDENTITY,
    discrete_velocities,
    integrate_configuration,
    integrator_tangent_k,
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
    quat_normalize,
    relative_quat_k,
    rotate_vector,
    rotation_jacobian,
    rotation_matrix,
    skew,
)

S2 = math.sqrt(0.5)


def perturb(q, theta):
    """q * exp(theta / 2) with theta a body-frame rotation vector."""
    a = np.linalg.norm(theta)
    if a == 0.0:
        return np.array(q, dtype=float)
    return quat_multiply(q, quat_from_axis_angle(theta / a, a))


def test_multiply_identity_and_inverse(rng):
    q = random_quat(rng)
    np.testing.assert_allclose(quat_multiply(IDENTITY, q), q, atol=1e-15)
    np.testing.assert_allclose(quat_multiply(q, quat_conjugate(q)), IDENTITY, atol=1e-15)


def test_multiply_quarter_turns_compose_to_half_turn():
    q = np.array([S2, 0.0, 0.0, S2])
    np.testing.assert_allclose(quat_multiply(q, q), [0.0, 0.0, 0.0, 1.0], atol=1e-15)


def test_product_of_unit_quaternions_is_unit(rng):
    for _ in range(100):
        p = quat_multiply(random_quat(rng), random_quat(rng))
        assert abs(np.linalg.norm(p) - 1.0) < 1e-12


@pytest.mark.parametrize(
    "q, u, expected",
    [
        (IDENTITY, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
        ([S2, 0.0, 0.0, S2], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        ([S2, 0.0, S2, 0.0], [0.0, 0.0, -0.5], [-0.5, 0.0, 0.0]),
    ],
)
def test_rotate_vector_examples(q, u, expected):
    np.testing.assert_allclose(rotate_vector(q, u), expected, atol=1e-15)


def test_rotate_vector_matches_matrix_and_preserves_inner_products(rng):
    for _ in range(50):
        q = random_quat(rng)
        u, w = rng.normal(size=3), rng.normal(size=3)
        Ru, Rw = rotate_vector(q, u), rotate_vector(q, w)
        np.testing.assert_allclose(Ru, rotation_matrix(q) @ u, atol=1e-14)
        assert abs(Ru @ Rw - u @ w) < 1e-12
        assert abs(np.linalg.norm(Ru) - np.linalg.norm(u)) < 1e-12


def test_skew_definition():
    np.testing.assert_array_equal(skew([1.0, 2.0, 3.0]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])
    np.testing.assert_array_equal(skew([0.0, 0.0, 0.0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(skew([1.0, 2.0, 3.0]) @ [1.0, 2.0, 3.0], np.zeros(3))


def test_skew_is_exactly_antisymmetric_and_matches_cross(rng):
    u, w = rng.normal(size=3), rng.normal(size=3)
    S = skew(u)
    np.testing.assert_array_equal(S, -S.T)
    np.testing.assert_allclose(S @ w, np.cross(u, w), atol=1e-15)


def test_discrete_velocities_examples():
    v, w = discrete_velocities([0, 0, 0], IDENTITY, [0.01, 0, 0], IDENTITY, 0.01)
    np.testing.assert_allclose(v, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(w, np.zeros(3))
    v, w = discrete_velocities([1, 2, 3], IDENTITY, [1, 2, 3], IDENTITY, 0.01)
    np.testing.assert_array_equal(v, np.zeros(3))
    np.testing.assert_array_equal(w, np.zeros(3))
    q1 = np.array([math.cos(0.05), 0.0, 0.0, math.sin(0.05)])
    _, w = discrete_velocities(np.zeros(3), IDENTITY, np.zeros(3), q1, 0.01)
    np.testing.assert_allclose(w, [0.0, 0.0, 9.99583], atol=5e-6)


@pytest.mark.parametrize("dt", [0.0, -0.01])
def test_nonpositive_dt_rejected(dt):
    with pytest.raises(ValueError):
        discrete_velocities(np.zeros(3), IDENTITY, np.zeros(3), IDENTITY, dt)
    with pytest.raises(ValueError):
        integrate_configuration(np.zeros(3), IDENTITY, np.zeros(3), np.zeros(3), dt)


def test_integrate_examples():
    x, q = integrate_configuration([0.3, 0.2, 0.1], IDENTITY, np.zeros(3), np.zeros(3), 0.01)
    np.testing.assert_array_equal(x, [0.3, 0.2, 0.1])
    np.testing.assert_array_equal(q, IDENTITY)
    x, _ = integrate_configuration(np.zeros(3), IDENTITY, [1.0, 0.0, 0.0], np.zeros(3), 0.01)
    np.testing.assert_allclose(x, [0.01, 0.0, 0.0])
    _, q = integrate_configuration(np.zeros(3), IDENTITY, np.zeros(3), [0.0, 0.0, 9.99583], 0.01)
    np.testing.assert_allclose(q, [math.cos(0.05), 0.0, 0.0, math.sin(0.05)], atol=1e-7)


def test_integrate_rejects_infeasible_angular_velocity():
    with pytest.raises(ValueError):
        integrate_configuration(np.zeros(3), IDENTITY, np.zeros(3), [250.0, 0.0, 0.0], 0.01)


unit = st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 0.1)
vec = st.lists(st.floats(-5.0, 5.0), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(q0=unit, rot=st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3), x0=vec, x1=vec,
       dt=st.floats(1e-3, 0.1))
def test_round_trip_reproduces_configuration(q0, rot, x0, x1, dt):
    q0 = quat_normalize(q0)
    rot = np.asarray(rot)
    # relative rotation below pi/2
    q1 = perturb(q0, rot * (0.49 * math.pi / max(1.0, np.linalg.norm(rot))))
    v, w = discrete_velocities(x0, q0, x1, q1, dt)
    x, q = integrate_configuration(x0, q0, v, w, dt)
    np.testing.assert_allclose(x, x1, atol=1e-10)
    if q @ q1 < 0:
        q = -q
    np.testing.assert_allclose(q, q1, atol=1e-10)
    assert abs(np.linalg.norm(q) - 1.0) < 1e-9
    v2, w2 = discrete_velocities(x0, q0, x, q, dt)
    np.testing.assert_allclose(w2, w, atol=1e-10 * max(1.0, np.abs(w).max()))


def test_rotation_jacobian_matches_finite_differences(rng):
    for _ in range(100):
        q, u = random_quat(rng), rng.normal(size=3)
        fd = central_difference(lambda th: rotate_vector(perturb(q, th), u), np.zeros(3))
        assert rel_err(rotation_jacobian(q, u), fd) < 1e-6


def test_rotation_jacobian_special_cases():
    np.testing.assert_array_equal(rotation_jacobian(IDENTITY, np.zeros(3)), np.zeros((3, 3)))
    # d/dtheta (e_z rotated by a small body rotation) = theta x e_z = -skew(e_z) theta
    np.testing.assert_allclose(rotation_jacobian(IDENTITY, [0.0, 0.0, 1.0]), -skew([0.0, 0.0, 1.0]))


def test_integrator_tangent_matches_finite_differences(rng):
    dt = 0.05
    for _ in range(20):
        w = rng.normal(size=3) * 5.0
        q1 = relative_quat_k(w, dt)

        def increment(w2):
            e = quat_multiply(quat_conjugate(q1), relative_quat_k(np.asarray(w2), dt))
            return 2.0 * e[1:] * np.sign(e[0])

        fd = central_difference(increment, w)
        assert rel_err(integrator_tangent_k(w, dt), fd) < 1e-6
