"""Quaternion and small-vector algebra.

Quaternions are stored as length-4 arrays ``[w, x, y, z]`` (scalar first).
Angular velocities are expressed in the body frame, and rotational
increments are 3-vectors ``theta`` acting on the right: ``q <- q * exp(theta/2)``.

The ``*_k`` functions are numba kernels used inside the step solver; the
un-suffixed functions are the array-friendly public API.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


# --------------------------------------------------------------------------
# kernels

@njit(cache=True)
def qmul_k(a, b):
    out = np.empty(4)
    aw, ax, ay, az = a[0], a[1], a[2], a[3]
    bw, bx, by, bz = b[0], b[1], b[2], b[3]
    out[0] = aw * bw - ax * bx - ay * by - az * bz
    out[1] = aw * bx + ax * bw + ay * bz - az * by
    out[2] = aw * by - ax * bz + ay * bw + az * bx
    out[3] = aw * bz + ax * by - ay * bx + az * bw
    return out


@njit(cache=True)
def qconj_k(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@njit(cache=True)
def qmat_k(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[0, 1] = 2.0 * (x * y - w * z)
    R[0, 2] = 2.0 * (x * z + w * y)
    R[1, 0] = 2.0 * (x * y + w * z)
    R[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[1, 2] = 2.0 * (y * z - w * x)
    R[2, 0] = 2.0 * (x * z - w * y)
    R[2, 1] = 2.0 * (y * z + w * x)
    R[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


@njit(cache=True)
def qrot_k(q, u):
    # u + 2w (v x u) + 2 v x (v x u)
    w = q[0]
    vx, vy, vz = q[1], q[2], q[3]
    tx = 2.0 * (vy * u[2] - vz * u[1])
    ty = 2.0 * (vz * u[0] - vx * u[2])
    tz = 2.0 * (vx * u[1] - vy * u[0])
    out = np.empty(3)
    out[0] = u[0] + w * tx + (vy * tz - vz * ty)
    out[1] = u[1] + w * ty + (vz * tx - vx * tz)
    out[2] = u[2] + w * tz + (vx * ty - vy * tx)
    return out


@njit(cache=True)
def skew_k(u):
    S = np.zeros((3, 3))
    S[0, 1] = -u[2]
    S[0, 2] = u[1]
    S[1, 0] = u[2]
    S[1, 2] = -u[0]
    S[2, 0] = -u[1]
    S[2, 1] = u[0]
    return S


@njit(cache=True)
def cross_k(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def qnormalize_k(q):
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return q / n


@njit(cache=True)
def omega_feasible_k(omega, dt):
    """True when ``omega`` maps to a relative rotation under the vector-part convention."""
    h = 0.5 * dt
    return (h * h) * (omega[0] ** 2 + omega[1] ** 2 + omega[2] ** 2) < 1.0


@njit(cache=True)
def relative_quat_k(omega, dt):
    """Relative rotation ``q_k^-1 q_{k+1}`` whose vector part is ``omega*dt/2``."""
    h = 0.5 * dt
    out = np.empty(4)
    out[1] = h * omega[0]
    out[2] = h * omega[1]
    out[3] = h * omega[2]
    s = 1.0 - (out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
    out[0] = math.sqrt(s) if s > 0.0 else 0.0
    return out


@njit(cache=True)
def integrator_tangent_k(omega, dt):
    """d theta_{k+1} / d omega: body-frame increment of q_{k+1} per unit change in omega."""
    h = 0.5 * dt
    u = h * omega
    w = math.sqrt(max(1.0 - (u[0] ** 2 + u[1] ** 2 + u[2] ** 2), 1e-300))
    T = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            T[i, j] = dt * u[i] * u[j] / w
        T[i, i] += dt * w
    T[0, 1] += dt * u[2]
    T[0, 2] -= dt * u[1]
    T[1, 0] -= dt * u[2]
    T[1, 2] += dt * u[0]
    T[2, 0] += dt * u[1]
    T[2, 1] -= dt * u[0]
    return T


@njit(cache=True)
def rotation_jacobian_k(q, u):
    # d/dtheta R(q exp(theta/2)) u = -R(q) [u]x
    return -(qmat_k(q) @ skew_k(u))


# --------------------------------------------------------------------------
# public API

def _q(q) -> np.ndarray:
    return np.asarray(q, dtype=float).reshape(4)


def _v(u) -> np.ndarray:
    return np.asarray(u, dtype=float).reshape(3)


def quat(w: float, v) -> np.ndarray:
    """Build a quaternion from a scalar part and a vector part."""
    return np.array([w, *_v(v)])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = _v(axis)
    n = np.linalg.norm(axis)
    if n == 0.0:
        return IDENTITY.copy()
    return np.concatenate(([math.cos(0.5 * angle)], math.sin(0.5 * angle) * axis / n))


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product ``a * b``."""
    return qmul_k(_q(a), _q(b))


def quat_conjugate(q) -> np.ndarray:
    return qconj_k(_q(q))


def quat_normalize(q) -> np.ndarray:
    return qnormalize_k(_q(q))


def rotation_matrix(q) -> np.ndarray:
    return qmat_k(_q(q))


def rotate_vector(q, u) -> np.ndarray:
    """Return ``R(q) u``."""
    return qrot_k(_q(q), _v(u))


def skew(u) -> np.ndarray:
    """Cross-product matrix: ``skew(u) @ w == cross(u, w)``."""
    return skew_k(_v(u))


def rotation_jacobian(q, u) -> np.ndarray:
    """Derivative of ``R(q) u`` with respect to a body-frame rotational increment."""
    return rotation_jacobian_k(_q(q), _v(u))


def discrete_velocities(x_k, q_k, x_k1, q_k1, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference velocities between two configurations.

    Returns ``(v, omega)`` with ``v`` in the world frame and ``omega`` the
    vector part of ``2 q_k^-1 q_k1 / dt`` (body frame).
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    v = (_v(x_k1) - _v(x_k)) / dt
    rel = qmul_k(qconj_k(_q(q_k)), _q(q_k1))
    if rel[0] < 0.0:
        rel = -rel
    return v, 2.0 * rel[1:] / dt


def integrate_configuration(x_k, q_k, v, omega, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`discrete_velocities`; the returned quaternion is unit."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    omega = _v(omega)
    if not omega_feasible_k(omega, dt):
        raise ValueError("angular velocity too large for the time step (|omega| dt / 2 >= 1)")
    x = _v(x_k) + dt * _v(v)
    q = qnormalize_k(qmul_k(_q(q_k), relative_quat_k(omega, dt)))
    return x, q
