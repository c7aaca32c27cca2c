"""Discrete-time step residual and its block-sparse Jacobian.

One step starts from the current configuration ``z1`` and the velocity that
led to it, and solves for the next velocity. The next configuration
``z2 = integrate(z1, velocity)`` is where joint and contact position rows
are evaluated, so constraints hold exactly at every stored configuration.

Unknowns, grouped by graph node (each node owns the same slice of rows):

* body: ``v`` (world), ``omega`` (body frame); rows are the discrete
  Newton-Euler momentum balance minus all constraint impulses,
* joint: ``lambda``; rows ``g(z2)``,
* contact normal node: ``gamma, s_gamma``; rows ``phi(z2) - s_gamma`` and
  ``s_gamma * gamma - mu``,
* contact cone node: ``psi, s_psi``; rows ``cf*gamma - sum(beta) - s_psi``
  and ``s_psi * psi - mu``,
* contact friction node: ``beta, s_eta``; rows ``beta - s_eta`` and
  ``s_eta * eta - mu``,
* contact velocity node: ``eta``; rows ``B(z1) [v; omega] + psi - eta``.

Multipliers are impulses over the step (force times dt).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .graph_ldu import BlockSystem
from .mechanism import (
    CB,
    Body,
    Mechanism,
    MechanismState,
    contact_row_k,
    friction_map_k,
    joint_eval_k,
    signed_distance_k,
)
from .quaternion import cross_k, integrator_tangent_k, qmul_k, relative_quat_k, skew_k

# contact block columns as globals so numba treats them as constants
_C_gg = CB["gg"]
_C_gB = CB["gB"]
_C_Bg = CB["Bg"]
_C_pp = CB["pp"]
_C_pg = CB["pg"]
_C_pb = CB["pb"]
_C_bb = CB["bb"]
_C_bf = CB["bf"]
_C_Bb = CB["Bb"]
_C_ff = CB["ff"]
_C_fB = CB["fB"]
_C_fp = CB["fp"]


@dataclass(frozen=True)
class VariableLayout:
    """Slices of the stacked unknown vector, one contiguous range per graph node."""

    mechanism: Mechanism

    @property
    def offsets(self) -> np.ndarray:
        return self.mechanism.plan.var_off

    @property
    def total(self) -> int:
        return int(self.offsets[-1])

    def _node(self, node: int) -> slice:
        o = self.offsets
        return slice(int(o[node]), int(o[node + 1]))

    def body(self, i: int) -> slice:
        return self._node(self.mechanism.body_node(i))

    def joint(self, j: int) -> slice:
        return self._node(self.mechanism.joint_node(j))

    def contact(self, c: int) -> dict[str, slice]:
        g, p, b, f = (int(self.offsets[n]) for n in self.mechanism.contact_nodes(c))
        m = 2 * self.mechanism.contacts[c].n_pairs
        return {
            "gamma": slice(g, g + 1),
            "s_gamma": slice(g + 1, g + 2),
            "psi": slice(p, p + 1),
            "s_psi": slice(p + 1, p + 2),
            "beta": slice(b, b + m),
            "s_eta": slice(b + m, b + 2 * m),
            "eta": slice(f, f + m),
        }


def variable_layout(mech: Mechanism) -> VariableLayout:
    return VariableLayout(mech)


@dataclass
class StepResidual:
    """Stacked residual with named access to its row groups."""

    layout: VariableLayout
    values: np.ndarray

    def norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def dynamics(self, i: int) -> np.ndarray:
        return self.values[self.layout.body(i)]

    def joint(self, j: int) -> np.ndarray:
        return self.values[self.layout.joint(j)]

    def contact(self, c: int) -> dict[str, np.ndarray]:
        s = self.layout.contact(c)
        v = self.values
        return {
            "phi_slack": v[s["gamma"]],
            "gamma_comp": v[s["s_gamma"]],
            "cone_slack": v[s["psi"]],
            "psi_comp": v[s["s_psi"]],
            "beta_slack": v[s["beta"]],
            "eta_comp": v[s["s_eta"]],
            "friction": v[s["eta"]],
        }


def unconstrained_residual(
    body: Body,
    v_next,
    omega_next,
    dt: float,
    gravity=(0.0, 0.0, -9.81),
    force=(0.0, 0.0, 0.0),
    torque=(0.0, 0.0, 0.0),
) -> np.ndarray:
    """Momentum balance of a free body over one step (``body.v``/``body.omega`` are the previous velocity)."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return body_rows_k(
        body.mass, body.inertia, body.v, body.omega,
        np.asarray(v_next, dtype=float), np.asarray(omega_next, dtype=float),
        dt, np.asarray(gravity, dtype=float), np.asarray(force, dtype=float), np.asarray(torque, dtype=float),
    )


@njit(cache=True)
def body_rows_k(m, J, v, w, vn, wn, dt, gravity, f, tau):
    r = np.empty(6)
    Jw = J @ wn
    Jw0 = J @ w
    cr = cross_k(wn, Jw)
    for k in range(3):
        r[k] = m * (vn[k] - v[k]) - m * gravity[k] * dt - f[k] * dt
        r[3 + k] = Jw[k] - Jw0[k] + dt * cr[k] - tau[k] * dt
    return r


@njit(cache=True)
def next_poses_k(P, x, q, a, dt):
    nb = P.mass.shape[0]
    x2 = np.empty((nb, 3))
    q2 = np.empty((nb, 4))
    for i in range(nb):
        o = P.var_off[P.body_node[i]]
        for k in range(3):
            x2[i, k] = x[i, k] + dt * a[o + k]
        q2[i] = qmul_k(q[i], relative_quat_k(a[o + 3:o + 6], dt))
    return x2, q2


@njit(cache=True)
def _write_tangent(vals, off, ncols, row, G, grow, T, dt):
    # vals[row, :] = G[grow, :] @ blockdiag(dt I, T)
    base = off + row * ncols
    for k in range(3):
        vals[base + k] += G[grow, k] * dt
    for k in range(3):
        acc = 0.0
        for s in range(3):
            acc += G[grow, 3 + s] * T[s, k]
        vals[base + 3 + k] += acc


@njit(cache=True)
def assemble_k(P, x, q, v, w, a, dt, mu, gravity, fext, text, want_jac, r, vals):
    """Fill the residual ``r`` and, if ``want_jac``, the Jacobian blocks ``vals``."""
    nb = P.mass.shape[0]
    nj = P.j_kind.shape[0]
    nc = P.c_body.shape[0]
    voff = P.var_off
    boff = P.blk_off
    if want_jac:
        vals[:] = 0.0
    x2, q2 = next_poses_k(P, x, q, a, dt)
    T = np.empty((nb, 3, 3))

    for i in range(nb):
        o = voff[P.body_node[i]]
        vn = a[o:o + 3]
        wn = a[o + 3:o + 6]
        J = P.inertia[i]
        r[o:o + 6] = body_rows_k(P.mass[i], J, v[i], w[i], vn, wn, dt, gravity, fext[i], text[i])
        T[i] = integrator_tangent_k(wn, dt)
        if want_jac:
            d = boff[P.body_blk[i]]
            for k in range(3):
                vals[d + k * 6 + k] = P.mass[i]
            Jw = J @ wn
            Dr = J + dt * (skew_k(wn) @ J - skew_k(Jw))
            for k in range(3):
                for s in range(3):
                    vals[d + (3 + k) * 6 + 3 + s] = Dr[k, s]

    ident = np.array([1.0, 0.0, 0.0, 0.0])
    zero3 = np.zeros(3)
    for j in range(nj):
        o = voff[P.joint_node[j]]
        dim = P.j_dim[j]
        p = P.j_parent[j]
        c = P.j_child[j]
        if p >= 0:
            xp1, qp1, xp2, qp2 = x[p], q[p], x2[p], q2[p]
        else:
            xp1, qp1, xp2, qp2 = zero3, ident, zero3, ident
        ap, ac, perp, qoff = P.j_ap[j], P.j_ac[j], P.j_perp[j], P.j_qoff[j]
        g2, Gp2, Gc2 = joint_eval_k(P.j_kind[j], xp2, qp2, x2[c], q2[c], ap, ac, perp, qoff)
        _, Gp1, Gc1 = joint_eval_k(P.j_kind[j], xp1, qp1, x[c], q[c], ap, ac, perp, qoff)
        for l in range(dim):
            r[o + l] = g2[l]
        oc = voff[P.body_node[c]]
        for k in range(6):
            acc = 0.0
            for l in range(dim):
                acc += Gc1[l, k] * a[o + l]
            r[oc + k] -= acc
        if p >= 0:
            op = voff[P.body_node[p]]
            for k in range(6):
                acc = 0.0
                for l in range(dim):
                    acc += Gp1[l, k] * a[o + l]
                r[op + k] -= acc
        if want_jac:
            jc = boff[P.joint_blk[j, 3]]
            cj = boff[P.joint_blk[j, 4]]
            for l in range(dim):
                _write_tangent(vals, jc, 6, l, Gc2, l, T[c], dt)
                for k in range(6):
                    vals[cj + k * dim + l] = -Gc1[l, k]
            if p >= 0:
                jp = boff[P.joint_blk[j, 1]]
                pj = boff[P.joint_blk[j, 2]]
                for l in range(dim):
                    _write_tangent(vals, jp, 6, l, Gp2, l, T[p], dt)
                    for k in range(6):
                        vals[pj + k * dim + l] = -Gp1[l, k]

    for ci in range(nc):
        b = P.c_body[ci]
        ob = voff[P.body_node[b]]
        ng = P.contact_node[ci, 0]
        npn = P.contact_node[ci, 1]
        nbn = P.contact_node[ci, 2]
        nf = P.contact_node[ci, 3]
        og, op, obt, of = voff[ng], voff[npn], voff[nbn], voff[nf]
        npairs = P.c_npairs[ci]
        m = 2 * npairs
        n = P.c_n[ci]
        pc = P.c_p[ci]
        cf = P.c_cf[ci]
        gam, sg = a[og], a[og + 1]
        psi, sp = a[op], a[op + 1]

        phi2 = signed_distance_k(n, P.c_off[ci], pc, x2[b], q2[b])
        N1 = contact_row_k(n, pc, q[b])
        B1 = friction_map_k(P.c_basis[ci], npairs, pc, q[b])

        r[og] = phi2 - sg
        r[og + 1] = sg * gam - mu
        sb = 0.0
        for i in range(m):
            sb += a[obt + i]
        r[op] = cf * gam - sb - sp
        r[op + 1] = sp * psi - mu
        for i in range(m):
            r[obt + i] = a[obt + i] - a[obt + m + i]
            r[obt + m + i] = a[obt + m + i] * a[of + i] - mu
            acc = psi - a[of + i]
            for k in range(6):
                acc += B1[i, k] * a[ob + k]
            r[of + i] = acc
        for k in range(6):
            acc = N1[k] * gam
            for i in range(m):
                acc += B1[i, k] * a[obt + i]
            r[ob + k] -= acc

        if want_jac:
            cb = P.contact_blk[ci]
            N2 = contact_row_k(n, pc, q2[b])
            N2m = np.empty((1, 6))
            N2m[0] = N2
            # normal node
            d = boff[cb[_C_gg]]
            vals[d + 1] = -1.0
            vals[d + 2] = sg
            vals[d + 3] = gam
            _write_tangent(vals, boff[cb[_C_gB]], 6, 0, N2m, 0, T[b], dt)
            d = boff[cb[_C_Bg]]
            for k in range(6):
                vals[d + k * 2] = -N1[k]
            # cone node
            d = boff[cb[_C_pp]]
            vals[d + 1] = -1.0
            vals[d + 2] = sp
            vals[d + 3] = psi
            vals[boff[cb[_C_pg]]] = cf
            d = boff[cb[_C_pb]]
            for i in range(m):
                vals[d + i] = -1.0
            # friction impulse node
            d = boff[cb[_C_bb]]
            w2 = 2 * m
            for i in range(m):
                vals[d + i * w2 + i] = 1.0
                vals[d + i * w2 + m + i] = -1.0
                vals[d + (m + i) * w2 + m + i] = a[of + i]
            d = boff[cb[_C_bf]]
            for i in range(m):
                vals[d + (m + i) * m + i] = a[obt + m + i]
            d = boff[cb[_C_Bb]]
            for k in range(6):
                for i in range(m):
                    vals[d + k * w2 + i] = -B1[i, k]
            # tangential velocity node
            d = boff[cb[_C_ff]]
            for i in range(m):
                vals[d + i * m + i] = -1.0
            d = boff[cb[_C_fB]]
            for i in range(m):
                for k in range(6):
                    vals[d + i * 6 + k] = B1[i, k]
            d = boff[cb[_C_fp]]
            for i in range(m):
                vals[d + i * 2] = 1.0


def _wrenches(mech: Mechanism, force, torque):
    nb = mech.n_bodies
    f = np.zeros((nb, 3)) if force is None else np.asarray(force, dtype=float).reshape(nb, 3)
    t = np.zeros((nb, 3)) if torque is None else np.asarray(torque, dtype=float).reshape(nb, 3)
    return f, t


def _check(mech: Mechanism, values, dt: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (mech.plan.n_vars,):
        raise ValueError(f"unknown vector has shape {values.shape}, expected ({mech.plan.n_vars},)")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return values


def assemble_residual(
    mech: Mechanism,
    state: MechanismState,
    values,
    dt: float,
    mu: float,
    force=None,
    torque=None,
) -> StepResidual:
    """Residual of the relaxed step equations at the unknowns ``values``.

    ``state`` holds the current configuration and the previous velocity;
    ``force`` (world frame) and ``torque`` (body frame) are per-body
    wrenches held constant over the step.
    """
    values = _check(mech, values, dt)
    f, t = _wrenches(mech, force, torque)
    r = np.zeros(mech.plan.n_vars)
    assemble_k(mech.packed, state.x, state.q, state.v, state.omega, values, dt, mu,
               mech.gravity, f, t, False, r, np.empty(0))
    return StepResidual(VariableLayout(mech), r)


def assemble_jacobian(
    mech: Mechanism,
    state: MechanismState,
    values,
    dt: float,
    mu: float,
    force=None,
    torque=None,
) -> BlockSystem:
    """Jacobian of :func:`assemble_residual` in the mechanism's block layout."""
    values = _check(mech, values, dt)
    f, t = _wrenches(mech, force, torque)
    system = BlockSystem(mech.plan)
    r = np.zeros(mech.plan.n_vars)
    assemble_k(mech.packed, state.x, state.q, state.v, state.omega, values, dt, mu,
               mech.gravity, f, t, True, r, system.values)
    return system
