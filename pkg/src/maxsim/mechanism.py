"""Bodies, joints and contact points in maximal coordinates.

Every body carries its own 7-dimensional configuration (position plus unit
quaternion). Joints are position-level equality constraints ``g(z) = 0``
between two bodies or between a body and the world, and each contact point
is attached to exactly one body and a flat ground half-space.

All Jacobians are taken with respect to the 6-dimensional tangent of each
body: a translation increment followed by a body-frame rotational increment.
"""
from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .graph_ldu import BlockGraph, dfs_order, plan_elimination
from .quaternion import (
    IDENTITY,
    cross_k,
    qconj_k,
    qmat_k,
    qmul_k,
    skew_k,
)

WORLD = "world"

SPHERICAL, REVOLUTE, PRISMATIC, FIXED = 0, 1, 2, 3
JOINT_KINDS = {"spherical": SPHERICAL, "revolute": REVOLUTE, "prismatic": PRISMATIC, "fixed": FIXED}
JOINT_DIMS = {SPHERICAL: 3, REVOLUTE: 5, PRISMATIC: 5, FIXED: 6}


class MechanismError(ValueError):
    """Invalid mechanism description."""


def _vec3(u) -> np.ndarray:
    return np.array(u, dtype=float).reshape(3)


def _unit(u) -> np.ndarray:
    u = _vec3(u)
    n = np.linalg.norm(u)
    if n == 0.0:
        raise MechanismError("zero-length direction vector")
    return u / n


def orthonormal_complement(axis) -> np.ndarray:
    """Two unit vectors spanning the plane orthogonal to ``axis`` (rows)."""
    a = _unit(axis)
    # seed with the coordinate axis least aligned with a
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(a)))] = 1.0
    t1 = seed - a * (a @ seed)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(a, t1)
    return np.stack([t1, t2])


def friction_basis(normal, n_pairs: int = 2) -> np.ndarray:
    """``n_pairs`` tangent directions spread evenly over half a turn.

    For ``normal = e_z`` and two pairs this is ``[e_x, e_y]``.
    """
    if n_pairs < 1:
        raise MechanismError("friction basis needs at least one direction pair")
    n = _unit(normal)
    if np.allclose(n, [0.0, 0.0, 1.0]):
        t1, t2 = np.eye(3)[0], np.eye(3)[1]
    else:
        t1, t2 = orthonormal_complement(n)
    angles = np.pi * np.arange(n_pairs) / n_pairs
    cs = np.array([[math.cos(a), math.sin(a)] for a in angles])
    cs[np.abs(cs) < 1e-15] = 0.0  # exact axes at quarter turns
    return cs @ np.stack([t1, t2])


@dataclass
class Body:
    id: str
    mass: float
    inertia: np.ndarray
    x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: IDENTITY.copy())
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    shape: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mass = float(self.mass)
        if not self.mass > 0.0:
            raise MechanismError(f"body {self.id!r}: mass must be positive")
        J = np.array(self.inertia, dtype=float)
        if J.shape == (3,):
            J = np.diag(J)
        if J.shape != (3, 3):
            raise MechanismError(f"body {self.id!r}: inertia must be 3 values or 3x3")
        if np.abs(J - J.T).max() > 1e-12 or np.linalg.eigvalsh(J).min() <= 0.0:
            raise MechanismError(f"body {self.id!r}: inertia must be symmetric positive definite")
        self.inertia = J
        self.x = _vec3(self.x)
        q = np.array(self.q, dtype=float).reshape(4)
        self.q = q / np.linalg.norm(q)
        self.v = _vec3(self.v)
        self.omega = _vec3(self.omega)


@dataclass
class JointConstraint:
    """Equality constraint between ``parent`` (a body id or ``WORLD``) and ``child``.

    Anchors are given in the local frames of the two bodies; ``axis`` is in
    the parent frame. ``rest_offset`` is the child orientation relative to
    the parent at zero joint coordinate; ``None`` takes it from the initial
    body orientations when the mechanism is built.
    """

    id: str
    parent: str
    child: str
    kind: str = "spherical"
    anchor_parent: np.ndarray = field(default_factory=lambda: np.zeros(3))
    anchor_child: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    rest_offset: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise MechanismError(f"joint {self.id!r}: unknown kind {self.kind!r}")
        self.anchor_parent = _vec3(self.anchor_parent)
        self.anchor_child = _vec3(self.anchor_child)
        self.axis = _unit(self.axis)
        if self.rest_offset is not None:
            q = np.array(self.rest_offset, dtype=float).reshape(4)
            self.rest_offset = q / np.linalg.norm(q)

    @property
    def code(self) -> int:
        return JOINT_KINDS[self.kind]

    @property
    def dim(self) -> int:
        return JOINT_DIMS[self.code]

    @property
    def perp(self) -> np.ndarray:
        return orthonormal_complement(self.axis)


@dataclass
class ContactPoint:
    """Point ``p`` (body frame) that must stay above the plane ``normal . y = offset``."""

    id: str
    body: str
    p: np.ndarray
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    offset: float = 0.0
    friction: float = 0.2
    n_pairs: int = 2
    basis: np.ndarray | None = None

    def __post_init__(self):
        self.p = _vec3(self.p)
        self.normal = _unit(self.normal)
        self.offset = float(self.offset)
        self.friction = float(self.friction)
        if self.friction < 0.0:
            raise MechanismError(f"contact {self.id!r}: friction coefficient must be >= 0")
        if self.basis is None:
            self.basis = friction_basis(self.normal, self.n_pairs)
        else:
            b = np.array(self.basis, dtype=float).reshape(-1, 3)
            b /= np.linalg.norm(b, axis=1, keepdims=True)
            if np.abs(b @ self.normal).max() > 1e-12:
                raise MechanismError(f"contact {self.id!r}: friction basis must be tangent to the normal")
            self.basis = b
            self.n_pairs = len(b)

    @property
    def dim(self) -> int:
        """Number of unknowns owned by this contact."""
        return 6 * self.n_pairs + 4


@dataclass
class MechanismState:
    """Per-body configuration and velocity arrays (rows follow ``Mechanism.bodies``)."""

    x: np.ndarray
    q: np.ndarray
    v: np.ndarray
    omega: np.ndarray

    def copy(self) -> "MechanismState":
        return MechanismState(self.x.copy(), self.q.copy(), self.v.copy(), self.omega.copy())

    def pose(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.x[i], self.q[i]


Packed = namedtuple(
    "Packed",
    "mass inertia "
    "j_kind j_parent j_child j_ap j_ac j_perp j_qoff j_dim "
    "c_body c_p c_n c_off c_cf c_npairs c_basis "
    "var_off blk_off body_node joint_node contact_node body_blk joint_blk contact_blk positive",
)

# column layout of Packed.contact_blk
CB = {name: i for i, name in enumerate([
    "gg", "pp", "bb", "ff",          # diagonals: gamma, psi, beta, friction nodes
    "Bg", "gB", "Bb", "bB", "Bf", "fB",
    "gp", "pg", "pf", "fp", "pb", "bp", "fb", "bf",
])}


class Mechanism:
    """Finalized mechanism: elements, block graph, and elimination plan.

    Graph nodes are numbered bodies first, then joints, then four nodes per
    contact: normal impulse (gamma, s_gamma), cone limit (psi, s_psi),
    friction impulse (beta, s_eta) and tangential velocity rows (eta).
    """

    def __init__(self, bodies, joints, contacts, gravity, graph, roots):
        self.bodies: tuple[Body, ...] = tuple(bodies)
        self.joints: tuple[JointConstraint, ...] = tuple(joints)
        self.contacts: tuple[ContactPoint, ...] = tuple(contacts)
        self.gravity = _vec3(gravity)
        self.gravity.flags.writeable = False
        self.body_index = {b.id: i for i, b in enumerate(self.bodies)}
        self.joint_index = {j.id: i for i, j in enumerate(self.joints)}
        self.contact_index = {c.id: i for i, c in enumerate(self.contacts)}
        self.graph: BlockGraph = graph
        self.roots: list[int] = roots
        self.ordering: list[int] = dfs_order(graph, roots)
        self.plan = plan_elimination(graph, self.ordering)
        self.packed = self._pack()

    # node numbering -------------------------------------------------------
    @property
    def n_bodies(self) -> int:
        return len(self.bodies)

    def body_node(self, i: int) -> int:
        return i

    def joint_node(self, j: int) -> int:
        return self.n_bodies + j

    def contact_nodes(self, c: int) -> tuple[int, int, int, int]:
        base = self.n_bodies + len(self.joints) + 4 * c
        return base, base + 1, base + 2, base + 3

    @property
    def fill_in_count(self) -> int:
        return self.plan.fill_in_count

    @property
    def operation_count(self) -> int:
        return self.plan.operation_count

    def initial_state(self) -> MechanismState:
        return MechanismState(
            np.array([b.x for b in self.bodies]).reshape(-1, 3),
            np.array([b.q for b in self.bodies]).reshape(-1, 4),
            np.array([b.v for b in self.bodies]).reshape(-1, 3),
            np.array([b.omega for b in self.bodies]).reshape(-1, 3),
        )

    def _pack(self) -> Packed:
        nb, nj, nc = len(self.bodies), len(self.joints), len(self.contacts)
        bi = self.body_index
        idx = self.plan.block_index
        max_pairs = max([c.n_pairs for c in self.contacts], default=1)

        c_basis = np.zeros((nc, max_pairs, 3))
        for k, c in enumerate(self.contacts):
            c_basis[k, : c.n_pairs] = c.basis

        joint_blk = np.full((nj, 5), -1, dtype=np.int64)
        for k, j in enumerate(self.joints):
            jn = self.joint_node(k)
            cn = bi[j.child]
            joint_blk[k, 0] = idx[(jn, jn)]
            if j.parent != WORLD:
                pn = bi[j.parent]
                joint_blk[k, 1] = idx[(jn, pn)]
                joint_blk[k, 2] = idx[(pn, jn)]
            joint_blk[k, 3] = idx[(jn, cn)]
            joint_blk[k, 4] = idx[(cn, jn)]

        contact_blk = np.zeros((nc, len(CB)), dtype=np.int64)
        positive = np.zeros(self.plan.n_vars, dtype=np.bool_)
        var_off = self.plan.var_off
        for k, c in enumerate(self.contacts):
            B = bi[c.body]
            g, p, b, f = self.contact_nodes(k)
            pairs = {
                "gg": (g, g), "pp": (p, p), "bb": (b, b), "ff": (f, f),
                "Bg": (B, g), "gB": (g, B), "Bb": (B, b), "bB": (b, B), "Bf": (B, f), "fB": (f, B),
                "gp": (g, p), "pg": (p, g), "pf": (p, f), "fp": (f, p), "pb": (p, b), "bp": (b, p),
                "fb": (f, b), "bf": (b, f),
            }
            for name, key in pairs.items():
                contact_blk[k, CB[name]] = idx[key]
            m = 2 * c.n_pairs
            positive[var_off[g]: var_off[g] + 2] = True          # gamma, s_gamma
            positive[var_off[p]: var_off[p] + 2] = True          # psi, s_psi
            positive[var_off[b] + m: var_off[b] + 2 * m] = True  # s_eta
            positive[var_off[f]: var_off[f] + m] = True          # eta

        ids = np.asarray
        i64 = np.int64
        return Packed(
            mass=ids([b.mass for b in self.bodies], dtype=float).reshape(nb),
            inertia=ids([b.inertia for b in self.bodies], dtype=float).reshape(nb, 3, 3),
            j_kind=ids([j.code for j in self.joints], dtype=i64).reshape(nj),
            j_parent=ids([-1 if j.parent == WORLD else bi[j.parent] for j in self.joints], dtype=i64).reshape(nj),
            j_child=ids([bi[j.child] for j in self.joints], dtype=i64).reshape(nj),
            j_ap=ids([j.anchor_parent for j in self.joints], dtype=float).reshape(nj, 3),
            j_ac=ids([j.anchor_child for j in self.joints], dtype=float).reshape(nj, 3),
            j_perp=ids([j.perp for j in self.joints], dtype=float).reshape(nj, 2, 3),
            j_qoff=ids([j.rest_offset for j in self.joints], dtype=float).reshape(nj, 4),
            j_dim=ids([j.dim for j in self.joints], dtype=i64).reshape(nj),
            c_body=ids([bi[c.body] for c in self.contacts], dtype=i64).reshape(nc),
            c_p=ids([c.p for c in self.contacts], dtype=float).reshape(nc, 3),
            c_n=ids([c.normal for c in self.contacts], dtype=float).reshape(nc, 3),
            c_off=ids([c.offset for c in self.contacts], dtype=float).reshape(nc),
            c_cf=ids([c.friction for c in self.contacts], dtype=float).reshape(nc),
            c_npairs=ids([c.n_pairs for c in self.contacts], dtype=i64).reshape(nc),
            c_basis=c_basis,
            var_off=var_off,
            blk_off=self.plan.blk_off,
            body_node=np.arange(nb, dtype=i64),
            joint_node=np.arange(nb, nb + nj, dtype=i64),
            contact_node=ids([self.contact_nodes(k) for k in range(nc)], dtype=i64).reshape(nc, 4),
            body_blk=self.plan.diag_blk[:nb].copy(),
            joint_blk=joint_blk,
            contact_blk=contact_blk,
            positive=positive,
        )


def _check_unique(items, kind: str) -> None:
    seen = set()
    for it in items:
        if it.id in seen or it.id == WORLD:
            raise MechanismError(f"duplicate or reserved {kind} id {it.id!r}")
        seen.add(it.id)


def build_mechanism(
    bodies: Sequence[Body],
    joints: Sequence[JointConstraint] = (),
    contacts: Sequence[ContactPoint] = (),
    gravity=(0.0, 0.0, -9.81),
) -> Mechanism:
    """Validate the elements, build the block graph and its elimination plan.

    Raises :class:`MechanismError` on duplicate ids, dangling references, or
    a closed kinematic loop (the body-joint graph, with the world as one
    node, must be a forest).
    """
    bodies, joints, contacts = list(bodies), list(joints), list(contacts)
    for items, kind in ((bodies, "body"), (joints, "joint"), (contacts, "contact")):
        _check_unique(items, kind)
    all_ids = [x.id for x in bodies + joints + contacts]
    if len(set(all_ids)) != len(all_ids):
        raise MechanismError("ids must be unique across bodies, joints and contacts")
    bi = {b.id: i for i, b in enumerate(bodies)}

    # union-find over bodies plus the world (index nb)
    nb = len(bodies)
    parent = list(range(nb + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j in joints:
        if j.child not in bi or (j.parent != WORLD and j.parent not in bi):
            raise MechanismError(f"joint {j.id!r} references a missing body")
        if j.child == j.parent:
            raise MechanismError(f"joint {j.id!r} connects a body to itself")
        a = nb if j.parent == WORLD else bi[j.parent]
        ra, rc = find(a), find(bi[j.child])
        if ra == rc:
            raise MechanismError(f"kinematic loop detected at joint {j.id!r}")
        parent[ra] = rc
    for c in contacts:
        if c.body not in bi:
            raise MechanismError(f"contact {c.id!r} references a missing body")

    for k, j in enumerate(joints):
        if j.rest_offset is None:
            qp = IDENTITY if j.parent == WORLD else bodies[bi[j.parent]].q
            qc = bodies[bi[j.child]].q
            joints[k] = replace(j, rest_offset=qmul_k(qconj_k(qp), qc))

    graph = BlockGraph([6] * nb + [j.dim for j in joints])
    for k, j in enumerate(joints):
        if j.parent != WORLD:
            graph.add_edge(nb + k, bi[j.parent])
        graph.add_edge(nb + k, bi[j.child])
    for c in contacts:
        m = 2 * c.n_pairs
        B = bi[c.body]
        g = graph.add_node(2)
        p = graph.add_node(2)
        b = graph.add_node(2 * m)
        f = graph.add_node(m)
        # insertion order fixes the DFS visit order: B -> g -> p -> f -> b,
        # eliminated as b, f, p, g (one fill-in, between B and p)
        for e in ((B, g), (B, f), (B, b), (g, p), (p, f), (p, b), (f, b)):
            graph.add_edge(*e)

    # a world joint roots its body component (eliminated last, after its
    # subtree); components are taken without the world node
    comp = list(range(nb))

    def cfind(a: int) -> int:
        while comp[a] != a:
            comp[a] = comp[comp[a]]
            a = comp[a]
        return a

    for j in joints:
        if j.parent != WORLD:
            comp[cfind(bi[j.parent])] = cfind(bi[j.child])
    roots: list[int] = []
    rooted: set[int] = set()
    for k, j in enumerate(joints):
        if j.parent == WORLD:
            rooted.add(cfind(bi[j.child]))
            roots.append(nb + k)
    for i in range(nb):
        r = cfind(i)
        if r not in rooted:
            rooted.add(r)
            roots.append(i)
    return Mechanism(bodies, joints, contacts, gravity, graph, roots)


# --------------------------------------------------------------------------
# element kernels

@njit(cache=True)
def joint_eval_k(kind, xp, qp, xc, qc, ap, ac, perp, qoff):
    """Residual and tangent Jacobians of one joint; rows beyond the joint dimension are zero."""
    r = np.zeros(6)
    Gp = np.zeros((6, 6))
    Gc = np.zeros((6, 6))
    Rp = qmat_k(qp)
    Rc = qmat_k(qc)
    pa = Rp @ ap
    ca = Rc @ ac
    if kind != PRISMATIC:
        for i in range(3):
            r[i] = xp[i] + pa[i] - xc[i] - ca[i]
            Gp[i, i] = 1.0
            Gc[i, i] = -1.0
        Gp[:3, 3:] = -(Rp @ skew_k(ap))
        Gc[:3, 3:] = Rc @ skew_k(ac)
    if kind == SPHERICAL:
        return r, Gp, Gc
    e = qmul_k(qmul_k(qconj_k(qp), qc), qconj_k(qoff))
    we = e[0]
    ve = e[1:]
    Sv = skew_k(ve)
    Dc = 0.5 * ((we * np.eye(3) + Sv) @ qmat_k(qoff))
    Dp = -0.5 * (we * np.eye(3) - Sv)
    if kind == REVOLUTE:
        r[3:5] = perp @ ve
        Gp[3:5, 3:] = perp @ Dp
        Gc[3:5, 3:] = perp @ Dc
    elif kind == FIXED:
        r[3:6] = ve
        Gp[3:6, 3:] = Dp
        Gc[3:6, 3:] = Dc
    else:
        r[0:3] = ve
        Gp[0:3, 3:] = Dp
        Gc[0:3, 3:] = Dc
        d = xc + ca - xp - pa
        loc = Rp.T @ d
        r[3:5] = perp @ loc
        Gp[3:5, :3] = -(perp @ Rp.T)
        Gp[3:5, 3:] = perp @ (skew_k(loc) + skew_k(ap))
        Gc[3:5, :3] = perp @ Rp.T
        Gc[3:5, 3:] = -(perp @ (Rp.T @ (Rc @ skew_k(ac))))
    return r, Gp, Gc


@njit(cache=True)
def signed_distance_k(n, off, p, x, q):
    y = x + qmat_k(q) @ p
    return n[0] * y[0] + n[1] * y[1] + n[2] * y[2] - off


@njit(cache=True)
def contact_row_k(n, p, q):
    row = np.empty(6)
    row[:3] = n
    row[3:] = cross_k(p, qmat_k(q).T @ n)
    return row


@njit(cache=True)
def friction_map_k(basis, npairs, p, q):
    """Stacked ``[B_x B_q]`` with rows ``b_1, -b_1, ..., b_n, -b_n``."""
    Rt = qmat_k(q).T
    B = np.empty((2 * npairs, 6))
    for i in range(npairs):
        b = basis[i]
        t = cross_k(p, Rt @ b)
        for k in range(3):
            B[2 * i, k] = b[k]
            B[2 * i + 1, k] = -b[k]
            B[2 * i, 3 + k] = t[k]
            B[2 * i + 1, 3 + k] = -t[k]
    return B


# --------------------------------------------------------------------------
# public element API

def _pose(states: Mapping, key: str):
    if key == WORLD:
        return np.zeros(3), IDENTITY
    s = states[key]
    if isinstance(s, Body):
        return s.x, s.q
    x, q = s
    return np.asarray(x, dtype=float), np.asarray(q, dtype=float)


def _joint_eval(j: JointConstraint, states: Mapping):
    xp, qp = _pose(states, j.parent)
    xc, qc = _pose(states, j.child)
    qoff = IDENTITY if j.rest_offset is None else j.rest_offset
    return joint_eval_k(j.code, xp, qp, xc, qc, j.anchor_parent, j.anchor_child, j.perp, qoff)


def joint_residual(j: JointConstraint, states: Mapping) -> np.ndarray:
    """``g(z)`` for one joint. ``states`` maps body ids to ``(x, q)`` pairs or bodies."""
    r, _, _ = _joint_eval(j, states)
    return r[: j.dim]


def joint_jacobian(j: JointConstraint, states: Mapping) -> dict[str, np.ndarray]:
    """``{body_id: dim x 6 block}`` for each non-world endpoint."""
    _, Gp, Gc = _joint_eval(j, states)
    out = {j.child: Gc[: j.dim]}
    if j.parent != WORLD:
        out[j.parent] = Gp[: j.dim]
    return out


def signed_distance(cp: ContactPoint, x, q) -> float:
    return float(signed_distance_k(cp.normal, cp.offset, cp.p, _vec3(x), np.asarray(q, dtype=float)))


def contact_jacobian(cp: ContactPoint, x, q) -> np.ndarray:
    """Row ``N = d phi / d(x, theta)`` of length 6."""
    return contact_row_k(cp.normal, cp.p, np.asarray(q, dtype=float))


def friction_maps(cp: ContactPoint, q) -> tuple[np.ndarray, np.ndarray]:
    """``(B_x, B_q)``, each ``2 n_pairs x 3``; ``B_q^T = [p]x R(q)^T B_x^T``."""
    B = friction_map_k(cp.basis, cp.n_pairs, cp.p, np.asarray(q, dtype=float))
    return B[:, :3].copy(), B[:, 3:].copy()


def friction_map_derivative(cp: ContactPoint, q) -> np.ndarray:
    """``d B_q / d theta`` as a ``(3, 2 n_pairs, 3)`` array (one slice per increment axis)."""
    Bx, _ = friction_maps(cp, q)
    R = qmat_k(np.asarray(q, dtype=float))
    Sp = skew_k(cp.p)
    return np.array([-(Bx @ R @ skew_k(np.eye(3)[i]) @ Sp) for i in range(3)])


@njit(cache=True)
def joint_violation_k(P, x, q):
    worst = 0.0
    zero = np.zeros(3)
    ident = np.array([1.0, 0.0, 0.0, 0.0])
    for k in range(P.j_kind.shape[0]):
        p = P.j_parent[k]
        c = P.j_child[k]
        xp = zero if p < 0 else x[p]
        qp = ident if p < 0 else q[p]
        r, _, _ = joint_eval_k(P.j_kind[k], xp, qp, x[c], q[c], P.j_ap[k], P.j_ac[k], P.j_perp[k], P.j_qoff[k])
        for i in range(P.j_dim[k]):
            worst = max(worst, abs(r[i]))
    return worst


def max_joint_violation(mech: Mechanism, state: MechanismState) -> float:
    """Largest ``|g(z)|`` entry over all joints (0 without joints)."""
    return float(joint_violation_k(mech.packed, state.x, state.q))


def contact_distances(mech: Mechanism, state: MechanismState) -> np.ndarray:
    P = mech.packed
    return np.array([signed_distance_k(P.c_n[k], P.c_off[k], P.c_p[k], state.x[b], state.q[b])
                     for k, b in enumerate(P.c_body)])
