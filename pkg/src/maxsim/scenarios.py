"""Scenario descriptions, actuators and the built-in presets.

A :class:`Scenario` bundles the elements of a mechanism with solver
settings, a step count and a list of actuators. Actuators turn the current
state and time into per-body wrenches that are held constant over a step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mechanism import (
    WORLD,
    Body,
    ContactPoint,
    JointConstraint,
    Mechanism,
    MechanismState,
    build_mechanism,
)
from .quaternion import (
    IDENTITY,
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
    rotate_vector,
    rotation_matrix,
)
from .solver import SolverSettings


# --------------------------------------------------------------------------
# signals

@dataclass
class Constant:
    value: float = 0.0

    def __call__(self, t: float) -> float:
        return self.value

    def rate(self, t: float) -> float:
        return 0.0


@dataclass
class Sine:
    """``offset + amplitude * sin(2 pi frequency t + phase)``, zero before ``start``."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0
    start: float = 0.0

    def __call__(self, t: float) -> float:
        if t < self.start:
            return self.offset
        return self.offset + self.amplitude * math.sin(2.0 * math.pi * self.frequency * (t - self.start) + self.phase)

    def rate(self, t: float) -> float:
        if t < self.start:
            return 0.0
        w = 2.0 * math.pi * self.frequency
        return self.amplitude * w * math.cos(w * (t - self.start) + self.phase)


@dataclass
class Table:
    """Piecewise-linear interpolation, held constant outside the knots."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape or self.times.size == 0:
            raise ValueError("table needs matching non-empty 1-D times and values")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("table times must be strictly increasing")

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def rate(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right"))
        if k == 0 or k == self.times.size:
            return 0.0
        return float((self.values[k] - self.values[k - 1]) / (self.times[k] - self.times[k - 1]))


def make_signal(spec) -> Callable[[float], float]:
    """Build a signal from a number or a mapping with a ``type`` key."""
    if spec is None:
        return Constant(0.0)
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if isinstance(spec, (Constant, Sine, Table)):
        return spec
    spec = dict(spec)
    kind = spec.pop("type", "constant")
    if kind == "constant":
        return Constant(float(spec.get("value", 0.0)))
    if kind == "sine":
        return Sine(**{k: float(v) for k, v in spec.items()})
    if kind == "table":
        return Table(spec["times"], spec["values"])
    raise ValueError(f"unknown signal type {kind!r}")


# --------------------------------------------------------------------------
# actuators

def _joint_frame(mech: Mechanism, state: MechanismState, j: JointConstraint):
    """World axis, child anchor point, and the parent/child indices (-1 for world)."""
    p = -1 if j.parent == WORLD else mech.body_index[j.parent]
    c = mech.body_index[j.child]
    qp = IDENTITY if p < 0 else state.q[p]
    axis = rotate_vector(qp, j.axis)
    point = state.x[c] + rotate_vector(state.q[c], j.anchor_child)
    return p, c, axis, point


def joint_coordinate(mech: Mechanism, state: MechanismState, j: JointConstraint) -> tuple[float, float]:
    """Joint position and rate along the free direction of a revolute or prismatic joint."""
    p, c, axis, point = _joint_frame(mech, state, j)
    xp = np.zeros(3) if p < 0 else state.x[p]
    qp = IDENTITY if p < 0 else state.q[p]
    vp = np.zeros(3) if p < 0 else state.v[p]
    wp = np.zeros(3) if p < 0 else rotate_vector(qp, state.omega[p])
    wc = rotate_vector(state.q[c], state.omega[c])
    if j.kind == "revolute":
        e = quat_multiply(quat_multiply(quat_conjugate(qp), state.q[c]), quat_conjugate(j.rest_offset))
        angle = 2.0 * math.atan2(float(e[1:] @ j.axis), e[0])
        if angle > math.pi:
            angle -= 2.0 * math.pi
        elif angle < -math.pi:
            angle += 2.0 * math.pi
        return angle, float(axis @ (wc - wp))
    if j.kind == "prismatic":
        anchor_p = xp + rotate_vector(qp, j.anchor_parent)
        d = point - anchor_p
        vc = state.v[c] + np.cross(wc, point - state.x[c])
        va = vp + np.cross(wp, anchor_p - xp)
        return float(axis @ d), float(axis @ (vc - va))
    raise ValueError(f"joint {j.id!r}: no scalar coordinate for kind {j.kind!r}")


def _apply_joint_effort(mech, state, j, effort, force, torque):
    p, c, axis, point = _joint_frame(mech, state, j)
    if j.kind == "revolute":
        tw = effort * axis
        torque[c] += rotation_matrix(state.q[c]).T @ tw
        if p >= 0:
            torque[p] -= rotation_matrix(state.q[p]).T @ tw
    elif j.kind == "prismatic":
        f = effort * axis
        force[c] += f
        torque[c] += rotation_matrix(state.q[c]).T @ np.cross(point - state.x[c], f)
        if p >= 0:
            force[p] -= f
            torque[p] -= rotation_matrix(state.q[p]).T @ np.cross(point - state.x[p], f)
    else:
        raise ValueError(f"joint {j.id!r}: cannot actuate a {j.kind} joint")


@dataclass
class JointForce:
    """Open-loop effort along a joint: torque for revolute, force for prismatic."""

    joint: str
    signal: Callable[[float], float] = field(default_factory=Constant)

    def apply(self, mech, state, t, force, torque):
        j = mech.joints[mech.joint_index[self.joint]]
        _apply_joint_effort(mech, state, j, self.signal(t), force, torque)


@dataclass
class JointPD:
    """PD tracking of a joint coordinate setpoint, with optional effort limit."""

    joint: str
    target: Callable[[float], float]
    kp: float
    kd: float
    limit: float = math.inf
    feedforward: float = 0.0

    def apply(self, mech, state, t, force, torque):
        j = mech.joints[mech.joint_index[self.joint]]
        pos, rate = joint_coordinate(mech, state, j)
        target_rate = self.target.rate(t) if hasattr(self.target, "rate") else 0.0
        u = self.feedforward + self.kp * (self.target(t) - pos) + self.kd * (target_rate - rate)
        u = min(max(u, -self.limit), self.limit)
        _apply_joint_effort(mech, state, j, u, force, torque)


@dataclass
class BodyForce:
    """Constant-in-step force (world frame) and torque (body frame) on one body."""

    body: str
    force: tuple = (0.0, 0.0, 0.0)
    torque: tuple = (0.0, 0.0, 0.0)
    start: float = 0.0
    stop: float = math.inf

    def apply(self, mech, state, t, force, torque):
        if self.start <= t < self.stop:
            i = mech.body_index[self.body]
            force[i] += self.force
            torque[i] += self.torque


@dataclass
class AttitudeTurn:
    """Smooth rotation profile about a fixed world axis, from ``start`` to ``stop``."""

    axis: np.ndarray
    angle: float
    start: float
    stop: float

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.axis = self.axis / np.linalg.norm(self.axis)

    def _s(self, t: float) -> tuple[float, float]:
        T = self.stop - self.start
        if t <= self.start:
            return 0.0, 0.0
        if t >= self.stop:
            return 1.0, 0.0
        u = (t - self.start) / T
        return 0.5 - 0.5 * math.cos(math.pi * u), 0.5 * math.pi * math.sin(math.pi * u) / T

    def __call__(self, t: float) -> np.ndarray:
        s, _ = self._s(t)
        return quat_from_axis_angle(self.axis, s * self.angle)

    def rate(self, t: float) -> np.ndarray:
        _, ds = self._s(t)
        return ds * self.angle * self.axis


@dataclass
class BodyAttitudePD:
    """Body-frame torque tracking an orientation profile ``q_ref(t) * q0``."""

    body: str
    kp: float
    kd: float
    profile: AttitudeTurn | None = None
    q0: np.ndarray = field(default_factory=lambda: IDENTITY.copy())

    def apply(self, mech, state, t, force, torque):
        i = mech.body_index[self.body]
        q = state.q[i]
        if self.profile is None:
            q_ref, w_ref = self.q0, np.zeros(3)
        else:
            q_ref = quat_multiply(self.profile(t), self.q0)
            w_ref = self.profile.rate(t)  # world frame
        e = quat_multiply(quat_conjugate(q_ref), q)
        if e[0] < 0.0:
            e = -e
        w_ref_body = rotation_matrix(q).T @ w_ref
        torque[i] += -self.kp * 2.0 * e[1:] - self.kd * (state.omega[i] - w_ref_body)


# --------------------------------------------------------------------------
# scenario

@dataclass
class Scenario:
    name: str
    bodies: list
    joints: list = field(default_factory=list)
    contacts: list = field(default_factory=list)
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    settings: SolverSettings = field(default_factory=SolverSettings)
    steps: int = 100
    actuators: list = field(default_factory=list)
    description: str = ""
    _mechanism: Mechanism | None = field(default=None, repr=False, compare=False)

    @property
    def dt(self) -> float:
        return self.settings.dt

    def build(self) -> Mechanism:
        if self._mechanism is None:
            self._mechanism = build_mechanism(self.bodies, self.joints, self.contacts, self.gravity)
        return self._mechanism

    def wrenches(self, mech: Mechanism, state: MechanismState, t: float) -> tuple[np.ndarray, np.ndarray]:
        force = np.zeros((mech.n_bodies, 3))
        torque = np.zeros((mech.n_bodies, 3))
        for a in self.actuators:
            a.apply(mech, state, t, force, torque)
        return force, torque


# --------------------------------------------------------------------------
# shapes

def cylinder_inertia(m: float, r: float, h: float) -> np.ndarray:
    """Solid cylinder with its axis along body z."""
    a = m * (3.0 * r * r + h * h) / 12.0
    return np.array([a, a, 0.5 * m * r * r])


def box_inertia(m: float, size) -> np.ndarray:
    lx, ly, lz = size
    return m / 12.0 * np.array([ly * ly + lz * lz, lx * lx + lz * lz, lx * lx + ly * ly])


def sphere_inertia(m: float, r: float) -> np.ndarray:
    return np.full(3, 0.4 * m * r * r)


def _rot_y(angle: float) -> np.ndarray:
    return quat_from_axis_angle([0.0, 1.0, 0.0], angle)


# --------------------------------------------------------------------------
# builders

def build_cylinder(c: int, friction: float = 0.2, steps: int = 100) -> Scenario:
    """Flat cylinder (m=1, r=0.5, h=0.1) resting on ``c`` evenly spaced rim contacts."""
    if not isinstance(c, (int, np.integer)) or c < 2 or c % 2:
        raise ValueError(f"contact count must be an even integer >= 2, got {c!r}")
    m, r, h = 1.0, 0.5, 0.1
    body = Body("cylinder", m, cylinder_inertia(m, r, h), x=[0.0, 0.0, 0.5 * h],
                shape={"type": "cylinder", "radius": r, "height": h})
    contacts = []
    for k in range(c):
        a = 2.0 * math.pi * k / c
        contacts.append(ContactPoint(f"c{k}", "cylinder", p=[r * math.cos(a), r * math.sin(a), -0.5 * h],
                                     friction=friction))
    return Scenario(f"cylinder{c}", [body], [], contacts, settings=SolverSettings(dt=0.01), steps=steps,
                    description=f"cylinder resting on {c} rim contacts")


def build_chain(n: int, friction: float = 0.2, steps: int = 100, contacts: bool = True,
                world_anchor: bool = False) -> Scenario:
    """``n`` links (m=1, l=1, r=0.05) lying along x, joined end to end by spherical joints.

    Each link's lower end carries a contact, plus one on the upper end of the
    first link (``n + 1`` contacts). Links lie on the ground along world x.
    """
    if n < 1:
        raise ValueError("chain needs at least one link")
    m, l, r = 1.0, 1.0, 0.05
    J = cylinder_inertia(m, r, l)
    q = _rot_y(0.5 * math.pi)  # body z along world x
    bodies, joints, cps = [], [], []
    for i in range(n):
        bodies.append(Body(f"link{i}", m, J, x=[(i + 0.5) * l, 0.0, r], q=q,
                           shape={"type": "cylinder", "radius": r, "length": l}))
        if i > 0:
            joints.append(JointConstraint(f"joint{i}", f"link{i - 1}", f"link{i}", "spherical",
                                          anchor_parent=[0.0, 0.0, 0.5 * l], anchor_child=[0.0, 0.0, -0.5 * l]))
    if world_anchor:
        joints.insert(0, JointConstraint("anchor", WORLD, "link0", "spherical",
                                         anchor_parent=[0.0, 0.0, r], anchor_child=[0.0, 0.0, -0.5 * l]))
    if contacts:
        # body +x maps to world -z, so p = [r, 0, ±l/2] touches the ground
        cps.append(ContactPoint("c_base", "link0", p=[r, 0.0, -0.5 * l], friction=friction))
        for i in range(n):
            cps.append(ContactPoint(f"c{i}", f"link{i}", p=[r, 0.0, 0.5 * l], friction=friction))
    return Scenario(f"chain{n}", bodies, joints, cps, settings=SolverSettings(dt=0.01), steps=steps,
                    description=f"{n}-link chain on the ground")


def build_pendulum_chain(n: int = 5, duration: float = 10.0, dt: float = 0.01) -> Scenario:
    """Chain hanging from a world spherical joint, released horizontally, no contacts."""
    m, l, r = 1.0, 1.0, 0.05
    J = cylinder_inertia(m, r, l)
    q = _rot_y(0.5 * math.pi)
    bodies, joints = [], []
    for i in range(n):
        bodies.append(Body(f"link{i}", m, J, x=[(i + 0.5) * l, 0.0, 0.0], q=q,
                           shape={"type": "cylinder", "radius": r, "length": l}))
        parent = WORLD if i == 0 else f"link{i - 1}"
        ap = [0.0, 0.0, 0.0] if i == 0 else [0.0, 0.0, 0.5 * l]
        joints.append(JointConstraint(f"joint{i}", parent, f"link{i}", "spherical",
                                      anchor_parent=ap, anchor_child=[0.0, 0.0, -0.5 * l]))
    return Scenario(f"pendulum{n}", bodies, joints, [], settings=SolverSettings(dt=dt),
                    steps=int(round(duration / dt)), description=f"{n}-link pendulum swinging under gravity")


def build_free_chain(n: int = 3, steps: int = 1000, dt: float = 0.01) -> Scenario:
    """Spinning, drifting chain in zero gravity (momentum bookkeeping)."""
    m, l, r = 1.0, 1.0, 0.05
    J = cylinder_inertia(m, r, l)
    q = _rot_y(0.5 * math.pi)
    bodies, joints = [], []
    spin = 1.0
    for i in range(n):
        x = np.array([(i + 0.5) * l, 0.0, 0.0])
        # rigid rotation about world z through the origin plus drift
        v = np.array([0.2, 0.1, -0.05]) + np.cross([0.0, 0.0, spin], x)
        omega_world = np.array([0.3 * i, 0.0, spin])
        omega_body = rotation_matrix(q).T @ omega_world
        bodies.append(Body(f"link{i}", m, J, x=x, q=q, v=v, omega=omega_body,
                           shape={"type": "cylinder", "radius": r, "length": l}))
        if i > 0:
            joints.append(JointConstraint(f"joint{i}", f"link{i - 1}", f"link{i}", "spherical",
                                          anchor_parent=[0.0, 0.0, 0.5 * l], anchor_child=[0.0, 0.0, -0.5 * l]))
    # initial velocities are only approximately joint-consistent; the first step projects them
    return Scenario(f"freechain{n}", bodies, joints, [], gravity=np.zeros(3),
                    settings=SolverSettings(dt=dt), steps=steps, description="free-floating chain")


def build_block(v0=(1.0, 0.0, 0.0), friction: float = 0.2, mass: float = 1.0, steps: int = 100,
                dt: float = 0.01, push: float = 0.0) -> Scenario:
    """Cube (0.2 m) on four corner contacts, with an initial velocity and an optional push along x."""
    a = 0.1
    body = Body("block", mass, box_inertia(mass, (2 * a, 2 * a, 2 * a)), x=[0.0, 0.0, a], v=v0,
                shape={"type": "box", "size": [2 * a] * 3})
    cps = [ContactPoint(f"c{k}", "block", p=[sx * a, sy * a, -a], friction=friction)
           for k, (sx, sy) in enumerate([(1, 1), (1, -1), (-1, 1), (-1, -1)])]
    acts = [BodyForce("block", force=(push, 0.0, 0.0))] if push else []
    return Scenario("block", [body], [], cps, settings=SolverSettings(dt=dt), steps=steps, actuators=acts,
                    description="block on the ground")


def build_ball(height: float = 1.0, steps: int = 100, dt: float = 0.01) -> Scenario:
    """Sphere (m=1, r=0.1) released above the ground with one contact at its bottom."""
    r = 0.1
    body = Body("ball", 1.0, sphere_inertia(1.0, r), x=[0.0, 0.0, height + r],
                shape={"type": "sphere", "radius": r})
    cp = ContactPoint("c0", "ball", p=[0.0, 0.0, -r], friction=0.2)
    return Scenario("ball", [body], [], [cp], settings=SolverSettings(dt=dt), steps=steps,
                    description="ball dropped onto the ground")


def build_hopper(duration: float = 5.0, dt: float = 0.001) -> Scenario:
    """Sphere on a pole joined by an actuated prismatic joint; one jump with a full turn.

    The sphere (m=1, r=0.1) sits on top of the pole (m=0.2, l=0.8, r=0.05),
    whose lower tip starts on the ground. A PD loop on the joint drives the
    jump and retracts the pole in flight, while a body torque on the sphere
    tracks a full turn about ``[1, 1, 0]/sqrt(2)`` and then holds it upright.
    """
    rs, lp, rp = 0.1, 0.8, 0.05
    sphere = Body("sphere", 1.0, sphere_inertia(1.0, rs), x=[0.0, 0.0, lp],
                  shape={"type": "sphere", "radius": rs})
    pole = Body("pole", 0.2, cylinder_inertia(0.2, rp, lp), x=[0.0, 0.0, 0.5 * lp],
                shape={"type": "cylinder", "radius": rp, "length": lp})
    joint = JointConstraint("slider", "sphere", "pole", "prismatic",
                            anchor_parent=[0.0, 0.0, 0.0], anchor_child=[0.0, 0.0, 0.5 * lp], axis=[0.0, 0.0, 1.0])
    tip = ContactPoint("tip", "pole", p=[0.0, 0.0, -0.5 * lp], friction=0.2)
    # joint coordinate = pole anchor minus sphere centre along the axis; negative extends the leg
    t0, t1, t2 = 0.3, 0.38, 0.55
    stroke = Table([0.0, t0, t1, t2, duration], [0.0, 0.0, -0.3, 0.15, 0.15])
    turn = AttitudeTurn([1.0, 1.0, 0.0], 2.0 * math.pi, t1 + 0.02, t1 + 0.47)
    acts = [
        JointPD("slider", stroke, kp=400.0, kd=25.0),
        BodyAttitudePD("sphere", kp=60.0, kd=6.0, profile=turn),
    ]
    return Scenario("hopper", [sphere, pole], [joint], [tip], settings=SolverSettings(dt=dt),
                    steps=int(round(duration / dt)), actuators=acts,
                    description="hopper: one jump with a full turn about [1,1,0]")


# quadruped geometry (artifact choices, loosely sized after a small quadruped)
_TRUNK = (0.4, 0.2, 0.08)
_HIPS = {"FL": (0.18, 0.08), "FR": (0.18, -0.08), "RL": (-0.18, 0.08), "RR": (-0.18, -0.08)}
_SHOULDER_OFFSET = 0.05
_L_UPPER = 0.2
_L_LOWER = 0.2
_HIP0 = 0.6
_KNEE0 = -1.2


def build_quadruped(duration: float = 5.0, dt: float = 0.001, frequency: float = 2.0,
                    hip_amplitude: float = 0.15, knee_amplitude: float = 0.3, friction: float = 0.8) -> Scenario:
    """Box trunk with four three-segment legs walking with an open-loop trot.

    Each leg has a shoulder (abduction about x), an upper leg (hip pitch about
    y) and a lower leg (knee pitch about y), all revolute and PD-tracked.
    Diagonal leg pairs swing in antiphase; the knee folds during swing.
    """
    mt, ms, mu, ml = 4.0, 0.3, 0.4, 0.15
    r_leg = 0.02
    c0 = math.cos(_HIP0) * _L_UPPER + math.cos(_HIP0 + _KNEE0) * _L_LOWER
    z0 = c0  # trunk centre height with feet on the ground
    trunk = Body("trunk", mt, box_inertia(mt, _TRUNK), x=[0.0, 0.0, z0], shape={"type": "box", "size": list(_TRUNK)})
    bodies, joints, cps, acts = [trunk], [], [], []
    q_up, q_lo = _rot_y(_HIP0), _rot_y(_HIP0 + _KNEE0)
    down = np.array([0.0, 0.0, -1.0])
    kp, kd = 60.0, 1.5
    for leg, (hx, hy) in _HIPS.items():
        side = 1.0 if hy > 0 else -1.0
        hip = np.array([hx, hy, z0])
        sh_x = hip + [0.0, side * _SHOULDER_OFFSET, 0.0]
        up_x = sh_x + 0.5 * _L_UPPER * rotate_vector(q_up, down)
        knee = sh_x + _L_UPPER * rotate_vector(q_up, down)
        lo_x = knee + 0.5 * _L_LOWER * rotate_vector(q_lo, down)
        bodies += [
            Body(f"{leg}_shoulder", ms, cylinder_inertia(ms, 0.04, 2 * _SHOULDER_OFFSET), x=sh_x,
                 q=quat_from_axis_angle([1.0, 0.0, 0.0], 0.5 * math.pi),
                 shape={"type": "cylinder", "radius": 0.04, "length": 2 * _SHOULDER_OFFSET}),
            Body(f"{leg}_upper", mu, cylinder_inertia(mu, r_leg, _L_UPPER), x=up_x, q=q_up,
                 shape={"type": "cylinder", "radius": r_leg, "length": _L_UPPER}),
            Body(f"{leg}_lower", ml, cylinder_inertia(ml, r_leg, _L_LOWER), x=lo_x, q=q_lo,
                 shape={"type": "cylinder", "radius": r_leg, "length": _L_LOWER}),
        ]
        sh_q = bodies[-3].q
        joints += [
            JointConstraint(f"{leg}_abduct", "trunk", f"{leg}_shoulder", "revolute",
                            anchor_parent=[hx, hy, 0.0],
                            anchor_child=rotation_matrix(sh_q).T @ (hip - sh_x), axis=[1.0, 0.0, 0.0]),
            JointConstraint(f"{leg}_hip", f"{leg}_shoulder", f"{leg}_upper", "revolute",
                            anchor_parent=[0.0, 0.0, 0.0], anchor_child=[0.0, 0.0, 0.5 * _L_UPPER],
                            axis=rotation_matrix(sh_q).T @ [0.0, 1.0, 0.0]),
            JointConstraint(f"{leg}_knee", f"{leg}_upper", f"{leg}_lower", "revolute",
                            anchor_parent=[0.0, 0.0, -0.5 * _L_UPPER], anchor_child=[0.0, 0.0, 0.5 * _L_LOWER],
                            axis=[0.0, 1.0, 0.0]),
        ]
        cps.append(ContactPoint(f"{leg}_foot", f"{leg}_lower", p=[0.0, 0.0, -0.5 * _L_LOWER], friction=friction))
        phase = 0.0 if leg in ("FL", "RR") else math.pi
        acts += [
            JointPD(f"{leg}_abduct", Constant(0.0), kp=kp, kd=kd),
            JointPD(f"{leg}_hip", Sine(hip_amplitude, frequency, phase, start=0.2), kp=kp, kd=kd),
            JointPD(f"{leg}_knee", _Swing(knee_amplitude, frequency, phase, 0.2), kp=kp, kd=kd),
        ]
    return Scenario("quadruped", bodies, joints, cps, settings=SolverSettings(dt=dt),
                    steps=int(round(duration / dt)), actuators=acts,
                    description="quadruped trotting with an open-loop sinusoidal gait")


@dataclass
class _Swing:
    """Knee flexion during the swing half of the cycle: ``-A * max(0, sin(...))``."""

    amplitude: float
    frequency: float
    phase: float
    start: float

    def __call__(self, t: float) -> float:
        if t < self.start:
            return 0.0
        return -self.amplitude * max(0.0, math.sin(2.0 * math.pi * self.frequency * (t - self.start) + self.phase
                                                   - 0.5 * math.pi))

    def rate(self, t: float) -> float:
        if t < self.start:
            return 0.0
        w = 2.0 * math.pi * self.frequency
        arg = w * (t - self.start) + self.phase - 0.5 * math.pi
        return -self.amplitude * w * math.cos(arg) if math.sin(arg) > 0.0 else 0.0


# --------------------------------------------------------------------------
# presets

PRESETS: dict[str, tuple[Callable[[], Scenario], str]] = {
    "cylinder": (lambda: build_cylinder(10), "cylinder resting on 10 rim contacts, 100 steps"),
    "chain": (lambda: build_chain(10), "10-link chain lying on the ground, 100 steps"),
    "hopper": (build_hopper, "hopper jump with a full turn, 5 s at dt=0.001"),
    "quadruped": (build_quadruped, "quadruped trot, 5 s at dt=0.001"),
    "pendulum": (build_pendulum_chain, "5-link pendulum, 10 s swing without contact"),
    "free-chain": (build_free_chain, "3-link chain floating in zero gravity, 1000 steps"),
    "block": (build_block, "block sliding at 1 m/s with c_f=0.2, 100 steps"),
    "ball": (build_ball, "ball dropped from 1 m, 100 steps"),
}


def preset(name: str) -> Scenario:
    try:
        factory, _ = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return factory()
