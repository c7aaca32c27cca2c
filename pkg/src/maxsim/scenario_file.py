"""YAML scenario files.

Layout (every section except ``bodies`` is optional)::

    name: sliding-block
    steps: 100
    gravity: [0, 0, -9.81]
    solver: {dt: 0.01, eps: 1.0e-6, mu0: 1.0, kappa: 0.1, tau: 0.995, max_iter: 100}
    bodies:
      - {id: block, mass: 1.0, inertia: [0.0067, 0.0067, 0.0067], x: [0, 0, 0.1], v: [1, 0, 0]}
    joints:
      - {id: j0, parent: world, child: block, kind: revolute,
         anchor_parent: [0, 0, 0], anchor_child: [0, 0, 0], axis: [0, 0, 1]}
    contacts:
      - {id: c0, body: block, p: [0.1, 0.1, -0.1], normal: [0, 0, 1], offset: 0, friction: 0.2, n_pairs: 2}
    actuation:
      - {type: joint_pd, joint: j0, target: {type: sine, amplitude: 0.3, frequency: 1}, kp: 50, kd: 2}
      - {type: joint_force, joint: j0, signal: 0.5}
      - {type: body_force, body: block, force: [0.98, 0, 0], torque: [0, 0, 0], start: 0, stop: 1}
      - {type: attitude_pd, body: block, kp: 60, kd: 6, turn: {axis: [1, 1, 0], angle: 6.283, start: 0.4, stop: 0.8}}

Signals are a number (constant), or a mapping with ``type`` one of
``constant`` (``value``), ``sine`` (``amplitude, frequency, phase, offset,
start``) or ``table`` (``times, values``).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .mechanism import Body, ContactPoint, JointConstraint
from .scenarios import (
    AttitudeTurn,
    BodyAttitudePD,
    BodyForce,
    JointForce,
    JointPD,
    Scenario,
    make_signal,
)
from .solver import SolverSettings


class ScenarioFileError(ValueError):
    pass


_SOLVER_KEYS = {"dt", "eps", "mu0", "kappa", "tau", "max_iter"}


def _take(d: dict, where: str, required=(), optional=()) -> dict:
    if not isinstance(d, dict):
        raise ScenarioFileError(f"{where}: expected a mapping")
    missing = [k for k in required if k not in d]
    if missing:
        raise ScenarioFileError(f"{where}: missing {', '.join(missing)}")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ScenarioFileError(f"{where}: unknown keys {', '.join(sorted(unknown))}")
    return d


def _actuator(spec: dict, where: str):
    kind = spec.get("type")
    rest = {k: v for k, v in spec.items() if k != "type"}
    if kind == "joint_force":
        _take(rest, where, ["joint"], ["signal"])
        return JointForce(rest["joint"], make_signal(rest.get("signal")))
    if kind == "joint_pd":
        _take(rest, where, ["joint", "kp", "kd"], ["target", "limit", "feedforward"])
        return JointPD(rest["joint"], make_signal(rest.get("target")), float(rest["kp"]), float(rest["kd"]),
                       float(rest.get("limit", np.inf)), float(rest.get("feedforward", 0.0)))
    if kind == "body_force":
        _take(rest, where, ["body"], ["force", "torque", "start", "stop"])
        return BodyForce(rest["body"], tuple(rest.get("force", (0.0, 0.0, 0.0))),
                         tuple(rest.get("torque", (0.0, 0.0, 0.0))),
                         float(rest.get("start", 0.0)), float(rest.get("stop", np.inf)))
    if kind == "attitude_pd":
        _take(rest, where, ["body", "kp", "kd"], ["turn", "q0"])
        turn = None
        if rest.get("turn") is not None:
            t = _take(rest["turn"], where + ".turn", ["axis", "angle", "start", "stop"])
            turn = AttitudeTurn(t["axis"], float(t["angle"]), float(t["start"]), float(t["stop"]))
        q0 = np.asarray(rest.get("q0", [1.0, 0.0, 0.0, 0.0]), dtype=float)
        return BodyAttitudePD(rest["body"], float(rest["kp"]), float(rest["kd"]), turn, q0)
    raise ScenarioFileError(f"{where}: unknown actuator type {kind!r}")


def scenario_from_dict(data: dict, name: str = "scenario") -> Scenario:
    """Build a :class:`Scenario` from parsed YAML data."""
    _take(data, "scenario", ["bodies"],
          ["name", "steps", "gravity", "solver", "joints", "contacts", "actuation", "description"])
    try:
        solver = dict(data.get("solver") or {})
        bad = set(solver) - _SOLVER_KEYS
        if bad:
            raise ScenarioFileError(f"solver: unknown keys {', '.join(sorted(bad))}")
        settings = SolverSettings(**solver)
        bodies = [Body(**_take(b, f"bodies[{i}]", ["id", "mass", "inertia"], ["x", "q", "v", "omega", "shape"]))
                  for i, b in enumerate(data["bodies"])]
        joints = [JointConstraint(**_take(j, f"joints[{i}]", ["id", "parent", "child"],
                                          ["kind", "anchor_parent", "anchor_child", "axis", "rest_offset"]))
                  for i, j in enumerate(data.get("joints") or [])]
        contacts = [ContactPoint(**_take(c, f"contacts[{i}]", ["id", "body", "p"],
                                         ["normal", "offset", "friction", "n_pairs", "basis"]))
                    for i, c in enumerate(data.get("contacts") or [])]
        acts = [_actuator(a, f"actuation[{i}]") for i, a in enumerate(data.get("actuation") or [])]
        gravity = np.asarray(data.get("gravity", [0.0, 0.0, -9.81]), dtype=float).reshape(3)
    except ScenarioFileError:
        raise
    except (TypeError, ValueError, KeyError) as err:
        raise ScenarioFileError(str(err)) from err
    for j in joints:
        if j.rest_offset is not None:
            j.rest_offset = np.asarray(j.rest_offset, dtype=float)
    steps = int(data.get("steps", 100))
    if steps < 0:
        raise ScenarioFileError("steps must be non-negative")
    return Scenario(str(data.get("name", name)), bodies, joints, contacts, gravity, settings, steps, acts,
                    str(data.get("description", "")))


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as err:
            raise ScenarioFileError(f"{path}: {err}") from err
    if data is None:
        raise ScenarioFileError(f"{path}: empty file")
    return scenario_from_dict(data, name=path.stem)


def loads_scenario(text: str) -> Scenario:
    return scenario_from_dict(yaml.safe_load(text))
