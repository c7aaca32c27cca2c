"""Time stepping driver and trajectory logging."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .mechanism import Mechanism, MechanismState, joint_violation_k, signed_distance_k
from .scenarios import Scenario
from .solver import SolverSettings, StepDiagnostics, StepError, solve_step


@njit(cache=True)
def contact_summary_k(P, a, x, q, out):
    """Per contact: signed distance at ``(x, q)``, gamma, ||beta||_1, psi."""
    for ci in range(P.c_body.shape[0]):
        b = P.c_body[ci]
        out[ci, 0] = signed_distance_k(P.c_n[ci], P.c_off[ci], P.c_p[ci], x[b], q[b])
        og = P.var_off[P.contact_node[ci, 0]]
        op = P.var_off[P.contact_node[ci, 1]]
        ob = P.var_off[P.contact_node[ci, 2]]
        out[ci, 1] = a[og]
        s = 0.0
        for i in range(2 * P.c_npairs[ci]):
            s += abs(a[ob + i])
        out[ci, 2] = s
        out[ci, 3] = a[op]


class SimulationError(RuntimeError):
    """Solver failure at ``step``; ``log`` holds every state up to the failure."""

    def __init__(self, step: int, cause: StepError, log: "TrajectoryLog"):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause
        self.log = log


@dataclass
class TrajectoryLog:
    """One row per step boundary, starting with the initial state."""

    mechanism: Mechanism
    dt: float
    time: list = field(default_factory=list)
    x: list = field(default_factory=list)
    q: list = field(default_factory=list)
    v: list = field(default_factory=list)
    omega: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    joint_error: list = field(default_factory=list)
    contacts: list = field(default_factory=list)  # (n_contacts, 4): phi, gamma, |beta|_1, psi

    def __len__(self) -> int:
        return len(self.time)

    def record(self, t: float, state: MechanismState, summary: np.ndarray, diag: StepDiagnostics | None):
        self.time.append(t)
        self.x.append(state.x.copy())
        self.q.append(state.q.copy())
        self.v.append(state.v.copy())
        self.omega.append(state.omega.copy())
        self.iterations.append(0 if diag is None else diag.iterations)
        self.residual.append(0.0 if diag is None else diag.residual_norm)
        self.gap.append(0.0 if diag is None else diag.complementarity_gap)
        self.joint_error.append(float(joint_violation_k(self.mechanism.packed, state.x, state.q)))
        self.contacts.append(summary.copy())

    # array views ---------------------------------------------------------
    @property
    def phi(self) -> np.ndarray:
        """Signed distances, shape ``(rows, n_contacts)``."""
        return np.array([c[:, 0] for c in self.contacts]).reshape(len(self), -1)

    @property
    def gamma(self) -> np.ndarray:
        return np.array([c[:, 1] for c in self.contacts]).reshape(len(self), -1)

    def positions(self) -> np.ndarray:
        return np.array(self.x)

    def states(self):
        for x, q, v, w in zip(self.x, self.q, self.v, self.omega):
            yield MechanismState(x, q, v, w)

    # CSV ------------------------------------------------------------------
    def header(self) -> list[str]:
        cols = ["step", "time", "iters", "residual", "gap", "joint_err"]
        for b in self.mechanism.bodies:
            cols += [f"{b.id}.{k}" for k in ("x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz")]
        for c in self.mechanism.contacts:
            cols += [f"{c.id}.{k}" for k in ("phi", "gamma", "beta_l1", "psi")]
        return cols

    def rows(self):
        for k in range(len(self)):
            body = np.hstack([self.x[k], self.q[k], self.v[k], self.omega[k]]).ravel()
            vals = [self.time[k], self.residual[k], self.gap[k], self.joint_error[k],
                    *body, *self.contacts[k].ravel()]
            yield [str(k), *(format(float(self.time[k]), ".17g"),), str(self.iterations[k]),
                   *(format(float(v), ".17g") for v in vals[1:])]

    def to_csv(self, path=None) -> str | None:
        """Write to ``path`` (or return the text when ``path`` is None)."""
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for row in self.rows():
            buf.write(",".join(row) + "\n")
        if path is None:
            return buf.getvalue()
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
        return None


class Simulator:
    """Steps one scenario, applying its actuators before each step."""

    def __init__(self, scenario: Scenario, settings: SolverSettings | None = None):
        self.scenario = scenario
        self.settings = settings or scenario.settings
        self.mechanism = scenario.build()
        self.state = self.mechanism.initial_state()
        self.step_index = 0
        self._summary = np.zeros((len(self.mechanism.contacts), 4))

    @property
    def time(self) -> float:
        return self.step_index * self.settings.dt

    def step(self) -> StepDiagnostics:
        force, torque = self.scenario.wrenches(self.mechanism, self.state, self.time)
        self.state, self.variables, diag = solve_step(self.mechanism, self.state, self.settings, force, torque)
        self.step_index += 1
        return diag

    def summary(self, values=None) -> np.ndarray:
        a = np.zeros(self.mechanism.plan.n_vars) if values is None else values
        contact_summary_k(self.mechanism.packed, a, self.state.x, self.state.q, self._summary)
        return self._summary


def run_simulation(scenario: Scenario, steps: int | None = None, settings: SolverSettings | None = None) -> TrajectoryLog:
    """Simulate ``steps`` steps (default: the scenario's own count).

    Raises :class:`SimulationError` carrying the partial log if a step fails.
    """
    sim = Simulator(scenario, settings)
    n = scenario.steps if steps is None else int(steps)
    if n < 0:
        raise ValueError("step count must be non-negative")
    log = TrajectoryLog(sim.mechanism, sim.settings.dt)
    log.record(0.0, sim.state, sim.summary(), None)
    for k in range(n):
        try:
            diag = sim.step()
        except StepError as err:
            raise SimulationError(k, err, log) from err
        log.record(sim.time, sim.state, sim.summary(sim.variables.values), diag)
    return log
