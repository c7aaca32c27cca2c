"""Interior-point Newton solver for one time step.

The complementarity conditions are relaxed to ``slack * dual = mu`` and
Newton's method is run on the relaxed system. A fraction-to-boundary rule
keeps every slack and dual strictly positive, a backtracking search on the
residual norm damps the step, and ``mu`` is cut by ``kappa`` whenever the
residual drops below ``max(eps, mu)``. A step is converged once
``||r||_inf < eps`` with ``mu <= eps**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import VariableLayout, assemble_k
from .graph_ldu import factor_k, solve_k
from .mechanism import Mechanism, MechanismState, signed_distance_k
from .quaternion import omega_feasible_k, qmul_k, qnormalize_k, relative_quat_k

CONVERGED, MAX_ITERATIONS, LINE_SEARCH_STALL, SINGULAR = 0, 1, 2, 3
_STATUS_TEXT = {
    MAX_ITERATIONS: "maximum Newton iterations exceeded",
    LINE_SEARCH_STALL: "line search stalled",
    SINGULAR: "singular Jacobian block",
}


@dataclass
class SolverSettings:
    dt: float = 0.01
    eps: float = 1e-6
    mu0: float = 1.0
    kappa: float = 0.1
    tau: float = 0.995
    max_iter: int = 100

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if not self.mu0 > 0.0:
            raise ValueError("mu0 must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SolverVariables:
    """Stacked step unknowns plus barrier state."""

    layout: VariableLayout
    values: np.ndarray
    mu: float
    iterations: int = 0
    residual_norm: float = math.inf

    def velocity(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s = self.values[self.layout.body(i)]
        return s[:3], s[3:]

    def multiplier(self, j: int) -> np.ndarray:
        return self.values[self.layout.joint(j)]

    def contact(self, c: int) -> dict[str, np.ndarray]:
        return {k: self.values[s] for k, s in self.layout.contact(c).items()}

    def gamma(self, c: int) -> float:
        return float(self.values[self.layout.contact(c)["gamma"]][0])

    def positive_mask(self) -> np.ndarray:
        return self.layout.mechanism.packed.positive

    def interior(self) -> bool:
        return bool(np.all(self.values[self.positive_mask()] > 0.0))


@dataclass
class StepDiagnostics:
    iterations: int
    residual_norm: float
    mu: float
    complementarity_gap: float
    status: int = CONVERGED


class StepError(RuntimeError):
    """The step solver did not converge; carries the best iterate found."""

    def __init__(self, message: str, variables: SolverVariables, diagnostics: StepDiagnostics):
        super().__init__(message)
        self.variables = variables
        self.diagnostics = diagnostics


@njit(cache=True)
def init_k(P, x, q, v, w, a):
    for i in range(P.mass.shape[0]):
        o = P.var_off[P.body_node[i]]
        a[o:o + 3] = v[i]
        a[o + 3:o + 6] = w[i]
    for ci in range(P.c_body.shape[0]):
        b = P.c_body[ci]
        val = max(1.0, signed_distance_k(P.c_n[ci], P.c_off[ci], P.c_p[ci], x[b], q[b]))
        a[P.var_off[P.contact_node[ci, 0]]:P.var_off[P.contact_node[ci, 3] + 1]] = val


def initialize_step(mech: Mechanism, state: MechanismState, settings: SolverSettings) -> SolverVariables:
    """Warm-start velocities, zero joint impulses, and interior contact variables.

    Every contact slack and dual (and the friction impulses) start at
    ``max(1, phi)`` with ``phi`` the current signed distance.
    """
    a = np.zeros(mech.plan.n_vars)
    init_k(mech.packed, state.x, state.q, state.v, state.omega, a)
    return SolverVariables(_layout(mech), a, settings.mu0)


def _layout(mech: Mechanism) -> VariableLayout:
    lay = mech.__dict__.get("_layout")
    if lay is None:
        lay = mech.__dict__["_layout"] = VariableLayout(mech)
    return lay


@njit(cache=True)
def fraction_to_boundary_k(a, d, positive, tau):
    alpha = 1.0
    for i in range(a.shape[0]):
        if positive[i] and d[i] < 0.0:
            lim = -tau * a[i] / d[i]
            if lim < alpha:
                alpha = lim
    return alpha


def fraction_to_boundary(variables, delta, tau: float, positive=None) -> float:
    """Largest ``alpha <= 1`` keeping ``a + alpha*delta >= (1 - tau) a`` on the positive entries.

    ``variables`` is a :class:`SolverVariables` (its layout supplies the
    positive entries) or a plain array together with ``positive``.
    """
    if isinstance(variables, SolverVariables):
        values, positive = variables.values, variables.positive_mask()
    else:
        values = np.asarray(variables, dtype=float)
        positive = np.ones(values.shape, dtype=np.bool_) if positive is None else np.asarray(positive, dtype=np.bool_)
    return float(fraction_to_boundary_k(values, np.asarray(delta, dtype=float), positive, tau))


@njit(cache=True)
def gap_k(P, a):
    gap = 0.0
    for ci in range(P.c_body.shape[0]):
        og = P.var_off[P.contact_node[ci, 0]]
        op = P.var_off[P.contact_node[ci, 1]]
        ob = P.var_off[P.contact_node[ci, 2]]
        of = P.var_off[P.contact_node[ci, 3]]
        m = 2 * P.c_npairs[ci]
        gap = max(gap, a[og] * a[og + 1], a[op] * a[op + 1])
        for i in range(m):
            gap = max(gap, a[ob + m + i] * a[of + i])
    return gap


def complementarity_gap(variables: SolverVariables) -> float:
    """Largest slack-dual product over all contacts (0 without contacts)."""
    return float(gap_k(variables.layout.mechanism.packed, variables.values))


@njit(cache=True)
def _maxabs(r):
    m = 0.0
    for i in range(r.shape[0]):
        v = abs(r[i])
        if v > m or v != v:
            m = v
    return m


@njit(cache=True)
def _norm2(r):
    s = 0.0
    for i in range(r.shape[0]):
        s += r[i] * r[i]
    return math.sqrt(s)


@njit(cache=True)
def _velocities_feasible(P, a, dt):
    for i in range(P.mass.shape[0]):
        o = P.var_off[P.body_node[i]]
        if not omega_feasible_k(a[o + 3:o + 6], dt):
            return False
    return True


@njit(cache=True)
def newton_k(P, order, dims, blk_off, diag_blk, later_ptr, later_idx, blk_ik, blk_ki,
             pair_ptr, pair_blk, piv_off, var_off,
             x, q, v, w, a0, dt, gravity, fext, text, eps, mu0, kappa, tau, max_iter):
    n = a0.shape[0]
    nvals = blk_off[-1]
    a = a0.copy()
    r = np.empty(n)
    vals = np.empty(nvals)
    rt = np.empty(n)
    vt = np.empty(nvals)
    piv = np.zeros(max(n, 1), dtype=np.int64)
    mu = mu0
    mu_min = eps * eps
    assemble_k(P, x, q, v, w, a, dt, mu, gravity, fext, text, True, r, vals)
    rn = _maxabs(r)
    best = a.copy()
    best_rn = np.inf
    it = 0
    status = MAX_ITERATIONS
    while True:
        if rn < best_rn:
            best_rn = rn
            best[:] = a
        if rn < eps and mu <= mu_min:
            status = CONVERGED
            break
        if it >= max_iter:
            status = MAX_ITERATIONS
            break
        if rn < max(eps, mu) and mu > mu_min:
            mu = max(kappa * mu, mu_min)
            assemble_k(P, x, q, v, w, a, dt, mu, gravity, fext, text, True, r, vals)
            rn = _maxabs(r)
            # keep cutting while the iterate already solves the new barrier
            # problem (always the case when no row depends on mu)
            while rn < mu and mu > mu_min:
                mu = max(kappa * mu, mu_min)
                assemble_k(P, x, q, v, w, a, dt, mu, gravity, fext, text, True, r, vals)
                rn = _maxabs(r)
            if rn < eps and mu <= mu_min:
                status = CONVERGED
                break
        if factor_k(order, dims, blk_off, diag_blk, later_ptr, later_idx, blk_ik, blk_ki,
                    pair_ptr, pair_blk, piv_off, var_off, vals, piv) >= 0:
            status = SINGULAR
            break
        d = solve_k(order, dims, blk_off, diag_blk, later_ptr, later_idx, blk_ik, blk_ki,
                    pair_ptr, pair_blk, piv_off, var_off, vals, piv, r)
        # iterate update is a - alpha d
        alpha = fraction_to_boundary_k(a, -d, P.positive, tau)
        r2 = _norm2(r)
        accepted = False
        while alpha >= 1e-10:
            at = a - alpha * d
            if _velocities_feasible(P, at, dt):
                assemble_k(P, x, q, v, w, at, dt, mu, gravity, fext, text, True, rt, vt)
                rtn = _maxabs(rt)
                if _norm2(rt) <= (1.0 - 1e-4 * alpha) * r2 or rtn < 0.1 * eps:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            status = LINE_SEARCH_STALL
            break
        a = at
        r, rt = rt, r
        vals, vt = vt, vals
        rn = rtn
        it += 1
    if status != CONVERGED:
        a = best
        rn = best_rn
    return status, it, a, mu, rn


def solve_step(
    mech: Mechanism,
    state: MechanismState,
    settings: SolverSettings,
    force=None,
    torque=None,
    variables: SolverVariables | None = None,
) -> tuple[MechanismState, SolverVariables, StepDiagnostics]:
    """Advance ``state`` by one step.

    ``force`` (world frame) and ``torque`` (body frame) are per-body
    wrenches held constant over the step. Raises :class:`StepError` when the
    Newton loop fails; the error carries the best iterate.
    """
    nb = mech.n_bodies
    fext = np.zeros((nb, 3)) if force is None else np.asarray(force, dtype=float).reshape(nb, 3)
    text = np.zeros((nb, 3)) if torque is None else np.asarray(torque, dtype=float).reshape(nb, 3)
    if variables is None:
        variables = initialize_step(mech, state, settings)
    dt = settings.dt
    status, it, a, mu, rn = newton_k(
        mech.packed, *mech.plan.kernel_args,
        state.x, state.q, state.v, state.omega, variables.values, dt, mech.gravity, fext, text,
        settings.eps, variables.mu, settings.kappa, settings.tau, settings.max_iter,
    )
    out = SolverVariables(variables.layout, a, mu, it, rn)
    diag = StepDiagnostics(it, rn, mu, complementarity_gap(out), status)
    if status != CONVERGED:
        raise StepError(f"{_STATUS_TEXT[status]} (residual {rn:.3e}, {it} iterations)", out, diag)
    return advance(mech, state, out, dt), out, diag


@njit(cache=True)
def advance_k(P, x, q, a, dt, x2, q2, v2, w2):
    for i in range(P.mass.shape[0]):
        o = P.var_off[P.body_node[i]]
        for k in range(3):
            v2[i, k] = a[o + k]
            w2[i, k] = a[o + 3 + k]
            x2[i, k] = x[i, k] + dt * a[o + k]
        q2[i] = qnormalize_k(qmul_k(q[i], relative_quat_k(a[o + 3:o + 6], dt)))


def advance(mech: Mechanism, state: MechanismState, variables: SolverVariables, dt: float) -> MechanismState:
    """Configuration and velocity after the step described by ``variables``."""
    new = MechanismState(np.empty_like(state.x), np.empty_like(state.q),
                         np.empty_like(state.v), np.empty_like(state.omega))
    advance_k(mech.packed, state.x, state.q, variables.values, dt, new.x, new.q, new.v, new.omega)
    return new
