"""Scaling benchmarks over contact count (cylinder) and link count (chain)."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Iterable

from .scenarios import build_chain, build_cylinder
from .solver import StepError, solve_step

BUILDERS = {"cylinder": build_cylinder, "chain": build_chain}


@dataclass
class TimingRecord:
    param: int
    repetitions: int
    best_seconds: float
    total_newton_iters: int
    op_count: int


class BenchError(RuntimeError):
    def __init__(self, kind: str, param: int, step: int, cause: Exception):
        super().__init__(f"{kind}({param}) failed at step {step}: {cause}")
        self.kind = kind
        self.param = param
        self.step = step


def _run(mech, scenario, steps: int) -> int:
    state = mech.initial_state()
    settings = scenario.settings
    iters = 0
    for k in range(steps):
        try:
            state, _, diag = solve_step(mech, state, settings)
        except StepError as err:
            raise BenchError(scenario.name, -1, k, err) from err
        iters += diag.iterations
    return iters


def time_scenario(kind: str, param: int, repetitions: int = 100, steps: int = 100) -> TimingRecord:
    """Best-of-``repetitions`` wall time for ``steps`` steps of one scenario."""
    return bench_scaling(kind, [param], repetitions, steps)[0]


def bench_scaling(kind: str, params: Iterable[int], repetitions: int = 100, steps: int = 100,
                  progress=None) -> list[TimingRecord]:
    """Best-of-``repetitions`` wall time of ``steps`` steps for each parameter value.

    Repetitions are interleaved across parameter values (round-robin), so a
    transient slowdown of the machine lands on different values in different
    rounds and is filtered out by the minimum. The solver kernels are
    compiled before the first timing.
    """
    if kind not in BUILDERS:
        raise ValueError(f"unknown benchmark {kind!r}; choose from {', '.join(BUILDERS)}")
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    params = [int(p) for p in params]
    scenarios = [BUILDERS[kind](p) for p in params]
    mechs = [s.build() for s in scenarios]
    if params:
        # warm-up so JIT compilation never lands in a timed run
        _run(mechs[0], scenarios[0], 2)
    best = [float("inf")] * len(params)
    iters = [0] * len(params)
    for rep in range(repetitions):
        for k, p in enumerate(params):
            t0 = time.perf_counter()
            try:
                iters[k] = _run(mechs[k], scenarios[k], steps)
            except BenchError as err:
                raise BenchError(kind, p, err.step, err.__cause__) from err.__cause__
            best[k] = min(best[k], time.perf_counter() - t0)
            if progress is not None and rep == repetitions - 1:
                progress(TimingRecord(p, repetitions, best[k], iters[k], mechs[k].operation_count))
    return [TimingRecord(p, repetitions, best[k], iters[k], mechs[k].operation_count)
            for k, p in enumerate(params)]


TIMING_COLUMNS = ["param", "best_seconds", "total_newton_iters", "op_count"]


def write_timing_csv(records: list[TimingRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for r in records:
            w.writerow([r.param, format(r.best_seconds, ".17g"), r.total_newton_iters, r.op_count])


def read_timing_csv(path) -> list[TimingRecord]:
    with open(path, newline="") as fh:
        return [TimingRecord(int(row["param"]), 0, float(row["best_seconds"]),
                             int(row["total_newton_iters"]), int(row["op_count"]))
                for row in csv.DictReader(fh)]


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares ``y = a + b x``; returns ``(a, b, r_squared)``."""
    import numpy as np

    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    b, a = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (a + b * x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(a), float(b), r2
