"""Maximal-coordinate rigid-body simulator with rigid contact and Coulomb friction.

Each step solves the discrete equations of motion of a first-order
variational integrator, with contact and linearized friction handled as a
complementarity problem by an interior-point Newton method. The Newton
systems are factored in DFS order over the mechanism graph, so their cost
grows linearly with the number of bodies and contact points.
"""
from .graph_ldu import BlockGraph, BlockSystem, Factorization, back_substitute, dfs_order, factorize, operation_count
from .mechanism import (
    WORLD,
    Body,
    ContactPoint,
    JointConstraint,
    Mechanism,
    MechanismError,
    MechanismState,
    build_mechanism,
)
from .scenarios import PRESETS, Scenario, preset
from .simulation import SimulationError, Simulator, TrajectoryLog, run_simulation
from .solver import SolverSettings, SolverVariables, StepError, solve_step

__all__ = [
    "WORLD", "Body", "ContactPoint", "JointConstraint", "Mechanism", "MechanismError", "MechanismState",
    "build_mechanism", "BlockGraph", "BlockSystem", "Factorization", "back_substitute", "dfs_order",
    "factorize", "operation_count", "SolverSettings", "SolverVariables", "StepError", "solve_step",
    "Scenario", "PRESETS", "preset", "Simulator", "SimulationError", "TrajectoryLog", "run_simulation",
]
