"""Directed-distributed projected subgradient method over directed graphs."""

from .graph import DirectedGraph, is_strongly_connected, random_strongly_connected
from .oracle import Logistic, ObjectiveSpec, StepSchedule, SumOfDistances
from .projection import Ball, Box, WholeSpace, interval, project
from .solver import SolverState, SolverTrace, rate_fit, run, step, step_compact
from .weights import SurplusSystem, assemble_m, build_weights, surplus_system

__all__ = [
    "Ball", "Box", "DirectedGraph", "Logistic", "ObjectiveSpec", "SolverState",
    "SolverTrace", "StepSchedule", "SumOfDistances", "SurplusSystem", "WholeSpace",
    "assemble_m", "build_weights", "interval", "is_strongly_connected", "project",
    "random_strongly_connected", "rate_fit", "run", "step", "step_compact",
    "surplus_system",
]
