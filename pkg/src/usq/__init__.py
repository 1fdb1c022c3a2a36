"""Quad-tree broad-phase collision checking for multi-robot simulations."""
from usq.geometry import Rect, Vec2
from usq.kernels import BACKEND
from usq.metrics import RunMetrics
from usq.quadtree import QuadTree
from usq.sim import Environment, Robot
from usq.strategies import (
    STRATEGY_NAMES,
    SafetyParams,
    TrialConfig,
    compute_skip,
    make_strategy,
    run_trial,
)

__all__ = [
    "BACKEND",
    "Environment",
    "QuadTree",
    "Rect",
    "Robot",
    "RunMetrics",
    "STRATEGY_NAMES",
    "SafetyParams",
    "TrialConfig",
    "Vec2",
    "compute_skip",
    "make_strategy",
    "run_trial",
]

__version__ = "0.1.0"
