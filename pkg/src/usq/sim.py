"""Deterministic multi-robot simulation.

Robots follow a kinematic unicycle with proportional steering toward their
goal.  There is no collision avoidance: robots drive through each other,
which is what makes the collision detectors have something to detect.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from usq.geometry import Rect, Vec2, distance

DT = 0.1
RADIUS = 0.5
V_MAX = 2.0
EPSILON = 0.05
TURN_RATE = math.pi  # rad/s
GOAL_TOL = 0.1
STEP_LIMIT = 5000
MAX_ATTEMPTS = 10_000

SPARSE_SIZE = 512.0
DENSE_SIZE = 85.0
CIRCLE_RADIUS = 150.0
CIRCLE_WORLD = Rect(-160.0, -160.0, 160.0, 160.0)

ENV_NAMES = ("sparse", "dense", "circle")


@dataclass(slots=True)
class Robot:
    id: int
    pos: Vec2
    goal: Vec2
    heading: float = 0.0
    speed: float = 0.0
    radius: float = RADIUS
    predicted: list = field(default_factory=list)
    num_skip: int = 0
    reached: bool = False


@dataclass
class Environment:
    name: str
    n_robots: int
    seed: int = 0
    step_limit: int = STEP_LIMIT
    world: Optional[Rect] = None

    def __post_init__(self):
        if self.name not in ENV_NAMES:
            raise ValueError(f"unknown environment {self.name!r}; expected one of {ENV_NAMES}")
        if self.n_robots < 0:
            raise ValueError("n_robots must be >= 0")
        if self.world is None:
            self.world = default_world(self.name)


def default_world(name: str) -> Rect:
    if name == "sparse":
        return Rect(0.0, 0.0, SPARSE_SIZE, SPARSE_SIZE)
    if name == "dense":
        return Rect(0.0, 0.0, DENSE_SIZE, DENSE_SIZE)
    if name == "circle":
        return CIRCLE_WORLD
    raise ValueError(f"unknown environment {name!r}")


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _advance(pos: Vec2, heading: float, goal: Vec2, v_max: float, dt: float,
             turn_rate: float) -> tuple[Vec2, float, float]:
    """One Euler step of the unicycle.  Returns (pos, heading, speed)."""
    dx = goal.x - pos.x
    dy = goal.y - pos.y
    dist = math.sqrt(dx * dx + dy * dy)
    step = v_max * dt
    if dist <= step:
        # terminal step lands on the goal exactly
        return goal, heading, dist / dt
    err = _wrap(math.atan2(dy, dx) - heading)
    max_turn = turn_rate * dt
    heading = _wrap(heading + max(-max_turn, min(max_turn, err)))
    speed = min(v_max, dist / dt)
    travel = speed * dt
    c = math.cos(heading)
    s = math.sin(heading)
    norm = math.sqrt(c * c + s * s)
    if norm > 1.0:
        # keeps the displacement bound exact under rounding
        c /= norm
        s /= norm
    return Vec2(pos.x + travel * c, pos.y + travel * s), heading, speed


def predict(robot: Robot, v_max: float = V_MAX, dt: float = DT, turn_rate: float = TURN_RATE,
            horizon: int = 2) -> list[Vec2]:
    """Next ``horizon`` positions if the controller keeps running unchanged."""
    if robot.reached:
        return [robot.pos] * horizon
    out = []
    pos, heading = robot.pos, robot.heading
    for _ in range(horizon):
        pos, heading, _ = _advance(pos, heading, robot.goal, v_max, dt, turn_rate)
        out.append(pos)
    return out


def controller_step(robot: Robot, dt: float = DT, v_max: float = V_MAX,
                    turn_rate: float = TURN_RATE, goal_tol: float = GOAL_TOL) -> Robot:
    """Advance one timestep in place and refresh the 2-step prediction."""
    if not robot.reached:
        robot.pos, robot.heading, robot.speed = _advance(
            robot.pos, robot.heading, robot.goal, v_max, dt, turn_rate)
        robot.reached = distance(robot.pos, robot.goal) < goal_tol
        if robot.reached:
            robot.speed = 0.0
    robot.predicted = predict(robot, v_max, dt, turn_rate)
    return robot


def all_reached(robots, goal_tol: float = GOAL_TOL) -> bool:
    return all(distance(rb.pos, rb.goal) < goal_tol for rb in robots)


def _sample_points(rng: random.Random, world: Rect, n: int, margin: float, min_sep: float,
                   what: str) -> list[Vec2]:
    pts: list[Vec2] = []
    lo_x, hi_x = world.xmin + margin, world.xmax - margin
    lo_y, hi_y = world.ymin + margin, world.ymax - margin
    sep2 = min_sep * min_sep
    for i in range(n):
        for _ in range(MAX_ATTEMPTS):
            p = Vec2(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y))
            if all((p.x - q.x) ** 2 + (p.y - q.y) ** 2 > sep2 for q in pts):
                pts.append(p)
                break
        else:
            raise RuntimeError(
                f"could not place {what} {i} after {MAX_ATTEMPTS} attempts; world too crowded")
    return pts


def gen_environment(env: Environment, radius: float = RADIUS) -> list[Robot]:
    """Initial robot list for ``env``.  Same (env, seed) gives the same layout."""
    if env.name == "circle":
        robots = []
        for i in range(env.n_robots):
            theta = 2.0 * math.pi * i / env.n_robots
            start = Vec2(CIRCLE_RADIUS * math.cos(theta), CIRCLE_RADIUS * math.sin(theta))
            goal = Vec2(start.x, -start.y)
            robots.append(Robot(i, start, goal, radius=radius))
    else:
        rng = random.Random(env.seed)
        starts = _sample_points(rng, env.world, env.n_robots, radius, 2.0 * radius, "start")
        goals = _sample_points(rng, env.world, env.n_robots, radius, 2.0 * radius, "goal")
        robots = [Robot(i, s, g, radius=radius) for i, (s, g) in enumerate(zip(starts, goals))]
    for rb in robots:
        dx = rb.goal.x - rb.pos.x
        dy = rb.goal.y - rb.pos.y
        rb.heading = math.atan2(dy, dx) if (dx or dy) else 0.0
        rb.reached = distance(rb.pos, rb.goal) < GOAL_TOL
        rb.predicted = predict(rb)
    return robots
