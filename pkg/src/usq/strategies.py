"""Broad-phase collision detection engines and the trial loop.

Three engines share one ``step(t, robots, metrics)`` interface:

* ``pairwise``: every pair, every step.
* ``rq``: rebuild a quad-tree each step, check pairs inside each leaf only.
* ``usq``: one persistent quad-tree updated by remove-and-add, per-robot skip
  counters that suppress updates and checks for robots provably far from
  their leaf border and from leaf-mates, and neighbor-region checks for
  robots close to a border.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

from usq.geometry import (
    BOTTOM,
    LEFT,
    RIGHT,
    TOP,
    Rect,
    closest_edge,
    distance,
    edges_at,
    polyline_exit_point,
)
from usq.metrics import (
    CollisionEpisode,
    RunMetrics,
    assemble_episodes,
    oracle_sweep,
    pair_key,
    score_detection,
)
from usq.quadtree import DEFAULT_CAPACITY, DEFAULT_DEPTH_CAP, QuadNode, QuadTree, build_tree
from usq import sim

STRATEGY_NAMES = ("pairwise", "rq", "usq")

# Absorbs rounding in the skip quotients; only ever lowers the count.
_FLOOR_GUARD = 1e-9


class IndexCorruptionError(RuntimeError):
    """The USQ tree and the robot list disagree."""


@dataclass(frozen=True)
class SafetyParams:
    r: float
    max_dist_traveled: float
    epsilon: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"radius must be > 0, got {self.r}")
        if self.max_dist_traveled < 0 or self.epsilon < 0:
            raise ValueError("max_dist_traveled and epsilon must be >= 0")

    @property
    def min_thres(self) -> float:
        return min_threshold(self)


def collision_predicate(a_pos, b_pos, r: float) -> bool:
    dx = a_pos[0] - b_pos[0]
    dy = a_pos[1] - b_pos[1]
    two_r = 2.0 * r
    return dx * dx + dy * dy < two_r * two_r


def min_threshold(p: SafetyParams) -> float:
    return 2.0 * p.r + p.max_dist_traveled + p.epsilon


def region_extent(p: SafetyParams) -> float:
    return 2.0 * p.r + 2.0 * p.max_dist_traveled + p.epsilon


def compute_skip(d_border: float, d_robots: float, p: SafetyParams) -> int:
    """Timesteps a robot may skip tree updates and collision checks.

    Robot-robot closing speed is two max steps (both may move head-on);
    the border only recedes at this robot's max step.
    """
    mdt = p.max_dist_traveled
    if mdt <= 0:
        raise ValueError("compute_skip needs max_dist_traveled > 0")
    k = math.floor((d_border - p.min_thres) / mdt - _FLOOR_GUARD)
    if math.isfinite(d_robots):
        k_r = math.floor((d_robots - 2.0 * p.r - p.epsilon) / (2.0 * mdt) - _FLOOR_GUARD)
        k = min(k, k_r)
    return max(0, k)


class NeighborRegion(NamedTuple):
    rect: Rect
    kind: str  # "side" | "corner-primary" | "corner-extra"


class CollisionReport(NamedTuple):
    timestep: int
    pair: tuple
    positions: tuple


# Region geometry works on (xmin, ymin, xmax, ymax) tuples; Rect objects are
# only built for the public result.

def _side_box(b: Rect, edge: str, cx: float, cy: float, depth: float, half: float) -> tuple:
    if edge == RIGHT:
        return (b.xmax, cy - half, b.xmax + depth, cy + half)
    if edge == LEFT:
        return (b.xmin - depth, cy - half, b.xmin, cy + half)
    if edge == TOP:
        return (cx - half, b.ymax, cx + half, b.ymax + depth)
    return (cx - half, b.ymin - depth, cx + half, b.ymin)


def _span(edge: str, cx: float, cy: float, size: float) -> tuple[float, float]:
    # interval of length ``size`` that starts at the corner and leaves the
    # leaf through ``edge``
    if edge == RIGHT:
        return cx, cx + size
    if edge == LEFT:
        return cx - size, cx
    if edge == TOP:
        return cy, cy + size
    return cy - size, cy


def _diagonal_box(corner: tuple[str, str], cx: float, cy: float, x: float) -> tuple:
    x0, x1 = _span(corner[0], cx, cy, x)
    y0, y1 = _span(corner[1], cx, cy, x)
    return (x0, y0, x1, y1)


def _lateral_box(crossed: str, other: str, cx: float, cy: float, x: float, two_r: float) -> tuple:
    # 2r beyond ``other``, running x back from the corner along it
    if other in (TOP, BOTTOM):
        y0, y1 = _span(other, cx, cy, two_r)
        x0, x1 = (cx - x, cx) if crossed == RIGHT else (cx, cx + x)
    else:
        x0, x1 = _span(other, cx, cy, two_r)
        y0, y1 = (cy - x, cy) if crossed == TOP else (cy, cy + x)
    return (x0, y0, x1, y1)


_CORNERS = ((LEFT, BOTTOM), (RIGHT, BOTTOM), (LEFT, TOP), (RIGHT, TOP))


def _corner_xy(b: Rect, corner: tuple[str, str]) -> tuple[float, float]:
    return (b.xmin if corner[0] == LEFT else b.xmax,
            b.ymin if corner[1] == BOTTOM else b.ymax)


def region_boxes(pos, predicted, b: Rect, p: SafetyParams,
                 world: Optional[Rect] = None) -> list[tuple[tuple, str]]:
    """Tuple-level core of :func:`build_neighbor_regions`."""
    px, py = pos
    dl, dr, db, dt = px - b.xmin, b.xmax - px, py - b.ymin, b.ymax - py
    d_border = min(dl, dr, db, dt)
    if d_border < 0:
        raise ValueError(f"point {tuple(pos)} lies outside {b.as_tuple()}")
    if d_border >= p.min_thres:
        return []
    x = region_extent(p)
    two_r = 2.0 * p.r
    raw: list[tuple[tuple, str]] = []

    exit_pt = polyline_exit_point([pos, *predicted[:2]], b)
    if exit_pt is not None:
        ex, ey = exit_pt
        crossed = edges_at(exit_pt, b)
        for e in crossed:
            raw.append((_side_box(b, e, ex, ey, x, x), "side"))
        for corner in _CORNERS:
            if corner[0] not in crossed and corner[1] not in crossed:
                continue
            cx, cy = _corner_xy(b, corner)
            if math.sqrt((ex - cx) ** 2 + (ey - cy) ** 2) > two_r:
                continue
            raw.append((_diagonal_box(corner, cx, cy, x), "corner-primary"))
            for e in corner:
                if e not in crossed:
                    other_side = corner[0] if e == corner[1] else corner[1]
                    raw.append((_lateral_box(other_side, e, cx, cy, x, two_r), "corner-extra"))
    else:
        edge = closest_edge(pos, b)
        raw.append((_side_box(b, edge, px, py, x, x), "side"))

    near = [e for e, d in ((LEFT, dl), (RIGHT, dr), (BOTTOM, db), (TOP, dt)) if d < x]
    for e in near:
        raw.append((_side_box(b, e, px, py, x, x), "side"))
    for corner in _CORNERS:
        if corner[0] in near and corner[1] in near:
            raw.append((_diagonal_box(corner, *_corner_xy(b, corner), x), "corner-primary"))

    out = []
    seen = set()
    if world is not None:
        wx0, wy0, wx1, wy1 = world.xmin, world.ymin, world.xmax, world.ymax
    for box, kind in raw:
        if world is not None:
            x0, y0, x1, y1 = box
            box = (wx0 if x0 < wx0 else x0, wy0 if y0 < wy0 else y0,
                   wx1 if x1 > wx1 else x1, wy1 if y1 > wy1 else y1)
            if not (box[0] < box[2] and box[1] < box[3]):
                continue
        if box in seen:
            continue
        seen.add(box)
        out.append((box, kind))
    return out


def build_neighbor_regions(robot, leaf, p: SafetyParams, world: Optional[Rect] = None) -> list[NeighborRegion]:
    """Search rectangles in adjacent quadrants for a robot near its leaf border.

    The primary side region (2x along the border, x deep) is centered where
    the next two predicted steps leave the leaf, or on the closest border
    point when they do not.  An exit within 2r of a corner adds the diagonal
    quadrant (x by x) and the lateral one (2r deep).  On top of those, every
    edge closer than x gets a side region centered on the robot's
    projection, and every corner with both edges closer than x gets a
    diagonal region: together these cover any robot that could reach
    collision range within one step.  Regions are clipped to ``world``.
    """
    b: Rect = leaf.bounds if isinstance(leaf, QuadNode) else leaf
    if not b.contains_closed(robot.pos):
        raise ValueError(f"robot at {tuple(robot.pos)} lies outside {b.as_tuple()}")
    return [NeighborRegion(Rect(*box), kind)
            for box, kind in region_boxes(robot.pos, robot.predicted, b, p, world)]


class Strategy:
    name = ""

    def __init__(self, params: SafetyParams, world: Rect, m: int = DEFAULT_CAPACITY,
                 depth_cap: int = DEFAULT_DEPTH_CAP):
        self.params = params
        self.world = world
        self.m = m
        self.depth_cap = depth_cap
        self.node_count = 0
        self.tree_updates = 0

    def reset(self, robots: Sequence) -> None:
        pass

    def step(self, t: int, robots: Sequence, metrics: RunMetrics) -> list[CollisionReport]:
        raise NotImplementedError


class PairwiseStrategy(Strategy):
    name = "pairwise"

    def step(self, t, robots, metrics):
        two_r = 2.0 * self.params.r
        lim = two_r * two_r
        reports = []
        n = len(robots)
        metrics.timers.start("T_c")
        for i in range(n):
            a = robots[i]
            ax, ay = a.pos
            for j in range(i + 1, n):
                b = robots[j]
                dx = ax - b.pos[0]
                dy = ay - b.pos[1]
                if dx * dx + dy * dy < lim:
                    reports.append(CollisionReport(t, pair_key(a.id, b.id), _ordered(a, b)))
        metrics.timers.stop("T_c")
        metrics.N_c += n * (n - 1) // 2
        return reports


class RQStrategy(Strategy):
    name = "rq"

    def step(self, t, robots, metrics):
        two_r = 2.0 * self.params.r
        lim = two_r * two_r
        reports = []
        checks = 0
        timers = metrics.timers
        timers.start("T_c")
        timers.start("T_q")
        tree = build_tree(self.world, ((rb.id, rb.pos) for rb in robots), self.m, self.depth_cap)
        timers.stop("T_q")
        by_id = {rb.id: rb for rb in robots}
        for leaf in tree.leaves():
            occ = leaf.occupants
            k = len(occ)
            for i in range(k):
                a = by_id[occ[i]]
                ax, ay = a.pos
                for j in range(i + 1, k):
                    b = by_id[occ[j]]
                    checks += 1
                    dx = ax - b.pos[0]
                    dy = ay - b.pos[1]
                    if dx * dx + dy * dy < lim:
                        reports.append(CollisionReport(t, pair_key(a.id, b.id), _ordered(a, b)))
        timers.stop("T_c")
        metrics.N_c += checks
        self.node_count = tree.node_count
        self.tree_updates = len(robots)
        return reports


class USQStrategy(Strategy):
    name = "usq"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.tree: Optional[QuadTree] = None
        self.by_id: dict = {}
        # parked robots keep asking for the same regions
        self._regions: dict = {}

    def reset(self, robots):
        self.tree = None
        self._regions = {}
        self.by_id = {rb.id: rb for rb in robots}
        if len(self.by_id) != len(robots):
            raise IndexCorruptionError("duplicate robot ids")
        for rb in robots:
            rb.num_skip = 0

    def _update_tree(self, robots) -> int:
        tree = self.tree
        by_id = self.by_id
        if tree is None:
            self.tree = tree = QuadTree(self.world, self.m, self.depth_cap)
            for rb in robots:
                rb.num_skip = 0
            pending = list(robots)
            for rb in pending:
                tree.insert(rb.id, rb.pos)
            return len(pending)
        pending = [rb for rb in robots if rb.num_skip == 0]
        i = 0
        while i < len(pending):
            rb = pending[i]
            i += 1
            try:
                moved = tree.update_position(rb.id, rb.pos)
            except KeyError:
                raise IndexCorruptionError(f"robot {rb.id!r} missing from tree") from None
            # a split re-files skipping robots by stale positions and shrinks
            # their leaf, so they must be refreshed and re-evaluated now
            for mid in moved:
                other = by_id[mid]
                if other.num_skip > 0:
                    other.num_skip = 0
                    pending.append(other)
        return len(pending)

    def step(self, t, robots, metrics):
        p = self.params
        two_r = 2.0 * p.r
        lim = two_r * two_r
        min_thres = p.min_thres
        by_id = self.by_id
        if len(by_id) != len(robots):
            raise IndexCorruptionError("robot list changed since reset()")
        timers = metrics.timers
        reports = []
        checks = 0
        checked = set()

        timers.start("T_c")
        timers.start("T_q")
        self.tree_updates = self._update_tree(robots)
        timers.stop("T_q")
        tree = self.tree
        index = tree.robot_index

        active = [rb for rb in robots if rb.num_skip == 0]

        # leaf checks: any occupant with a zero counter triggers the leaf
        seen_leaves = set()
        for rb in active:
            leaf = index[rb.id]
            if id(leaf) in seen_leaves:
                continue
            seen_leaves.add(id(leaf))
            occ = leaf.occupants
            k = len(occ)
            for i in range(k):
                a = by_id[occ[i]]
                ax, ay = a.pos
                for j in range(i + 1, k):
                    b = by_id[occ[j]]
                    key = pair_key(a.id, b.id)
                    checked.add(key)
                    checks += 1
                    dx = ax - b.pos[0]
                    dy = ay - b.pos[1]
                    if dx * dx + dy * dy < lim:
                        reports.append(CollisionReport(t, key, _ordered(a, b)))

        timers.start("T_n")
        cache = self._regions
        d_border = {}
        for rb in active:
            leaf = index[rb.id]
            ax, ay = rb.pos
            d = min(ax - leaf.x0, leaf.x1 - ax, ay - leaf.y0, leaf.y1 - ay)
            d_border[rb.id] = d
            if d >= min_thres:
                continue
            key = (rb.pos, tuple(rb.predicted[:2]), leaf.bounds)
            cached = cache.get(rb.id)
            if cached is not None and cached[0] == key:
                regions = cached[1]
            else:
                boxes = [box for box, _ in region_boxes(rb.pos, rb.predicted, leaf.bounds, p, self.world)]
                regions = tree.prepare_boxes(boxes)
                cache[rb.id] = (key, regions)
            for oid in tree.query_prepared(regions):
                if oid == rb.id:
                    continue
                key = pair_key(rb.id, oid)
                if key in checked:
                    continue
                checked.add(key)
                checks += 1
                b = by_id[oid]
                dx = ax - b.pos[0]
                dy = ay - b.pos[1]
                if dx * dx + dy * dy < lim:
                    reports.append(CollisionReport(t, key, _ordered(rb, b)))
        timers.stop("T_n")

        # same arithmetic as compute_skip, inlined for the hot loop
        mdt = p.max_dist_traveled
        if mdt <= 0:
            raise ValueError("compute_skip needs max_dist_traveled > 0")
        floor = math.floor
        reach = two_r + p.epsilon
        for rb in robots:
            if rb.num_skip:
                rb.num_skip -= 1
                continue
            ax, ay = rb.pos
            k = floor((d_border[rb.id] - min_thres) / mdt - _FLOOR_GUARD)
            if k > 0:
                d2 = math.inf
                for oid in index[rb.id].occupants:
                    if oid != rb.id:
                        bx, by = by_id[oid].pos
                        dd = (ax - bx) * (ax - bx) + (ay - by) * (ay - by)
                        if dd < d2:
                            d2 = dd
                if d2 != math.inf:
                    k = min(k, floor((math.sqrt(d2) - reach) / (2.0 * mdt) - _FLOOR_GUARD))
            rb.num_skip = k if k > 0 else 0
        timers.stop("T_c")

        metrics.N_c += checks
        self.node_count = tree.node_count
        return reports


def _ordered(a, b) -> tuple:
    return (a.pos, b.pos) if a.id < b.id else (b.pos, a.pos)


_STRATEGIES = {"pairwise": PairwiseStrategy, "rq": RQStrategy, "usq": USQStrategy}


def make_strategy(name: str, params: SafetyParams, world: Rect, m: int = DEFAULT_CAPACITY,
                  depth_cap: int = DEFAULT_DEPTH_CAP) -> Strategy:
    try:
        cls = _STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}") from None
    return cls(params, world, m, depth_cap)


@dataclass(frozen=True)
class TrialConfig:
    dt: float = sim.DT
    v_max: float = sim.V_MAX
    radius: float = sim.RADIUS
    epsilon: float = sim.EPSILON
    turn_rate: float = sim.TURN_RATE
    goal_tol: float = sim.GOAL_TOL
    m: int = DEFAULT_CAPACITY
    depth_cap: int = DEFAULT_DEPTH_CAP

    @property
    def max_dist_traveled(self) -> float:
        return self.v_max * self.dt

    @property
    def safety(self) -> SafetyParams:
        return SafetyParams(self.radius, self.max_dist_traveled, self.epsilon)


@dataclass
class TrialResult:
    metrics: RunMetrics
    reports: list[CollisionReport]
    episodes: list[CollisionEpisode]
    status: str  # "ok" | "step_limit"
    oracle_history: list[set] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


StepHook = Callable[[int, Sequence, Strategy, int, list], None]


def run_trial(env: sim.Environment, strategy, config: Optional[TrialConfig] = None,
              robots: Optional[list] = None, on_step: Optional[StepHook] = None) -> TrialResult:
    """Drive one trial to completion (or the step limit).

    ``strategy`` is a name or a :class:`Strategy`.  The oracle sweep runs
    every step outside all timers.  ``on_step(t, robots, strategy,
    checks_this_step, reports_this_step)`` is called after each step.
    """
    cfg = config or TrialConfig()
    if robots is None:
        robots = sim.gen_environment(env, cfg.radius)
    if isinstance(strategy, str):
        strategy = make_strategy(strategy, cfg.safety, env.world, cfg.m, cfg.depth_cap)
    metrics = RunMetrics(strategy=strategy.name, env=env.name, n_robots=len(robots), seed=env.seed)
    strategy.reset(robots)
    mdt = cfg.max_dist_traveled

    reports: list[CollisionReport] = []
    history: list[set] = []
    status = "ok"
    t = 0
    while not sim.all_reached(robots, cfg.goal_tol):
        if t >= env.step_limit:
            status = "step_limit"
            break
        t += 1
        for rb in robots:
            before = rb.pos
            sim.controller_step(rb, cfg.dt, cfg.v_max, cfg.turn_rate, cfg.goal_tol)
            assert distance(before, rb.pos) <= mdt + 1e-9, "robot exceeded max_dist_traveled"
        n_before = metrics.N_c
        step_reports = strategy.step(t, robots, metrics)
        reports.extend(step_reports)
        history.append(oracle_sweep(robots, cfg.radius))
        if on_step is not None:
            on_step(t, robots, strategy, metrics.N_c - n_before, step_reports)

    metrics.timesteps = t
    episodes = assemble_episodes(history)
    metrics.N_d, metrics.N_m = score_detection(episodes, reports)
    return TrialResult(metrics, reports, episodes, status, history)
