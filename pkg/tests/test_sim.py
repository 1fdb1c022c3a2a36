import math
import random

import pytest

from usq.geometry import Rect, Vec2, distance
from usq.sim import (
    CIRCLE_WORLD,
    Environment,
    Robot,
    all_reached,
    controller_step,
    gen_environment,
    predict,
)


def test_straight_line_step():
    rb = Robot(0, Vec2(0, 0), Vec2(10, 0), heading=0.0)
    controller_step(rb, dt=0.1, v_max=2.0)
    assert rb.pos == pytest.approx((0.2, 0.0))
    assert rb.speed == pytest.approx(2.0)
    assert not rb.reached


def test_terminal_step_lands_on_goal():
    rb = Robot(0, Vec2(0, 0), Vec2(0.15, 0), heading=0.0)
    controller_step(rb, dt=0.1, v_max=2.0)
    assert rb.pos == (0.15, 0)
    assert rb.reached and rb.speed == 0.0
    # reached robots stay put
    controller_step(rb)
    assert rb.pos == (0.15, 0)
    assert rb.predicted == [rb.pos, rb.pos]


def test_displacement_bound_fuzz():
    rng = random.Random(0)
    for _ in range(10_000):
        rb = Robot(0, Vec2(rng.uniform(-50, 50), rng.uniform(-50, 50)),
                   Vec2(rng.uniform(-50, 50), rng.uniform(-50, 50)),
                   heading=rng.uniform(-math.pi, math.pi))
        v_max = rng.uniform(0.1, 5)
        dt = rng.uniform(0.01, 0.5)
        before = rb.pos
        controller_step(rb, dt=dt, v_max=v_max)
        assert distance(before, rb.pos) <= v_max * dt + 1e-9
        assert rb.speed <= v_max + 1e-12


def test_prediction_matches_next_steps():
    rb = Robot(0, Vec2(0, 0), Vec2(0, 10), heading=0.0)
    rb.predicted = predict(rb)
    p1, p2 = rb.predicted
    controller_step(rb)
    assert rb.pos == p1
    controller_step(rb)
    assert rb.pos == p2


def test_turn_rate_limits_heading_change():
    rb = Robot(0, Vec2(0, 0), Vec2(-10, 0), heading=0.0)
    controller_step(rb, dt=0.1, turn_rate=math.pi)
    assert abs(rb.heading) == pytest.approx(0.1 * math.pi)


def test_circle_layout():
    robots = gen_environment(Environment("circle", 4))
    starts = [tuple(round(c, 9) for c in rb.pos) for rb in robots]
    assert starts == [(150, 0), (0, 150), (-150, 0), (0, -150)]
    assert robots[1].goal == pytest.approx((0, -150))
    assert Environment("circle", 4).world == CIRCLE_WORLD


def test_sampling_is_deterministic():
    a = gen_environment(Environment("sparse", 5, seed=42))
    b = gen_environment(Environment("sparse", 5, seed=42))
    assert [(r.pos, r.goal) for r in a] == [(r.pos, r.goal) for r in b]
    c = gen_environment(Environment("sparse", 5, seed=43))
    assert [r.pos for r in a] != [r.pos for r in c]


def test_dense_starts_are_separated_and_inside():
    env = Environment("dense", 50, seed=0)
    robots = gen_environment(env)
    for i, a in enumerate(robots):
        assert env.world.contains(a.pos) and env.world.contains(a.goal)
        for b in robots[i + 1:]:
            assert distance(a.pos, b.pos) > 2 * a.radius


def test_crowded_world_raises():
    env = Environment("dense", 50, seed=0, world=Rect(0, 0, 3, 3))
    with pytest.raises(RuntimeError, match="too crowded"):
        gen_environment(env)


def test_environment_validation():
    with pytest.raises(ValueError):
        Environment("forest", 5)
    with pytest.raises(ValueError):
        Environment("sparse", -1)


def test_all_reached():
    at_goal = Robot(0, Vec2(1, 1), Vec2(1, 1))
    away = Robot(1, Vec2(0, 0), Vec2(5, 0))
    assert all_reached([at_goal])
    assert not all_reached([at_goal, away])
    assert all_reached([])
