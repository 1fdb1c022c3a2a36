import json
import time

import pytest

from oracles import brute_pairs
from scenarios import bot
from usq.metrics import (
    CSV_COLUMNS,
    CollisionEpisode,
    RunMetrics,
    TimerError,
    assemble_episodes,
    csv_header,
    oracle_sweep,
    score_detection,
)
from usq.strategies import CollisionReport


def test_oracle_sweep_examples():
    assert oracle_sweep([bot(0, 0, 0), bot(1, 5, 0)], 0.5) == set()
    assert oracle_sweep([bot(3, 0, 0), bot(1, 0.5, 0), bot(2, 9, 9)], 0.5) == {(1, 3)}


def test_oracle_sweep_matches_brute_force():
    import random
    rng = random.Random(2)
    for _ in range(50):
        pts = [(rng.uniform(0, 10), rng.uniform(0, 10)) for _ in range(40)]
        robots = [bot(i, x, y) for i, (x, y) in enumerate(pts)]
        assert oracle_sweep(robots, 0.5) == brute_pairs(pts, 0.5)


def test_episodes():
    pair = (0, 1)
    hist = [set() for _ in range(12)]
    for t in (5, 6, 7, 9, 10):
        hist[t - 1].add(pair)
    eps = assemble_episodes(hist)
    assert eps == [CollisionEpisode(pair, 5, 7), CollisionEpisode(pair, 9, 10)]
    assert assemble_episodes([set(), set()]) == []
    # an episode still open at the end closes at the last step
    assert assemble_episodes([{pair}, {pair}]) == [CollisionEpisode(pair, 1, 2)]


def test_score_detection():
    eps = [CollisionEpisode((0, 1), 5, 7), CollisionEpisode((0, 1), 9, 10), CollisionEpisode((2, 3), 1, 1)]
    reports = [CollisionReport(6, (0, 1), ()), CollisionReport(8, (0, 1), ())]
    assert score_detection(eps, reports) == (1, 2)
    every = [CollisionReport(t, e.pair, ()) for e in eps for t in range(e.start_step, e.end_step + 1)]
    assert score_detection(eps, every) == (3, 0)


def test_timer_nesting():
    m = RunMetrics()
    with pytest.raises(TimerError):
        m.timers.start("T_q")
    m.timers.start("T_c")
    with m.timers.scope("T_q"):
        time.sleep(0.001)
    with pytest.raises(TimerError):
        m.timers.start("T_c")
    m.timers.start("T_n")
    with pytest.raises(TimerError):
        m.timers.stop("T_c")
    m.timers.stop("T_n")
    m.timers.stop("T_c")
    assert m.timers.balanced
    assert m.T_c >= m.T_q + m.T_n
    assert m.T_q > 0
    with pytest.raises(TimerError):
        m.timers.stop("T_q")
    with pytest.raises(TimerError):
        m.timers.start("T_x")


def test_row_serialization():
    m = RunMetrics(strategy="usq", env="dense", n_robots=5, seed=3, timesteps=10, T_c=0.5, N_c=7)
    assert list(m.row()) == list(CSV_COLUMNS)
    assert csv_header() == "strategy,env,n_robots,seed,timesteps,T_q,T_n,T_c,N_c,N_d,N_m\n"
    assert m.to_csv_row() == "usq,dense,5,3,10,0.000000,0.000000,0.500000,7,0,0\n"
    assert json.loads(m.to_json())["N_c"] == 7
