"""Counters, timers and missed-collision accounting for one trial.

Collisions are counted as *episodes*: a maximal run of consecutive
timesteps during which a pair overlaps.  A strategy detects an episode if
it reports the pair at least once inside that run.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

from usq import kernels

CSV_COLUMNS = ("strategy", "env", "n_robots", "seed", "timesteps",
               "T_q", "T_n", "T_c", "N_c", "N_d", "N_m")
TIMER_COLUMNS = ("T_q", "T_n", "T_c")
COUNT_COLUMNS = tuple(c for c in CSV_COLUMNS if c not in TIMER_COLUMNS)


class TimerError(RuntimeError):
    pass


class Timers:
    """Nested wall-clock scopes.  T_q and T_n may only open inside T_c."""

    NAMES = ("T_c", "T_q", "T_n")

    def __init__(self, metrics: "RunMetrics"):
        self._metrics = metrics
        self._open: dict[str, float] = {}
        self.clock = time.perf_counter

    def start(self, name: str) -> None:
        if name not in self.NAMES:
            raise TimerError(f"unknown timer {name!r}")
        if name in self._open:
            raise TimerError(f"timer {name} already open")
        if name != "T_c" and "T_c" not in self._open:
            raise TimerError(f"{name} must be opened inside T_c")
        self._open[name] = self.clock()

    def stop(self, name: str) -> float:
        if name not in self._open:
            raise TimerError(f"timer {name} is not open")
        if name == "T_c" and len(self._open) > 1:
            raise TimerError(f"T_c closed while {sorted(set(self._open) - {'T_c'})} still open")
        t0 = self._open.pop(name)
        dt = self.clock() - t0
        setattr(self._metrics, name, getattr(self._metrics, name) + dt)
        return dt

    def scope(self, name: str) -> "_Scope":
        return _Scope(self, name)

    @property
    def balanced(self) -> bool:
        return not self._open


class _Scope:
    __slots__ = ("timers", "name")

    def __init__(self, timers: Timers, name: str):
        self.timers = timers
        self.name = name

    def __enter__(self):
        self.timers.start(self.name)
        return self

    def __exit__(self, *exc):
        self.timers.stop(self.name)
        return False


@dataclass
class RunMetrics:
    strategy: str = ""
    env: str = ""
    n_robots: int = 0
    seed: int = 0
    timesteps: int = 0
    T_q: float = 0.0
    T_n: float = 0.0
    T_c: float = 0.0
    N_c: int = 0
    N_d: int = 0
    N_m: int = 0
    timers: Timers = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.timers = Timers(self)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("timers", None)
        return {k: d[k] for k in CSV_COLUMNS}

    def formatted_row(self) -> list[str]:
        out = []
        for k, v in self.row().items():
            out.append(f"{v:.6f}" if k in TIMER_COLUMNS else str(v))
        return out

    def to_json(self) -> str:
        return json.dumps(self.row())

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(self.formatted_row())
        return buf.getvalue()


def csv_header() -> str:
    return ",".join(CSV_COLUMNS) + "\n"


class CollisionEpisode(NamedTuple):
    pair: tuple
    start_step: int
    end_step: int


def pair_key(a, b) -> tuple:
    return (a, b) if a < b else (b, a)


def oracle_sweep(robots: Sequence, radius: float) -> set[tuple]:
    """Every overlapping pair at this instant, as sorted id tuples."""
    xs = [rb.pos[0] for rb in robots]
    ys = [rb.pos[1] for rb in robots]
    hits = kernels.colliding_pairs(xs, ys, 2.0 * radius)
    return {pair_key(robots[i].id, robots[j].id) for i, j in hits}


def assemble_episodes(history: Sequence[Iterable[tuple]], first_step: int = 1) -> list[CollisionEpisode]:
    """Turn per-step colliding-pair sets into maximal contiguous episodes.

    ``history[k]`` holds the pairs colliding at timestep ``first_step + k``.
    """
    open_eps: dict[tuple, int] = {}
    episodes: list[CollisionEpisode] = []
    last = first_step - 1
    for k, pairs in enumerate(history):
        t = first_step + k
        pairs = set(pairs)
        for pair in [p for p in open_eps if p not in pairs]:
            episodes.append(CollisionEpisode(pair, open_eps.pop(pair), t - 1))
        for pair in pairs:
            open_eps.setdefault(pair, t)
        last = t
    for pair, start in open_eps.items():
        episodes.append(CollisionEpisode(pair, start, last))
    episodes.sort(key=lambda e: (e.start_step, e.pair))
    return episodes


def score_detection(episodes: Sequence[CollisionEpisode], reports: Iterable) -> tuple[int, int]:
    """(N_d, N_m) for one strategy's reports against the oracle episodes."""
    seen: dict[tuple, list[int]] = {}
    for rep in reports:
        seen.setdefault(tuple(rep.pair), []).append(rep.timestep)
    detected = 0
    for ep in episodes:
        steps = seen.get(ep.pair, ())
        if any(ep.start_step <= t <= ep.end_step for t in steps):
            detected += 1
    return detected, len(episodes) - detected
