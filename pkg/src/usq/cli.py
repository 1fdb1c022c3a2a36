"""Benchmark harness: run trial suites, summarize speed-ups, trace single trials.

Config files are JSON::

    {
      "environments": [{"name": "sparse", "n_robots": 20},
                       {"name": "circle", "n_robots": 20, "trials": 1}],
      "strategies": ["pairwise", "rq", "usq"],
      "trials_per_case": 10,
      "base_seed": 0,
      "safety": {"r": 0.5, "epsilon": 0.05},
      "v_max": 2.0,
      "dt": 0.1,
      "output": "results/suite"
    }

Every field can be overridden on the command line with ``--key=value``
(``--safety.epsilon=0.1``); values are read as JSON when they parse, as
plain strings otherwise.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from usq import sim
from usq.kernels import BACKEND
from usq.metrics import CSV_COLUMNS, TIMER_COLUMNS
from usq.quadtree import DEFAULT_CAPACITY, DEFAULT_DEPTH_CAP
from usq.strategies import STRATEGY_NAMES, TrialConfig, run_trial

AGG_METRICS = ("timesteps", "T_q", "T_n", "T_c", "N_c", "N_d", "N_m")
SPEEDUP_COLUMNS = ("env", "n_robots", "trials", "T_c_rq", "T_c_usq", "speedup", "speedup_std")


class ConfigError(ValueError):
    """Bad config file or override; the message names the offending field."""


@dataclass
class EnvSpec:
    name: str
    n_robots: int
    trials: Optional[int] = None
    step_limit: Optional[int] = None


@dataclass
class SuiteConfig:
    environments: list[EnvSpec]
    strategies: list[str] = field(default_factory=lambda: list(STRATEGY_NAMES))
    trials_per_case: int = 10
    base_seed: int = 0
    safety: dict = field(default_factory=lambda: {"r": sim.RADIUS, "epsilon": sim.EPSILON})
    v_max: float = sim.V_MAX
    dt: float = sim.DT
    turn_rate: float = sim.TURN_RATE
    goal_tol: float = sim.GOAL_TOL
    m: int = DEFAULT_CAPACITY
    depth_cap: int = DEFAULT_DEPTH_CAP
    step_limit: int = sim.STEP_LIMIT
    output: str = "results/suite"

    def trial_config(self) -> TrialConfig:
        return TrialConfig(dt=self.dt, v_max=self.v_max, radius=self.safety["r"],
                           epsilon=self.safety["epsilon"], turn_rate=self.turn_rate,
                           goal_tol=self.goal_tol, m=self.m, depth_cap=self.depth_cap)

    def cells(self) -> list[tuple[EnvSpec, int]]:
        """(environment, trial index) in run order."""
        out = []
        for env in self.environments:
            n = env.trials if env.trials is not None else self.trials_per_case
            out.extend((env, k) for k in range(n))
        return out


def default_config_dict() -> dict:
    envs = [{"name": name, "n_robots": n} for name in ("sparse", "dense") for n in (5, 20, 50)]
    # the circle layout has no randomness, one trial per size is enough
    envs += [{"name": "circle", "n_robots": n, "trials": 1} for n in (5, 20, 50)]
    return {"environments": envs}


_TOP_KEYS = {f for f in SuiteConfig.__dataclass_fields__}
_ENV_KEYS = {f for f in EnvSpec.__dataclass_fields__}
_SAFETY_KEYS = {"r", "epsilon"}


def _require(cond: bool, fieldname: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{fieldname}: {msg}")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def parse_config(raw: dict) -> SuiteConfig:
    """Validate a config dict and build a SuiteConfig."""
    _require(isinstance(raw, dict), "config", "top level must be a JSON object")
    for key in raw:
        _require(key in _TOP_KEYS, key, "unknown field")
    raw = {**default_config_dict(), **raw}

    envs_raw = raw["environments"]
    _require(isinstance(envs_raw, list) and envs_raw, "environments", "must be a non-empty list")
    envs = []
    for i, e in enumerate(envs_raw):
        where = f"environments[{i}]"
        _require(isinstance(e, dict), where, "must be an object")
        for key in e:
            _require(key in _ENV_KEYS, f"{where}.{key}", "unknown field")
        _require(e.get("name") in sim.ENV_NAMES, f"{where}.name",
                 f"must be one of {list(sim.ENV_NAMES)}, got {e.get('name')!r}")
        n = e.get("n_robots")
        _require(_is_int(n) and n >= 1, f"{where}.n_robots", f"must be an integer >= 1, got {n!r}")
        for key in ("trials", "step_limit"):
            v = e.get(key)
            _require(v is None or (_is_int(v) and v >= 1), f"{where}.{key}",
                     f"must be an integer >= 1, got {v!r}")
        envs.append(EnvSpec(e["name"], n, e.get("trials"), e.get("step_limit")))

    strategies = raw.get("strategies", list(STRATEGY_NAMES))
    _require(isinstance(strategies, list) and strategies, "strategies", "must be a non-empty list")
    for s in strategies:
        _require(s in STRATEGY_NAMES, "strategies",
                 f"unknown strategy {s!r}; expected one of {list(STRATEGY_NAMES)}")
    _require(len(set(strategies)) == len(strategies), "strategies", "duplicate entries")

    safety = raw.get("safety", {})
    _require(isinstance(safety, dict), "safety", "must be an object")
    for key in safety:
        _require(key in _SAFETY_KEYS, f"safety.{key}",
                 "unknown field (max_dist_traveled is derived as v_max * dt)")
    safety = {"r": sim.RADIUS, "epsilon": sim.EPSILON, **safety}
    _require(_is_num(safety["r"]) and safety["r"] > 0, "safety.r", "must be a number > 0")
    _require(_is_num(safety["epsilon"]) and safety["epsilon"] >= 0, "safety.epsilon",
             "must be a number >= 0")

    kwargs = {"environments": envs, "strategies": list(strategies), "safety": safety}
    for key in ("trials_per_case", "m", "depth_cap", "step_limit"):
        if key in raw:
            v = raw[key]
            _require(_is_int(v) and v >= 1, key, f"must be an integer >= 1, got {v!r}")
            kwargs[key] = v
    if "base_seed" in raw:
        _require(_is_int(raw["base_seed"]), "base_seed", "must be an integer")
        kwargs["base_seed"] = raw["base_seed"]
    for key in ("v_max", "dt", "turn_rate", "goal_tol"):
        if key in raw:
            _require(_is_num(raw[key]) and raw[key] > 0, key, f"must be a number > 0, got {raw[key]!r}")
            kwargs[key] = float(raw[key])
    if "output" in raw:
        _require(isinstance(raw["output"], str) and raw["output"], "output", "must be a non-empty string")
        kwargs["output"] = raw["output"]
    return SuiteConfig(**kwargs)


def load_config_dict(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: {path} is not valid JSON ({e})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    return data


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, extra: list[str]) -> dict:
    """Apply ``--key=value`` / ``--a.b=value`` overrides to a config dict."""
    out = copy.deepcopy(raw)
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"{item}: overrides must look like --key=value")
        key, _, value = item[2:].partition("=")
        parts = key.replace("-", "_").split(".")
        if parts[0] not in _TOP_KEYS:
            raise ConfigError(f"{key}: unknown field")
        target = out
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"{key}: {part} is not an object")
        target[parts[-1]] = _parse_value(value)
    return out


def build_config(args, extra: list[str]) -> SuiteConfig:
    raw = apply_overrides(load_config_dict(args.config), extra)
    if args.strategy:
        raw["strategies"] = args.strategy.split(",")
    if args.seed is not None:
        raw["base_seed"] = args.seed
    if args.trials is not None:
        raw["trials_per_case"] = args.trials
        envs = raw.get("environments")
        if isinstance(envs, list):
            raw["environments"] = [{k: v for k, v in e.items() if k != "trials"}
                                   if isinstance(e, dict) else e for e in envs]
    if args.output:
        raw["output"] = args.output
    if args.env or args.robots is not None:
        envs = raw.get("environments") or default_config_dict()["environments"]
        if not isinstance(envs, list):
            raise ConfigError("environments: must be a non-empty list")
        if args.env:
            envs = [e for e in envs if isinstance(e, dict) and e.get("name") == args.env]
            if not envs:
                envs = [{"name": args.env, "n_robots": n} for n in (5, 20, 50)]
        if args.robots is not None:
            names = list(dict.fromkeys(e.get("name") for e in envs if isinstance(e, dict)))
            envs = [{"name": name, "n_robots": args.robots} for name in names]
        raw["environments"] = envs
    return parse_config(raw)


# -- trial execution -------------------------------------------------------

def _run_job(job: tuple) -> dict:
    env_spec, strategy, seed, step_limit, cfg = job
    try:
        env = sim.Environment(env_spec.name, env_spec.n_robots, seed=seed, step_limit=step_limit)
        res = run_trial(env, strategy, cfg)
        return {"row": res.metrics.row(), "status": res.status}
    except Exception as e:  # recorded per trial, the suite keeps going
        return {"row": None, "status": "error", "error": f"{type(e).__name__}: {e}",
                "strategy": strategy, "env": env_spec.name, "n_robots": env_spec.n_robots,
                "seed": seed}


def run_suite(cfg: SuiteConfig, serial: bool = False, workers: Optional[int] = None) -> list[dict]:
    """Every (environment, trial, strategy) cell; results in deterministic order."""
    tcfg = cfg.trial_config()
    jobs = []
    for env_spec, k in cfg.cells():
        limit = env_spec.step_limit or cfg.step_limit
        for strategy in cfg.strategies:
            jobs.append((env_spec, strategy, cfg.base_seed + k, limit, tcfg))
    workers = workers or os.cpu_count() or 1
    if serial or workers == 1 or len(jobs) == 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def format_row(row: dict) -> list[str]:
    return [f"{row[k]:.6f}" if k in TIMER_COLUMNS else str(row[k]) for k in CSV_COLUMNS]


def write_trials_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow(format_row(row))


def read_trials_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: header does not match {','.join(CSV_COLUMNS)}")
        rows = []
        for rec in reader:
            row = {}
            for k in CSV_COLUMNS:
                if k in ("strategy", "env"):
                    row[k] = rec[k]
                elif k in TIMER_COLUMNS:
                    row[k] = float(rec[k])
                else:
                    row[k] = int(rec[k])
            rows.append(row)
    return rows


def _std(values: list[float]) -> float:
    return statistics.stdev(values) if len(values) > 1 else 0.0


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation per (strategy, env, n_robots) cell."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["strategy"], row["env"], row["n_robots"]), []).append(row)
    out = []
    for (strategy, env, n), grp in groups.items():
        rec = {"strategy": strategy, "env": env, "n_robots": n, "trials": len(grp)}
        for k in AGG_METRICS:
            vals = [float(r[k]) for r in grp]
            rec[f"{k}_mean"] = statistics.fmean(vals)
            rec[f"{k}_std"] = _std(vals)
        out.append(rec)
    return out


def agg_columns() -> list[str]:
    cols = ["strategy", "env", "n_robots", "trials"]
    for k in AGG_METRICS:
        cols += [f"{k}_mean", f"{k}_std"]
    return cols


def write_csv(path: Path, columns, records: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(rec[c]) for c in columns])


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def _prefix_path(prefix: str, suffix: str) -> Path:
    path = Path(f"{prefix}{suffix}")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- speed-up --------------------------------------------------------------

def speedup_ratio(t_rq: float, t_usq: float) -> float:
    if t_usq <= 0:
        raise ValueError("T_c(usq) must be > 0")
    return t_rq / t_usq


def speedup_table(rows: list[dict]) -> list[dict]:
    """Mean T_c(rq) / mean T_c(usq) per (env, n_robots) cell.

    The spread is the sample standard deviation of the per-trial ratios,
    pairing trials by seed.
    """
    cells: dict[tuple, dict[str, dict[int, float]]] = {}
    for row in rows:
        if row["strategy"] not in ("rq", "usq"):
            continue
        cell = cells.setdefault((row["env"], row["n_robots"]), {"rq": {}, "usq": {}})
        cell[row["strategy"]][row["seed"]] = float(row["T_c"])
    if not cells:
        raise ValueError("no rq or usq rows to compare")
    out = []
    for (env, n), by in cells.items():
        rq, usq = by["rq"], by["usq"]
        if not rq or not usq or set(rq) != set(usq):
            missing = "usq" if set(rq) - set(usq) or not usq else "rq"
            raise ValueError(f"cell {env}/{n}: missing {missing} rows for some seeds")
        seeds = sorted(rq)
        ratios = [speedup_ratio(rq[s], usq[s]) for s in seeds]
        mean_rq = statistics.fmean(rq[s] for s in seeds)
        mean_usq = statistics.fmean(usq[s] for s in seeds)
        out.append({"env": env, "n_robots": n, "trials": len(seeds), "T_c_rq": mean_rq,
                    "T_c_usq": mean_usq, "speedup": speedup_ratio(mean_rq, mean_usq),
                    "speedup_std": _std(ratios)})
    return out


# -- trace -----------------------------------------------------------------

def trace_trial(env: sim.Environment, strategy: str, cfg: TrialConfig, sink) -> dict:
    """Write one JSON line per step to ``sink``; returns the trial summary."""

    def on_step(t, robots, strat, checks, reports):
        rec = {
            "t": t,
            "positions": [[rb.pos[0], rb.pos[1]] for rb in robots],
            "node_count": strat.node_count,
            "tree_updates": strat.tree_updates,
            "skip": [rb.num_skip for rb in robots],
            "checks": checks,
            "reports": [list(rep.pair) for rep in reports],
        }
        sink.write(json.dumps(rec) + "\n")

    res = run_trial(env, strategy, cfg, on_step=on_step)
    return {"status": res.status, **res.metrics.row()}


# -- commands --------------------------------------------------------------

def cmd_run(args, extra) -> int:
    cfg = build_config(args, extra)
    results = run_suite(cfg, serial=args.serial, workers=args.workers)
    rows = [r["row"] for r in results if r["row"] is not None]

    trials_path = _prefix_path(cfg.output, "_trials.csv")
    write_trials_csv(trials_path, rows)
    # aggregate from the rounded values actually written
    agg = aggregate(read_trials_csv(trials_path))
    write_csv(_prefix_path(cfg.output, "_agg.csv"), agg_columns(), agg)

    trials = []
    for r in results:
        if r["row"] is not None:
            rec = {k: r["row"][k] for k in ("strategy", "env", "n_robots", "seed")}
            rec["status"] = r["status"]
        else:
            rec = {k: r[k] for k in ("strategy", "env", "n_robots", "seed")}
            rec.update(status="error", error=r["error"])
        trials.append(rec)
    failed = [t for t in trials if t["status"] != "ok"]
    summary = {
        "config": {**asdict(cfg)},
        "backend": BACKEND,
        "n_trials": len(trials),
        "n_failed": len(failed),
        "trials": trials,
        "aggregate": agg,
    }
    with open(_prefix_path(cfg.output, "_summary.json"), "w") as f:
        json.dump(summary, f, indent=2)

    print(f"{len(trials)} trials, {len(failed)} not ok; results in {cfg.output}_*")
    for t in failed:
        print(f"  {t['strategy']} {t['env']} n={t['n_robots']} seed={t['seed']}: "
              f"{t.get('error', t['status'])}", file=sys.stderr)
    return 1 if failed else 0


def cmd_speedup(args, extra) -> int:
    if extra:
        raise ConfigError(f"{extra[0]}: overrides are not used by speedup")
    rows = []
    for path in args.results:
        rows.extend(read_trials_csv(path))
    table = speedup_table(rows)
    if args.output:
        path = _prefix_path(args.output, "_speedup.csv")
        write_csv(path, SPEEDUP_COLUMNS, table)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(SPEEDUP_COLUMNS)
    for rec in table:
        w.writerow([_fmt(rec[c]) for c in SPEEDUP_COLUMNS])
    return 0


def cmd_trace(args, extra) -> int:
    cfg = build_config(args, extra)
    if len(cfg.environments) != 1 or len(cfg.strategies) != 1:
        raise ConfigError("environments/strategies: trace needs exactly one of each "
                          "(use --env, --robots and --strategy)")
    spec = cfg.environments[0]
    env = sim.Environment(spec.name, spec.n_robots, seed=cfg.base_seed,
                          step_limit=spec.step_limit or cfg.step_limit)
    if args.output == "-":
        summary = trace_trial(env, cfg.strategies[0], cfg.trial_config(), sys.stdout)
    else:
        path = _prefix_path(cfg.output, "_trace.jsonl")
        with open(path, "w") as f:
            summary = trace_trial(env, cfg.strategies[0], cfg.trial_config(), f)
        print(json.dumps(summary))
    return 0 if summary["status"] == "ok" else 1


def _add_suite_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON suite config (defaults built in)")
    p.add_argument("--strategy", help="strategy name, or a comma-separated list")
    p.add_argument("--env", choices=sim.ENV_NAMES, help="restrict to one environment")
    p.add_argument("--robots", type=int, help="robot count for every selected environment")
    p.add_argument("--seed", type=int, help="base seed; trial k uses seed + k")
    p.add_argument("--trials", type=int, help="trials per case")
    p.add_argument("--output", help="output file prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usq-bench", allow_abbrev=False,
        description="Quad-tree collision checking benchmark. Extra --key=value flags override config fields.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a trial suite", allow_abbrev=False)
    _add_suite_args(p_run)
    p_run.add_argument("--serial", action="store_true", help="run trials one at a time (for timing)")
    p_run.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    p_run.set_defaults(func=cmd_run)

    p_sp = sub.add_parser("speedup", help="T_c(rq) / T_c(usq) per cell from per-trial CSVs",
                          allow_abbrev=False)
    p_sp.add_argument("results", nargs="+", help="<prefix>_trials.csv files")
    p_sp.add_argument("--output", help="also write <prefix>_speedup.csv")
    p_sp.set_defaults(func=cmd_speedup)

    p_tr = sub.add_parser("trace", help="per-step JSON-lines log of one trial", allow_abbrev=False)
    _add_suite_args(p_tr)
    p_tr.set_defaults(func=cmd_trace)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return args.func(args, extra)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
