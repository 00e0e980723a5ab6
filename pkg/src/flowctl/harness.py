"""Experiment orchestration: run profiles, config files, CSV artifacts.

Three run modes share one pipeline:

* ``fixed``      — pre-timed signal plan cycling the four phases;
* ``rl``         — policy-gradient training of the signal controller;
* ``rl_reroute`` — training plus congestion-triggered rerouting at every
                   detector window.

Every run consumes per-episode demand schedules derived deterministically
from one base seed, writes schema-stable CSV artifacts atomically, and is
reproducible byte-for-byte.  Sweeps fan the rl mode out over declared value
sets for the discount factor, network width, or network depth, in parallel
processes, and rank the values by the final-quarter reward.
"""

from __future__ import annotations

import dataclasses
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .neuralnet import PolicyNetwork, save_network
from .pgagent import (
    EpisodeMetrics,
    TrainConfig,
    drive_episode,
    fixed_cycle_policy,
    run_training,
)
from .rerouter import CongestionMonitor, RerouteDecision
from .roadnet import (
    RoadNetwork,
    build_default_network,
    build_network,
    free_flow_weights,
    shortest_route,
)
from .simcore import (
    ARM_ORDER,
    SIM_TIME_CAP,
    VEHICLE_MAX_SPEED,
    Simulation,
    SpawnSpec,
    spawn_schedule,
)

SCHEDULE_STREAM = 2  # seed-sequence lane for per-episode demand schedules

MODES = ("fixed", "rl", "rl_reroute")

SWEEP_AXES: dict[str, tuple] = {
    "gamma": (0.3, 0.5, 0.7, 0.9),
    "width": (200, 400, 600),
    "depth": (3, 5, 8),
}
# Externally claimed best value per axis; reported in sweep summaries as a
# flag on the row, never asserted.
REFERENCE_CLAIMS = {"gamma": 0.5, "depth": 5}

METRICS_HEADER = "episode,cum_delay_s,avg_queue_len,cum_negative_reward,sim_time_s"
REROUTE_HEADER = "time,vehicle,old_route,new_route,u_twt,best_alt_time,decision"
DETECTOR_HEADER = "window_start,arm,count,mean_speed,density"
COMPARISON_HEADER = ("sweep_value,seed,final_avg_cum_delay,final_avg_queue,"
                     "final_avg_neg_reward")
SWEEP_SUMMARY_HEADER = "sweep_value,mean_final_neg_reward,rank,reference_claim"
SCHEDULE_HEADER = "depart,vtype,origin,destination"


class ConfigError(ValueError):
    """A configuration file or run plan is invalid."""


# ----------------------------------------------------------------- profiles

@dataclass(frozen=True)
class RunConfig:
    """Full experiment profile: training knobs plus demand and rerouting."""

    train: TrainConfig
    vehicles: int = 1000
    spawn_horizon: int = 300
    fixed_green: int = 30
    density_threshold: float = 0.05
    max_alternatives: int = 4
    network_file: str | None = None
    schedule_file: str | None = None

    def __post_init__(self):
        if self.vehicles < 0:
            raise ConfigError("vehicles must be >= 0")
        if self.spawn_horizon < 1:
            raise ConfigError("spawn_horizon must be >= 1")
        if self.fixed_green < 1:
            raise ConfigError("fixed_green must be >= 1")
        if self.density_threshold < 0:
            raise ConfigError("density_threshold must be >= 0")
        if self.max_alternatives < 1:
            raise ConfigError("max_alternatives must be >= 1")


def desk_profile() -> RunConfig:
    """Minutes-scale default: converges and separates the three modes while
    a full comparison still runs on a laptop."""
    return RunConfig(
        train=TrainConfig(
            episodes=50,
            batch_size=200,
            buffer_capacity=400,
            gamma=0.5,
            green_duration=4,
            yellow_duration=2,
            max_agent_steps=300,
            hidden_width=200,
            hidden_count=3,
            learning_rate=5e-4,
        ),
        vehicles=1000,
        spawn_horizon=300,
        fixed_green=30,
        density_threshold=0.05,
        max_alternatives=4,
    )


def paper_scale_profile() -> RunConfig:
    """Full-size experiment tables (hours of compute for a training run)."""
    return RunConfig(
        train=TrainConfig(),  # 200 episodes, buffer 4500, 2500 steps, lr 1e-3
        vehicles=4000,
        spawn_horizon=3600,
        fixed_green=30,
        density_threshold=0.05,
        max_alternatives=4,
    )


# -------------------------------------------------------------- config file

_RUN_FIELD_KEYS = {
    "vehicles": "vehicles",
    "spawn_horizon": "spawn_horizon",
    "fixed_green": "fixed_green",
    "density_threshold": "density_threshold",
    "max_alternatives": "max_alternatives",
    "network": "network_file",
    "schedule": "schedule_file",
}

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _coerce(key: str, value: str, type_name: str):
    try:
        if type_name == "int":
            return int(value)
        if type_name == "float":
            return float(value)
        if type_name == "bool":
            word = value.lower()
            if word not in _BOOL_WORDS:
                raise ValueError(value)
            return _BOOL_WORDS[word]
        return value  # string-like (paths)
    except ValueError:
        raise ConfigError(
            f"config key {key!r} expects {type_name}, got {value!r}") from None


def parse_config_text(text: str, base: RunConfig) -> RunConfig:
    """Apply `key = value` lines (with # comments) on top of a profile."""
    train_types = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    run_types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    train_updates: dict = {}
    run_updates: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in train_types:
            train_updates[key] = _coerce(key, value, train_types[key])
        elif key in _RUN_FIELD_KEYS:
            field = _RUN_FIELD_KEYS[key]
            type_name = run_types[field]
            if field in ("network_file", "schedule_file"):
                type_name = "str"
            run_updates[field] = _coerce(key, value, type_name)
        else:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
    try:
        train = dataclasses.replace(base.train, **train_updates)
        return dataclasses.replace(base, train=train, **run_updates)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config_file(path: str | Path, base: RunConfig) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, base)


def config_text(cfg: RunConfig) -> str:
    """Render a RunConfig as a config file that parses back to itself."""
    lines = []
    for key, field in _RUN_FIELD_KEYS.items():
        value = getattr(cfg, field)
        if value is None:
            continue
        lines.append(f"{key} = {_plain(value)}")
    for f in dataclasses.fields(TrainConfig):
        lines.append(f"{f.name} = {_plain(getattr(cfg.train, f.name))}")
    return "\n".join(lines) + "\n"


def _plain(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ----------------------------------------------------- demand and networks

def schedule_seed(base_seed: int, episode: int) -> int:
    """Independent demand stream per (base seed, episode)."""
    seq = np.random.SeedSequence([base_seed, SCHEDULE_STREAM, episode])
    return int(seq.generate_state(1)[0])


def load_schedule_file(net: RoadNetwork, text: str) -> tuple[SpawnSpec, ...]:
    """Parse a demand override: CSV `depart,vtype,origin,destination`.

    Routes are the free-flow shortest paths; vehicle ids are v0, v1, ... in
    file order; the result is sorted by departure time.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != SCHEDULE_HEADER:
        raise ConfigError(
            f"schedule file must start with header {SCHEDULE_HEADER!r}")
    weights = free_flow_weights(net)
    specs = []
    for lineno, line in enumerate(lines[1:], 2):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise ConfigError(f"schedule line {lineno}: expected 4 fields")
        depart_s, vtype, origin, destination = parts
        try:
            depart = int(depart_s)
        except ValueError:
            raise ConfigError(
                f"schedule line {lineno}: bad depart {depart_s!r}") from None
        if depart < 0:
            raise ConfigError(f"schedule line {lineno}: depart must be >= 0")
        if vtype not in VEHICLE_MAX_SPEED:
            raise ConfigError(f"schedule line {lineno}: unknown vtype {vtype!r}")
        try:
            route = shortest_route(net, origin, destination, weights)
        except ValueError as exc:
            raise ConfigError(f"schedule line {lineno}: {exc}") from None
        specs.append(SpawnSpec(depart=depart, vehicle_id=f"v{lineno - 2}",
                               vtype=vtype, max_speed=VEHICLE_MAX_SPEED[vtype],
                               route=route.edges))
    specs.sort(key=lambda s: (s.depart, s.vehicle_id))
    return tuple(specs)


def _network_for(cfg: RunConfig) -> RoadNetwork:
    if cfg.network_file is None:
        return build_default_network()
    try:
        text = Path(cfg.network_file).read_text()
    except OSError as exc:
        raise ConfigError(
            f"cannot read network file {cfg.network_file}: {exc}") from None
    try:
        return build_network(text)
    except ValueError as exc:
        raise ConfigError(f"bad network file {cfg.network_file}: {exc}") from None


def _schedule_for(net: RoadNetwork, cfg: RunConfig, base_seed: int,
                  episode: int) -> tuple[SpawnSpec, ...]:
    if cfg.schedule_file is not None:
        try:
            text = Path(cfg.schedule_file).read_text()
        except OSError as exc:
            raise ConfigError(
                f"cannot read schedule file {cfg.schedule_file}: {exc}") from None
        return load_schedule_file(net, text)
    return spawn_schedule(net, cfg.vehicles, schedule_seed(base_seed, episode),
                          cfg.spawn_horizon)


# ------------------------------------------------------------------- runs

class DetectorLog:
    """Boundary hook that snapshots every detector window."""

    def __init__(self):
        self.rows: list[tuple[int, str, int, float, float]] = []

    def __call__(self, sim: Simulation) -> None:
        readings = sim.read_detectors()
        for arm in ARM_ORDER:
            r = readings[arm]
            self.rows.append((r.window_start, arm, r.vehicle_count,
                              float(r.mean_speed), float(r.density)))


@dataclass(frozen=True)
class ExperimentResult:
    """Everything one run produces, independent of how it is persisted."""

    mode: str
    seed: int
    metrics: tuple[EpisodeMetrics, ...]
    reroutes: tuple[RerouteDecision, ...]
    detector_rows: tuple[tuple[int, str, int, float, float], ...]
    network: PolicyNetwork | None


def run_fixed_time(cfg: RunConfig, seed: int) -> ExperimentResult:
    """Pre-timed baseline: phases 0-3 cycle with a fixed green, no learning,
    on exactly the per-episode demand streams the learning modes see."""
    net = _network_for(cfg)
    history: list[EpisodeMetrics] = []
    last_log = DetectorLog()
    for episode in range(cfg.train.episodes):
        sim = Simulation(net, _schedule_for(net, cfg, seed, episode),
                         yellow_duration=cfg.train.yellow_duration)
        log = DetectorLog()
        _, cum_negative = drive_episode(
            sim, fixed_cycle_policy(cfg.fixed_green),
            green_duration=cfg.fixed_green, max_decisions=SIM_TIME_CAP,
            boundary_hook=log)
        history.append(EpisodeMetrics(
            episode=episode,
            cum_delay_s=sim.cum_delay(),
            avg_queue_len=sim.avg_queue_len,
            cum_negative_reward=cum_negative,
            sim_time_s=sim.clock,
            arrived=sim.arrived_count,
        ))
        last_log = log
    return ExperimentResult("fixed", seed, tuple(history), (),
                            tuple(last_log.rows), None)


def _run_learning(cfg: RunConfig, seed: int, with_rerouting: bool,
                  ) -> ExperimentResult:
    net = _network_for(cfg)
    logs: list[DetectorLog] = []
    monitors: list[CongestionMonitor] = []

    def hook_factory(_sim: Simulation):
        log = DetectorLog()
        logs.append(log)
        if not with_rerouting:
            return log
        monitor = CongestionMonitor(cfg.density_threshold,
                                    cfg.max_alternatives)
        monitors.append(monitor)

        def hook(sim: Simulation) -> None:
            log(sim)
            monitor(sim)

        return hook

    agent, history = run_training(
        lambda: net, cfg.train, seed,
        lambda episode: _schedule_for(net, cfg, seed, episode),
        boundary_hook_factory=hook_factory)
    reroutes = tuple(d for m in monitors for d in m.decisions)
    detector_rows = tuple(logs[-1].rows) if logs else ()
    mode = "rl_reroute" if with_rerouting else "rl"
    return ExperimentResult(mode, seed, tuple(history), reroutes,
                            detector_rows, agent.net)


def run_experiment(cfg: RunConfig, mode: str, seed: int) -> ExperimentResult:
    if mode == "fixed":
        return run_fixed_time(cfg, seed)
    if mode == "rl":
        return _run_learning(cfg, seed, with_rerouting=False)
    if mode == "rl_reroute":
        return _run_learning(cfg, seed, with_rerouting=True)
    raise ConfigError(f"unknown mode {mode!r} (expected one of {MODES})")


def _run_job(job: tuple[RunConfig, str, int]) -> ExperimentResult:
    return run_experiment(*job)


def run_many(jobs: list[tuple[RunConfig, str, int]],
             max_workers: int | None = None) -> list[ExperimentResult]:
    """Run independent experiments, in parallel processes when there are
    several.  Results come back in job order."""
    if len(jobs) <= 1:
        return [_run_job(job) for job in jobs]
    workers = max_workers or min(len(jobs), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


# ------------------------------------------------------------ CSV pipeline

def _fmt(value) -> str:
    """Stable scalar rendering: ints plain, floats via repr."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metrics_csv(metrics: tuple[EpisodeMetrics, ...]) -> str:
    lines = [METRICS_HEADER]
    for m in metrics:
        lines.append(",".join((
            _fmt(m.episode), _fmt(m.cum_delay_s), _fmt(m.avg_queue_len),
            _fmt(m.cum_negative_reward), _fmt(m.sim_time_s))))
    return "\n".join(lines) + "\n"


def reroutes_csv(decisions: tuple[RerouteDecision, ...]) -> str:
    lines = [REROUTE_HEADER]
    for d in decisions:
        best = "" if d.best_alternative is None else _fmt(d.best_alternative)
        lines.append(",".join((
            _fmt(d.time), d.vehicle, "|".join(d.old_route),
            "|".join(d.new_route), _fmt(d.u_twt), best, d.decision)))
    return "\n".join(lines) + "\n"


def detectors_csv(rows) -> str:
    lines = [DETECTOR_HEADER]
    for window_start, arm, count, mean_speed, density in rows:
        lines.append(",".join((
            _fmt(window_start), arm, _fmt(count), _fmt(mean_speed),
            _fmt(density))))
    return "\n".join(lines) + "\n"


def read_csv(text: str) -> tuple[list[str], list[dict[str, str]]]:
    """Parse any harness CSV back into header + row dicts of strings."""
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty CSV")
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"row has {len(parts)} fields, header has "
                             f"{len(header)}: {line!r}")
        rows.append(dict(zip(header, parts)))
    return header, rows


def read_metrics_csv(text: str) -> tuple[EpisodeMetrics, ...]:
    """Load a metrics series back; arrived counts are not serialized."""
    header, rows = read_csv(text)
    if header != METRICS_HEADER.split(","):
        raise ValueError(f"unexpected metrics header: {header}")
    return tuple(EpisodeMetrics(
        episode=int(r["episode"]),
        cum_delay_s=int(r["cum_delay_s"]),
        avg_queue_len=float(r["avg_queue_len"]),
        cum_negative_reward=float(r["cum_negative_reward"]),
        sim_time_s=int(r["sim_time_s"]),
        arrived=0,
    ) for r in rows)


def _atomic_write(path: Path, data: str | bytes) -> None:
    """Write-then-rename so a crash never leaves a partial artifact."""
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


# ------------------------------------------------------- summaries/reports

def final_quarter(seq):
    """The last 25% of a series (at least one element)."""
    take = max(1, len(seq) // 4)
    return seq[-take:]


def _final_means(metrics) -> dict[str, float]:
    fq = final_quarter(list(metrics))
    return {
        "sim_time_s": statistics.fmean(m.sim_time_s for m in fq),
        "cum_delay_s": statistics.fmean(m.cum_delay_s for m in fq),
        "avg_queue_len": statistics.fmean(m.avg_queue_len for m in fq),
        "cum_negative_reward": statistics.fmean(
            m.cum_negative_reward for m in fq),
    }


def _reduction(baseline: float, variant: float) -> float:
    if baseline == 0:
        return 0.0
    return 100.0 * (baseline - variant) / baseline


def summarize(fixed_metrics, rl_metrics=None, reroute_metrics=None) -> str:
    """Percentage reductions vs the fixed-time baseline over the final 25%
    of episodes, for mean simulation time and mean cumulative delay."""
    if not fixed_metrics:
        raise ValueError("fixed-time series is empty")
    base = _final_means(fixed_metrics)
    lines = [
        "final-quarter means vs fixed-time baseline",
        (f"fixed       sim_time {base['sim_time_s']:.1f} s   "
         f"cum_delay {base['cum_delay_s']:.1f} s"),
    ]
    for label, series in (("rl", rl_metrics), ("rl_reroute", reroute_metrics)):
        if series is None:
            continue
        if not series:
            raise ValueError(f"{label} series is empty")
        means = _final_means(series)
        lines.append(
            f"{label:<11} sim_time {means['sim_time_s']:.1f} s   "
            f"cum_delay {means['cum_delay_s']:.1f} s")
        lines.append(
            f"{label} vs fixed: sim_time reduced "
            f"{_reduction(base['sim_time_s'], means['sim_time_s']):.1f}%, "
            f"cum_delay reduced "
            f"{_reduction(base['cum_delay_s'], means['cum_delay_s']):.1f}%")
    lines.append("full-scale reference targets (informational, not asserted): "
                 "rl ~20% sim_time reduction, rl_reroute ~34%, "
                 "fixed-time total ~7392 s")
    return "\n".join(lines) + "\n"


def _summary_text(result: ExperimentResult) -> str:
    means = _final_means(result.metrics)
    lines = [
        f"mode = {result.mode}",
        f"seed = {result.seed}",
        f"episodes = {len(result.metrics)}",
        f"arrived_last = {result.metrics[-1].arrived if result.metrics else 0}",
        f"final_quarter_mean_sim_time_s = {_fmt(means['sim_time_s'])}",
        f"final_quarter_mean_cum_delay_s = {_fmt(means['cum_delay_s'])}",
        f"final_quarter_mean_avg_queue_len = {_fmt(means['avg_queue_len'])}",
        ("final_quarter_mean_cum_negative_reward = "
         f"{_fmt(means['cum_negative_reward'])}"),
    ]
    if result.mode == "rl_reroute":
        switches = sum(1 for d in result.reroutes if d.decision == "switch")
        lines.append(f"reroute_decisions = {len(result.reroutes)}")
        lines.append(f"reroute_switches = {switches}")
    return "\n".join(lines) + "\n"


def read_key_values(text: str) -> dict[str, str]:
    """Read a summary/config `key = value` file into a dict of strings."""
    values: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


# ------------------------------------------------------------- run + write

def write_run_artifacts(out_dir: str | Path, cfg: RunConfig,
                        result: ExperimentResult) -> dict[str, Path]:
    """Persist one run: metrics, config echo, summary, detector log, and —
    where applicable — the trained policy and the reroute log."""
    out = Path(out_dir)
    written: dict[str, Path] = {}

    def put(name: str, data: str | bytes) -> None:
        path = out / name
        _atomic_write(path, data)
        written[name] = path

    put("metrics.csv", metrics_csv(result.metrics))
    put("config.txt", config_text(cfg))
    put("summary.txt", _summary_text(result))
    put("detectors.csv", detectors_csv(result.detector_rows))
    if result.mode == "rl_reroute":
        put("reroutes.csv", reroutes_csv(result.reroutes))
    if result.network is not None:
        tmp = out / ".policy.bin.tmp"
        save_network(result.network, tmp)
        os.replace(tmp, out / "policy.bin")
        written["policy.bin"] = out / "policy.bin"
    return written


def run_phase(cfg: RunConfig, mode: str, seed: int,
              out_dir: str | Path) -> ExperimentResult:
    """Run one mode end-to-end and persist its artifacts."""
    result = run_experiment(cfg, mode, seed)
    write_run_artifacts(out_dir, cfg, result)
    return result


# ------------------------------------------------------------------ sweeps

def sweep_config(cfg: RunConfig, axis: str, value) -> RunConfig:
    if axis == "gamma":
        train = dataclasses.replace(cfg.train, gamma=value)
    elif axis == "width":
        train = dataclasses.replace(cfg.train, hidden_width=value)
    elif axis == "depth":
        train = dataclasses.replace(cfg.train, hidden_count=value)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r} "
                          f"(expected one of {tuple(SWEEP_AXES)})")
    return dataclasses.replace(cfg, train=train)


def run_sweep(cfg: RunConfig, axis: str, seeds: tuple[int, ...],
              out_dir: str | Path, max_workers: int | None = None):
    """One rl run per (declared sweep value, seed); emits the comparison CSV
    and a ranking summary.  Returns (comparison_rows, summary_rows)."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r} "
                          f"(expected one of {tuple(SWEEP_AXES)})")
    if not seeds:
        raise ConfigError("sweep needs at least one seed")
    values = SWEEP_AXES[axis]
    jobs = [(sweep_config(cfg, axis, value), "rl", seed)
            for value in values for seed in seeds]
    results = run_many(jobs, max_workers=max_workers)

    comparison_rows = []
    by_value: dict = {value: [] for value in values}
    at = 0
    for value in values:
        for seed in seeds:
            means = _final_means(results[at].metrics)
            at += 1
            comparison_rows.append((value, seed, means["cum_delay_s"],
                                    means["avg_queue_len"],
                                    means["cum_negative_reward"]))
            by_value[value].append(means["cum_negative_reward"])

    # Rank by mean final cumulative negative reward: rewards are negative,
    # so the value closest to zero (largest) ranks first.
    order = sorted(values, key=lambda v: (-statistics.fmean(by_value[v]),
                                          values.index(v)))
    summary_rows = []
    claimed = REFERENCE_CLAIMS.get(axis)
    for rank, value in enumerate(order, 1):
        flag = "claimed_best" if value == claimed else ""
        summary_rows.append((value, statistics.fmean(by_value[value]),
                             rank, flag))

    out = Path(out_dir)
    lines = [COMPARISON_HEADER]
    for value, seed, delay, queue, neg in comparison_rows:
        lines.append(",".join((_fmt(value), _fmt(seed), _fmt(delay),
                               _fmt(queue), _fmt(neg))))
    _atomic_write(out / "comparison.csv", "\n".join(lines) + "\n")

    lines = [SWEEP_SUMMARY_HEADER]
    for value, mean_neg, rank, flag in summary_rows:
        lines.append(",".join((_fmt(value), _fmt(mean_neg), _fmt(rank), flag)))
    _atomic_write(out / "summary.csv", "\n".join(lines) + "\n")
    return comparison_rows, summary_rows
