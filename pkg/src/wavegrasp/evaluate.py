"""Frozen-policy evaluation across sea states."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import PolicyCheckpoint
from .env import ACTION_DIM, STACKED_OBS_DIM, EnvConfig, WaveGraspEnv
from .errors import ConfigurationError
from .policies import ActorPolicy
from .wave import SeaStateSpec, preset

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "dist", "cube_z", "wave_x", "wave_y", "wave_z", "reward")
# reference success rates per sea state, 15 trials each, for figure overlays
REFERENCE_SUCCESS_RATES = {0: 0.933, 1: 0.87, 2: 0.8}


@dataclass(frozen=True)
class EvalProtocol:
    trials: int = 15
    time_limit: float = 30.0  # seconds of simulated time
    success_lift: float = 0.20
    sea_states: tuple[int, ...] = (0, 1, 2)
    base_seed: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "sea_states", tuple(int(s) for s in self.sea_states))
        if self.trials < 1:
            raise ConfigurationError("trials", "must be >= 1")
        if not self.time_limit > 0:
            raise ConfigurationError("time_limit", "must be positive")
        for s in self.sea_states:
            preset(s)

    def trial_seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.trials)]


@dataclass
class TrialTrace:
    seed: int
    sea_state: int
    t: list[float] = field(default_factory=list)
    dist: list[float] = field(default_factory=list)
    cube_z: list[float] = field(default_factory=list)
    wave: list[list[float]] = field(default_factory=list)
    reward: list[float] = field(default_factory=list)
    success: bool = False
    steps_to_success: int | None = None

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.dist[i], self.cube_z[i], *self.wave[i], self.reward[i])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(TRACE_COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def distance_decay_stat(trace) -> float:
    """Max distance in the first quarter minus max distance in the last quarter.

    Accepts a :class:`TrialTrace` or a plain sequence of distances; positive
    values mean the distance peaks shrink over the trial.
    """
    d = np.asarray(trace.dist if isinstance(trace, TrialTrace) else trace, dtype=np.float64)
    if d.size == 0:
        raise ValueError("empty trace")
    q = max(1, d.size // 4)
    return float(d[:q].max() - d[-q:].max())


def eval_env_config(config: EnvConfig, protocol: EvalProtocol) -> EnvConfig:
    return replace(config, terminate_on_success=True, lift_success=protocol.success_lift)


def run_trial(policy, config: EnvConfig, sea_state: SeaStateSpec, seed: int, max_steps: int) -> TrialTrace:
    env = WaveGraspEnv(config, sea_state, max_steps=max_steps)
    obs = env.reset(seed=seed)
    policy.reset()
    trace = TrialTrace(seed=seed, sea_state=sea_state.wmo_code)
    while True:
        res = env.step(policy.act(obs))
        obs = res.observation
        info = res.info
        trace.t.append(env.state.t * config.dt)
        trace.dist.append(info["dist"])
        trace.cube_z.append(info["cube_z"])
        trace.wave.append(info["wave_offset"])
        trace.reward.append(res.reward)
        if info["success"] and not trace.success:
            trace.success = True
            trace.steps_to_success = env.state.t
        if res.terminated or res.truncated:
            return trace


def evaluate(
    policy,
    protocol: EvalProtocol | None = None,
    env_config: EnvConfig | None = None,
    out_dir=None,
) -> dict:
    """Run ``protocol`` with ``policy`` (a checkpoint or anything with ``act``/``reset``).

    Returns ``{state: {success_rate, trials, successes, mean_steps,
    trace_files, traces, decay}}``; writes ``summary.json`` and one CSV per
    trial when ``out_dir`` is given.
    """
    protocol = protocol or EvalProtocol()
    if isinstance(policy, PolicyCheckpoint):
        policy.check_compatible(STACKED_OBS_DIM, ACTION_DIM)
        env_config = env_config or policy.env_config()
        policy = ActorPolicy(policy.to_agent(), deterministic=True)
    cfg = eval_env_config(env_config or EnvConfig(), protocol)
    max_steps = int(round(protocol.time_limit / cfg.dt))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    report = {}
    for state in protocol.sea_states:
        spec = preset(state)
        traces, files = [], []
        for i, seed in enumerate(protocol.trial_seeds()):
            trace = run_trial(policy, cfg, spec, seed, max_steps)
            traces.append(trace)
            if out is not None:
                name = f"trace_state{state}_trial{i:02d}.csv"
                trace.write_csv(out / name)
                files.append(name)
        wins = [t for t in traces if t.success]
        mean_steps = float(np.mean([t.steps_to_success for t in wins])) if wins else None
        report[state] = {
            "success_rate": len(wins) / len(traces),
            "trials": len(traces),
            "successes": len(wins),
            "mean_steps": mean_steps,
            "trace_files": files,
            "decay": [distance_decay_stat(t) for t in wins],
            "traces": traces,
        }
        log.info("sea state %d: success %d/%d", state, len(wins), len(traces))

    if out is not None:
        write_summary(report, out / "summary.json")
    return report


def summary_dict(report: dict) -> dict:
    out = {}
    for state, r in report.items():
        out[str(state)] = {k: v for k, v in r.items() if k != "traces"}
    return out


def write_summary(report: dict, path) -> None:
    Path(path).write_text(json.dumps(summary_dict(report), indent=2, sort_keys=True))
