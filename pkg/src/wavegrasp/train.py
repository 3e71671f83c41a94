"""Static-environment SAC training loop with CSV metrics and checkpoints.

Output directory contents::

    episodes.csv      episode,return,steps,success,final_cube_z
    smoothed.csv      episode,return,smoothed_return   (trailing window)
    losses.csv        episode,updates,q1_loss,q2_loss,actor_loss,alpha
    eval.csv          episode,success_rate,mean_return  (periodic greedy check)
    timing.csv        episode,wall_time_s   (kept apart so the files above are reproducible)
    ckpt_ep{k:06d}_seed{seed}.wgc, final_ep{n:06d}_seed{seed}.wgc
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .checkpoint import PolicyCheckpoint
from .env import ACTION_DIM, EnvConfig, WaveGraspEnv
from .errors import ConfigurationError
from .policies import ActorPolicy
from .sac import ReplayBuffer, SacAgent, SacConfig
from .wave import preset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 2500
    steps_per_episode: int = 100
    warmup_steps: int = 1000
    update_every: int = 1
    checkpoint_interval: int = 500
    eval_interval: int = 250
    eval_episodes: int = 5
    smoothing_window: int = 5
    seed: int = 0
    out_dir: str = "runs/train"

    def __post_init__(self):
        for name in (
            "episodes", "steps_per_episode", "update_every",
            "checkpoint_interval", "eval_interval", "eval_episodes", "smoothing_window",
        ):  # fmt: skip
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(name, "must be >= 1")
        if self.warmup_steps < 0:
            raise ConfigurationError("warmup_steps", "must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigurationError(k, "unknown training field")
        return cls(**d)


@dataclass
class EpisodeRecord:
    episode: int
    ret: float
    steps: int
    success: bool
    final_cube_z: float
    wall_time: float


@dataclass
class TrainResult:
    records: list[EpisodeRecord]
    checkpoint: PolicyCheckpoint
    checkpoint_path: Path
    smoothed: list[float]
    agent: SacAgent


def smooth(series, window: int) -> list[float]:
    """Trailing mean; the first ``window - 1`` entries average the available prefix."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        return []
    c = np.cumsum(np.insert(x, 0, 0.0))
    n = np.arange(1, x.size + 1)
    lo = np.maximum(n - window, 0)
    return list((c[n] - c[lo]) / (n - lo))


def training_env_config(env_config: EnvConfig, train_config: TrainConfig) -> EnvConfig:
    # fixed-length episodes: reward keeps accruing while the cube is held
    return replace(env_config, terminate_on_success=False, episode_len_train=train_config.steps_per_episode)


def episode_seeds(seed: int, n: int) -> list[int]:
    rng = np.random.default_rng([seed, 1])
    return [int(s) for s in rng.integers(0, 2**62, size=n)]


def store_transition(buffer: ReplayBuffer, obs, action, res) -> None:
    # only success-termination cuts the bootstrap; time limits do not
    buffer.push(obs, action, res.reward, res.observation, res.terminated)


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc


def greedy_rollouts(agent: SacAgent, env_config: EnvConfig, seeds) -> tuple[float, float]:
    """Success rate and mean return of the deterministic policy on ``seeds``."""
    env = WaveGraspEnv(env_config, preset(0))
    policy = ActorPolicy(agent, deterministic=True)
    wins, rets = 0, []
    for s in seeds:
        obs = env.reset(seed=s)
        ret, success = 0.0, False
        while True:
            res = env.step(policy.act(obs))
            obs = res.observation
            ret += res.reward
            success |= res.info["success"]
            if res.terminated or res.truncated:
                break
        wins += success
        rets.append(ret)
    return wins / len(seeds), float(np.mean(rets))


def train(
    env_config: EnvConfig | None = None,
    sac_config: SacConfig | None = None,
    train_config: TrainConfig | None = None,
    progress=None,
) -> TrainResult:
    """Train at sea state 0 and write metrics/checkpoints to ``train_config.out_dir``.

    ``progress`` is an optional callable receiving each :class:`EpisodeRecord`.
    """
    env_config = env_config or EnvConfig()
    sac_config = sac_config or SacConfig()
    tc = train_config or TrainConfig()
    out = Path(tc.out_dir)
    _check_writable(out)

    cfg = training_env_config(env_config, tc)
    env = WaveGraspEnv(cfg, preset(0))
    agent = SacAgent(sac_config, seed=tc.seed)
    buffer = ReplayBuffer(min(sac_config.buffer_capacity, tc.episodes * tc.steps_per_episode))
    act_rng = np.random.default_rng([tc.seed, 2])
    upd_rng = np.random.default_rng([tc.seed, 3])
    seeds = episode_seeds(tc.seed, tc.episodes)
    eval_seeds = [int(s) for s in np.random.default_rng([tc.seed, 4]).integers(0, 2**62, tc.eval_episodes)]

    files = {
        "episodes": ["episode", "return", "steps", "success", "final_cube_z"],
        "losses": ["episode", "updates", "q1_loss", "q2_loss", "actor_loss", "alpha"],
        "eval": ["episode", "success_rate", "mean_return"],
        "timing": ["episode", "wall_time_s"],
    }
    handles = {k: open(out / f"{k}.csv", "w", newline="") for k in files}
    writers = {k: csv.writer(h) for k, h in handles.items()}
    for k, header in files.items():
        writers[k].writerow(header)

    records: list[EpisodeRecord] = []
    total_steps = 0
    ckpt_path = None
    t0 = time.perf_counter()
    try:
        for ep in range(tc.episodes):
            ep_start = time.perf_counter()
            obs = env.reset(seed=seeds[ep])
            ret, success, steps = 0.0, False, 0
            loss_acc = []
            while True:
                if total_steps < tc.warmup_steps:
                    action = act_rng.uniform(-1.0, 1.0, ACTION_DIM)
                else:
                    action = agent.select_action(obs, rng=act_rng)
                res = env.step(action)
                store_transition(buffer, obs, action, res)
                obs = res.observation
                ret += res.reward
                success |= res.info["success"]
                steps += 1
                total_steps += 1
                if (
                    total_steps >= tc.warmup_steps
                    and len(buffer) >= sac_config.batch_size
                    and total_steps % tc.update_every == 0
                ):
                    loss_acc.append(agent.update(buffer, rng=upd_rng))
                if res.terminated or res.truncated:
                    break
            rec = EpisodeRecord(ep, ret, steps, bool(success), float(env.state.cube.position[2]),
                                time.perf_counter() - ep_start)
            records.append(rec)
            writers["episodes"].writerow([ep, repr(ret), steps, int(success), repr(rec.final_cube_z)])
            writers["timing"].writerow([ep, f"{rec.wall_time:.6f}"])
            if loss_acc:
                writers["losses"].writerow([
                    ep, agent.updates,
                    repr(float(np.mean([l.q1 for l in loss_acc]))),
                    repr(float(np.mean([l.q2 for l in loss_acc]))),
                    repr(float(np.mean([l.actor for l in loss_acc]))),
                    repr(loss_acc[-1].alpha),
                ])
            if (ep + 1) % tc.eval_interval == 0:
                rate, mret = greedy_rollouts(agent, cfg, eval_seeds)
                writers["eval"].writerow([ep + 1, repr(rate), repr(mret)])
                log.info("episode %d: greedy success %.2f, return %.1f", ep + 1, rate, mret)
            if (ep + 1) % tc.checkpoint_interval == 0 and ep + 1 < tc.episodes:
                _checkpoint(agent, env_config, tc, ep + 1).save(out / f"ckpt_ep{ep + 1:06d}_seed{tc.seed}.wgc")
            if progress is not None:
                progress(rec)
            for h in handles.values():
                h.flush()
    finally:
        for h in handles.values():
            h.close()

    returns = [r.ret for r in records]
    smoothed = smooth(returns, tc.smoothing_window)
    with open(out / "smoothed.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["episode", "return", "smoothed_return"])
        for i, (r, s) in enumerate(zip(returns, smoothed)):
            w.writerow([i, repr(r), repr(float(s))])

    ckpt = _checkpoint(agent, env_config, tc, tc.episodes)
    ckpt_path = ckpt.save(out / f"final_ep{tc.episodes:06d}_seed{tc.seed}.wgc")
    log.info("trained %d episodes in %.1f s", tc.episodes, time.perf_counter() - t0)
    return TrainResult(records, ckpt, ckpt_path, smoothed, agent)


def _checkpoint(agent: SacAgent, env_config: EnvConfig, tc: TrainConfig, episode: int) -> PolicyCheckpoint:
    meta = {"episode": episode, "seed": tc.seed, "train_config": tc.to_dict()}
    return PolicyCheckpoint.from_agent(agent, env_config, meta)
