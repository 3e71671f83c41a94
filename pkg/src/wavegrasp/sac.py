"""Soft Actor-Critic with a squashed-Gaussian actor, twin critics and
automatic entropy-temperature tuning, on top of :mod:`wavegrasp.nn`."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .env import ACTION_DIM, OBS_DIM, STACK, STACKED_OBS_DIM
from .errors import ConfigurationError, InputError, ProtocolError
from .nn import AdamState, Mlp, adam_step

LOG_2PI = math.log(2.0 * math.pi)
LN2 = math.log(2.0)


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.98
    lr: float = 1e-4
    initial_alpha: float = 0.5
    tau: float = 0.005
    batch_size: int = 256
    buffer_capacity: int = 1_000_000
    target_entropy: float = -float(ACTION_DIM)
    # 256-wide nets are the usual choice; 64 keeps desk-scale training near 20 min on one core
    actor_hidden: tuple[int, ...] = (64, 64)
    critic_hidden: tuple[int, ...] = (64, 64, 64)
    log_std_min: float = -20.0
    log_std_max: float = 2.0
    auto_alpha: bool = True
    relative_inputs: bool = True

    def __post_init__(self):
        object.__setattr__(self, "actor_hidden", tuple(int(h) for h in self.actor_hidden))
        object.__setattr__(self, "critic_hidden", tuple(int(h) for h in self.critic_hidden))
        self.validate()

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError("gamma", "must lie in [0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigurationError("tau", "must lie in (0, 1]")
        if self.lr <= 0:
            raise ConfigurationError("lr", "must be positive")
        if self.initial_alpha < 0:
            raise ConfigurationError("initial_alpha", "must be non-negative")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size", "must be >= 1")
        if self.buffer_capacity < 1:
            raise ConfigurationError("buffer_capacity", "must be >= 1")
        if self.log_std_min >= self.log_std_max:
            raise ConfigurationError("log_std_min", "must be below log_std_max")
        if any(h < 1 for h in self.actor_hidden + self.critic_hidden):
            raise ConfigurationError("actor_hidden", "hidden widths must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SacConfig":
        known = {f.name for f in fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigurationError(k, "unknown SAC field")
        return cls(**d)


def default_obs_scale(relative: bool = True) -> np.ndarray:
    """Fixed per-slot input scaling for one 10-dim observation, tiled over the stack.

    With ``relative`` the gripper slots hold the gripper-minus-cube offset
    (see :func:`relative_view`), which gets a finer scale.
    """
    grip = 1 / 0.1 if relative else 1 / 0.3
    one = np.array([1 / 0.3] * 3 + [grip] * 3 + [1 / 0.5, 1.0, 1 / math.pi, 1 / math.pi])
    return np.tile(one, STACK)


def relative_view(obs: np.ndarray) -> np.ndarray:
    """Re-express each stacked frame's gripper position and yaw relative to the cube.

    Invertible given the cube slots, so no information is lost; it only puts
    centimetre-scale grasp errors on a scale the networks resolve easily.
    """
    x = np.array(obs, dtype=np.float64).reshape(-1, STACK, OBS_DIM)
    x[..., 3:6] -= x[..., 0:3]
    x[..., 8] = (x[..., 8] - x[..., 9] + math.pi) % (2 * math.pi) - math.pi
    return x.reshape(np.shape(obs))


def log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    """log(1 - tanh(u)^2), stable for large |u|."""
    return 2.0 * (LN2 - u - np.logaddexp(0.0, -2.0 * u))


def squashed_gaussian_log_prob(mu, log_std, u) -> np.ndarray:
    """Log-density of tanh(u) for u ~ N(mu, exp(log_std)^2), summed over the last axis."""
    mu, log_std, u = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (mu, log_std, u)))
    z = (u - mu) * np.exp(-log_std)
    gauss = -0.5 * z * z - log_std - 0.5 * LOG_2PI
    return np.sum(gauss - log1m_tanh_sq(u), axis=-1)


class ReplayBuffer:
    """Fixed-capacity ring of transitions sampled uniformly with replacement."""

    def __init__(self, capacity: int, obs_dim: int = STACKED_OBS_DIM, act_dim: int = ACTION_DIM):
        if capacity < 1:
            raise ConfigurationError("buffer_capacity", "must be >= 1")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self.ptr = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self.ptr
        self.obs[i] = obs
        self.act[i] = action
        self.rew[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> dict:
        if self.size == 0:
            raise ProtocolError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=n)
        return {
            "obs": self.obs[idx],
            "act": self.act[idx],
            "rew": self.rew[idx],
            "next_obs": self.next_obs[idx],
            "done": self.done[idx],
        }


@dataclass
class LossReport:
    q1: float
    q2: float
    actor: float
    alpha_loss: float
    alpha: float
    mean_log_prob: float


class SacAgent:
    def __init__(
        self,
        config: SacConfig | None = None,
        seed: int = 0,
        obs_dim: int = STACKED_OBS_DIM,
        act_dim: int = ACTION_DIM,
        obs_scale: np.ndarray | None = None,
    ):
        self.config = cfg = config or SacConfig()
        self.obs_dim, self.act_dim = obs_dim, act_dim
        if obs_scale is None:
            obs_scale = (default_obs_scale(cfg.relative_inputs) if obs_dim == STACKED_OBS_DIM
                         else np.ones(obs_dim))
        self.obs_scale = np.asarray(obs_scale, dtype=np.float64)
        rng = np.random.default_rng(seed)
        self.actor = Mlp([obs_dim, *cfg.actor_hidden, 2 * act_dim], rng)
        critic_widths = [obs_dim + act_dim, *cfg.critic_hidden, 1]
        self.q1 = Mlp(critic_widths, rng)
        self.q2 = Mlp(critic_widths, rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = math.log(cfg.initial_alpha) if cfg.initial_alpha > 0 else -math.inf
        self.target_entropy = cfg.target_entropy
        self.actor_opt = AdamState.for_params(self.actor.params, lr=cfg.lr)
        self.q1_opt = AdamState.for_params(self.q1.params, lr=cfg.lr)
        self.q2_opt = AdamState.for_params(self.q2.params, lr=cfg.lr)
        self.alpha_opt = AdamState.for_params([np.zeros(1)], lr=cfg.lr)
        self.updates = 0

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    # -- policy ----------------------------------------------------------

    def _normalize(self, obs: np.ndarray) -> np.ndarray:
        if self.config.relative_inputs and self.obs_dim == STACKED_OBS_DIM:
            obs = relative_view(obs)
        return obs * self.obs_scale

    def policy_head(self, obs, return_cache: bool = False):
        """Mean and clamped log-std for a batch of raw observations."""
        out = self.actor.forward(self._normalize(obs), return_cache=return_cache)
        if return_cache:
            out, cache = out
        mu = out[:, : self.act_dim]
        raw = out[:, self.act_dim :]
        log_std = np.clip(raw, self.config.log_std_min, self.config.log_std_max)
        if return_cache:
            return mu, log_std, raw, cache
        return mu, log_std

    def select_action(self, obs, deterministic: bool = False, rng: np.random.Generator | None = None):
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.obs_dim,) or not np.all(np.isfinite(obs)):
            raise InputError(f"observation must be {self.obs_dim} finite numbers")
        mu, log_std = self.policy_head(obs[None, :])
        if deterministic:
            u = mu[0]
        else:
            if rng is None:
                raise InputError("stochastic action selection needs an rng")
            u = mu[0] + np.exp(log_std[0]) * rng.standard_normal(self.act_dim)
        a = np.tanh(u)
        # keep strictly inside (-1, 1) even when tanh saturates in float64
        return np.clip(a, -1.0 + 1e-12, 1.0 - 1e-12)

    def log_prob(self, obs, u) -> np.ndarray:
        """Log-density of the squashed action tanh(u) under the policy at ``obs``."""
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        mu, log_std = self.policy_head(obs)
        return squashed_gaussian_log_prob(mu, log_std, np.atleast_2d(u))

    def _sample(self, obs, rng):
        mu, log_std, raw, cache = self.policy_head(obs, return_cache=True)
        eps = rng.standard_normal(mu.shape)
        std = np.exp(log_std)
        u = mu + std * eps
        a = np.tanh(u)
        logp = np.sum(-0.5 * eps * eps - log_std - 0.5 * LOG_2PI - log1m_tanh_sq(u), axis=-1)
        return a, u, logp, eps, std, raw, cache

    # -- learning ----------------------------------------------------------

    def critic_input(self, obs, act) -> np.ndarray:
        return np.concatenate([self._normalize(obs), act], axis=1)

    def critic_targets(self, batch, rng) -> np.ndarray:
        cfg = self.config
        a2, _, logp2, *_ = self._sample(batch["next_obs"], rng)
        x2 = self.critic_input(batch["next_obs"], a2)
        q_next = np.minimum(self.q1_target(x2)[:, 0], self.q2_target(x2)[:, 0])
        soft = q_next - self.alpha * logp2
        return batch["rew"] + cfg.gamma * (1.0 - batch["done"]) * soft

    def update(self, buffer: ReplayBuffer, batch_size: int | None = None, rng=None) -> LossReport:
        n = batch_size or self.config.batch_size
        if len(buffer) < n:
            raise ProtocolError(f"replay buffer holds {len(buffer)} transitions, need {n}")
        if rng is None:
            raise InputError("update needs an rng")
        batch = buffer.sample(n, rng)
        return self.update_on_batch(batch, rng)

    def update_on_batch(self, batch: dict, rng) -> LossReport:
        """Critic step, actor step, temperature step, then target blending."""
        alpha = self.alpha
        l1, l2 = self.critic_step(batch, rng)
        actor_loss, logp = self.actor_step(batch, rng=rng, alpha=alpha)
        mean_logp = float(np.mean(logp))
        alpha_loss = self.alpha_step(mean_logp)
        self.soft_update_targets()
        self.updates += 1
        return LossReport(l1, l2, actor_loss, alpha_loss, self.alpha, mean_logp)

    def critic_step(self, batch: dict, rng) -> tuple[float, float]:
        n = len(batch["rew"])
        y = self.critic_targets(batch, rng)
        x = self.critic_input(batch["obs"], batch["act"])
        losses = []
        for net, opt in ((self.q1, self.q1_opt), (self.q2, self.q2_opt)):
            q, cache = net.forward(x, return_cache=True)
            err = q[:, 0] - y
            losses.append(float(np.mean(err * err)))
            grads, _ = net.backward(cache, (2.0 / n) * err[:, None])
            adam_step(net.params, grads, opt)
        return losses[0], losses[1]

    def actor_gradients(self, batch: dict, eps: np.ndarray, alpha: float | None = None):
        """Actor loss, per-sample log-probs and parameter gradients for fixed noise ``eps``."""
        cfg = self.config
        alpha = self.alpha if alpha is None else alpha
        n = len(batch["obs"])
        mu, log_std, raw, acache = self.policy_head(batch["obs"], return_cache=True)
        std = np.exp(log_std)
        u = mu + std * eps
        a = np.tanh(u)
        logp = np.sum(-0.5 * eps * eps - log_std - 0.5 * LOG_2PI - log1m_tanh_sq(u), axis=-1)
        xa = self.critic_input(batch["obs"], a)
        q1, c1 = self.q1.forward(xa, return_cache=True)
        q2, c2 = self.q2.forward(xa, return_cache=True)
        use1 = q1[:, 0] <= q2[:, 0]
        qmin = np.where(use1, q1[:, 0], q2[:, 0])
        loss = float(np.mean(alpha * logp - qmin))
        _, g1 = self.q1.backward(c1, use1[:, None].astype(np.float64), param_grads=False)
        _, g2 = self.q2.backward(c2, (~use1)[:, None].astype(np.float64), param_grads=False)
        dq_da = (g1 + g2)[:, self.obs_dim :]
        # logp depends on u only through the tanh correction: d/du = 2 tanh(u)
        d_u = (alpha * 2.0 * a - dq_da * (1.0 - a * a)) / n
        d_log_std = d_u * std * eps - alpha / n
        in_range = (raw >= cfg.log_std_min) & (raw <= cfg.log_std_max)
        d_out = np.concatenate([d_u, d_log_std * in_range], axis=1)
        grads, _ = self.actor.backward(acache, d_out)
        return loss, logp, grads

    def actor_step(self, batch: dict, rng=None, eps=None, alpha: float | None = None):
        if eps is None:
            eps = rng.standard_normal((len(batch["obs"]), self.act_dim))
        loss, logp, grads = self.actor_gradients(batch, eps, alpha)
        adam_step(self.actor.params, grads, self.actor_opt)
        return loss, logp

    def alpha_step(self, mean_logp: float) -> float:
        """Move log_alpha so that the policy entropy tracks ``target_entropy``."""
        if not math.isfinite(self.log_alpha):
            return 0.0
        loss = -self.log_alpha * (mean_logp + self.target_entropy)
        if self.config.auto_alpha:
            la = np.array([self.log_alpha])
            adam_step([la], [np.array([-(mean_logp + self.target_entropy)])], self.alpha_opt)
            self.log_alpha = float(la[0])
        return float(loss)

    def soft_update_targets(self) -> None:
        tau = self.config.tau
        for online, target in ((self.q1, self.q1_target), (self.q2, self.q2_target)):
            for p, tp in zip(online.params, target.params):
                tp[...] = tau * p + (1.0 - tau) * tp

    def actor_objective(self, batch: dict, eps: np.ndarray) -> float:
        """Actor loss on ``batch`` for fixed reparameterization noise ``eps``."""
        mu, log_std = self.policy_head(batch["obs"])
        u = mu + np.exp(log_std) * eps
        a = np.tanh(u)
        logp = squashed_gaussian_log_prob(mu, log_std, u)
        xa = self.critic_input(batch["obs"], a)
        qmin = np.minimum(self.q1(xa)[:, 0], self.q2(xa)[:, 0])
        return float(np.mean(self.alpha * logp - qmin))
