"""Action sources for rollouts: a trained actor and a hand-scripted grasp controller."""

from __future__ import annotations

import math

import numpy as np

from .env import ACTION_DIM, OBS_DIM, EnvConfig
from .reward import wrap_angle
from .sac import SacAgent


class ActorPolicy:
    """Deterministic (tanh of the mean) or sampled actions from a SAC actor."""

    def __init__(self, agent: SacAgent, deterministic: bool = True, rng=None):
        self.agent = agent
        self.deterministic = deterministic
        self.rng = rng

    def reset(self) -> None:
        pass

    def act(self, obs: np.ndarray) -> np.ndarray:
        return self.agent.select_action(obs, deterministic=self.deterministic, rng=self.rng)


class ScriptedGraspPolicy:
    """Go to the cube, align yaw, close, lift.

    Works from observations only. The base motion is estimated from the last
    observed gripper displacement minus the last commanded displacement and
    fed forward, so the controller also tracks slow periodic waves.
    """

    def __init__(self, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        self.reset()

    def reset(self) -> None:
        self._last_cmd = None
        self._last_grip = None

    def act(self, stacked_obs: np.ndarray) -> np.ndarray:
        cfg = self.config
        o = np.asarray(stacked_obs, dtype=np.float64)[:OBS_DIM]
        cube, grip = o[0:3], o[3:6]
        aperture = (o[7] + 1.0) / 2.0 * cfg.w_max

        drift = np.zeros(3)
        if self._last_grip is not None:
            drift = (grip - self._last_grip) - self._last_cmd
        target = cube + np.array([0.0, 0.0, cfg.grasp_height_offset])
        err = target - grip
        q = math.pi / 2
        yaw_err = (wrap_angle(o[9] - o[8]) + q / 2) % q - q / 2

        action = np.zeros(ACTION_DIM)
        holding = abs(aperture - cfg.cube_side) < 1e-9 and np.hypot(err[0], err[1]) <= cfg.tol_xy
        if holding and abs(err[2]) <= cfg.tol_z:
            move = np.array([-drift[0], -drift[1], cfg.beta_pos])
            action[4] = -1.0
        else:
            move = err - drift
            aligned = np.hypot(err[0], err[1]) < 0.006 and abs(err[2]) < 0.008 and abs(yaw_err) < 0.08
            action[3] = np.clip(yaw_err / cfg.beta_yaw, -1.0, 1.0)
            action[4] = -1.0 if aligned else 1.0
        action[:3] = np.clip(move / cfg.beta_pos, -1.0, 1.0)

        self._last_grip = grip.copy()
        self._last_cmd = action[:3] * cfg.beta_pos
        return action
