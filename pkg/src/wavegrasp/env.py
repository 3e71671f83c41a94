"""Kinematic wave-disturbed top-grasp environment.

A free-flying, downward-pointing gripper is commanded in the base frame; its
world pose is the command plus the sea-state base offset. The cube rests on
a static dock until a grasp attaches it rigidly to the gripper.

Observation slot order (10 numbers, newest first when stacked)::

    0-2  cube position (world, m)
    3-5  gripper position (world, m)
    6    gripper-cube distance (m)
    7    gripper state in [-1, 1]: -1 fully closed, 1 fully open
    8    gripper yaw (rad)
    9    cube yaw (rad)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigurationError, InputError, ProtocolError
from .reward import RewardBreakdown, step_reward, wrap_angle
from .wave import SeaStateSpec, wave_offset

OBS_DIM = 10
STACK = 3
STACKED_OBS_DIM = OBS_DIM * STACK
ACTION_DIM = 5
OBS_FIELDS = (
    "cube_x", "cube_y", "cube_z",
    "grip_x", "grip_y", "grip_z",
    "dist", "g_state", "psi_g", "psi_cube",
)  # fmt: skip

APERTURE_SLACK = 0.005  # contact allows aperture up to cube_side + this


@dataclass(frozen=True)
class EnvConfig:
    beta_pos: float = 0.05  # m per unit action per step
    beta_yaw: float = 0.1  # rad per unit action per step
    dt: float = 0.1  # s per step
    cube_side: float = 0.05
    w_max: float = 0.10
    aperture_rate: float = 0.05  # m per step; one step spans half the stroke
    workspace_low: tuple[float, float, float] = (-0.5, -0.5, 0.02)
    workspace_high: tuple[float, float, float] = (0.5, 0.5, 0.6)
    spawn_low: tuple[float, float] = (-0.15, -0.15)
    spawn_high: tuple[float, float] = (0.15, 0.15)
    home: tuple[float, float, float] = (0.0, 0.0, 0.35)
    episode_len_train: int = 100
    lift_partial: float = 0.01
    lift_success: float = 0.20
    tol_xy: float = 0.015
    tol_z: float = 0.02
    tol_yaw: float = 0.15
    grasp_height_offset: float = 0.0
    terminate_on_success: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("workspace_low", "workspace_high", "spawn_low", "spawn_high", "home"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        for name in (
            "beta_pos", "beta_yaw", "dt", "cube_side", "w_max", "aperture_rate",
            "lift_partial", "lift_success", "tol_xy", "tol_z", "tol_yaw",
        ):  # fmt: skip
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(name, f"must be a positive finite number, got {v!r}")
        if self.episode_len_train < 1:
            raise ConfigurationError("episode_len_train", "must be >= 1")
        if self.lift_partial >= self.lift_success:
            raise ConfigurationError("lift_partial", "must be smaller than lift_success")
        if self.cube_side >= self.w_max:
            raise ConfigurationError("cube_side", "cube must fit between the open fingers")
        if len(self.workspace_low) != 3 or len(self.workspace_high) != 3:
            raise ConfigurationError("workspace_low", "workspace bounds are 3-vectors")
        if any(lo >= hi for lo, hi in zip(self.workspace_low, self.workspace_high)):
            raise ConfigurationError("workspace_high", "must exceed workspace_low on every axis")
        if len(self.spawn_low) != 2 or len(self.spawn_high) != 2:
            raise ConfigurationError("spawn_low", "spawn bounds are 2-vectors")
        for i in range(2):
            if not (self.spawn_low[i] < self.spawn_high[i]):
                raise ConfigurationError("spawn_high", "must exceed spawn_low")
            if self.spawn_low[i] < self.workspace_low[i] or self.spawn_high[i] > self.workspace_high[i]:
                raise ConfigurationError("spawn_low", "spawn region must lie inside the workspace")
        if len(self.home) != 3 or any(
            not (lo <= h <= hi) for lo, h, hi in zip(self.workspace_low, self.home, self.workspace_high)
        ):
            raise ConfigurationError("home", "home pose must lie inside the workspace")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        known = {f.name for f in fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigurationError(k, "unknown environment field")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass
class GripperState:
    commanded_position: np.ndarray
    world_position: np.ndarray
    yaw: float
    aperture: float
    target_aperture: float


@dataclass
class CubeState:
    position: np.ndarray
    yaw: float
    side: float
    attached: bool = False


@dataclass
class WorldState:
    gripper: GripperState
    cube: CubeState
    t: int = 0  # step index; sim time is t * dt
    # rigid grasp offset (cube minus gripper) while attached
    grasp_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grasp_yaw_offset: float = 0.0


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    info: dict


def clamp_action(action) -> np.ndarray:
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape != (ACTION_DIM,):
        raise InputError(f"action must have {ACTION_DIM} components, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("action contains non-finite values")
    return np.clip(a, -1.0, 1.0)


def yaw_misalignment(psi_a: float, psi_b: float) -> float:
    """Distance between yaws modulo the cube's 4-fold symmetry, in [0, pi/4]."""
    q = math.pi / 2
    d = (psi_a - psi_b) % q
    return min(d, q - d)


def in_grasp_pose(gripper: GripperState, cube: CubeState, config: EnvConfig) -> bool:
    """Fingers straddle the cube: position and yaw within tolerance, aperture ignored."""
    g, c = gripper.world_position, cube.position
    if math.hypot(g[0] - c[0], g[1] - c[1]) > config.tol_xy:
        return False
    if abs(g[2] - (c[2] + config.grasp_height_offset)) > config.tol_z:
        return False
    return yaw_misalignment(gripper.yaw, cube.yaw) <= config.tol_yaw


def contact_check(gripper: GripperState, cube: CubeState, config: EnvConfig) -> bool:
    """Both fingers touch the cube.

    Requires the grasp pose and an aperture in [cube_side, cube_side + 5 mm];
    a gripper that is already narrower than the cube is not around it.
    """
    if not in_grasp_pose(gripper, cube, config):
        return False
    return cube.side - 1e-12 <= gripper.aperture <= cube.side + APERTURE_SLACK


def gripper_state_signal(aperture: float, w_max: float) -> float:
    return 2.0 * aperture / w_max - 1.0


def build_observation(state: WorldState, config: EnvConfig) -> np.ndarray:
    g, c = state.gripper, state.cube
    obs = np.empty(OBS_DIM)
    obs[0:3] = c.position
    obs[3:6] = g.world_position
    obs[6] = float(np.linalg.norm(c.position - g.world_position))
    obs[7] = gripper_state_signal(g.aperture, config.w_max)
    obs[8] = g.yaw
    obs[9] = c.yaw
    return obs


def stack_observations(history) -> np.ndarray:
    """Concatenate [s_t, s_{t-1}, s_{t-2}], newest last in ``history``.

    Missing older slots repeat the oldest available observation.
    """
    if len(history) == 0:
        raise InputError("observation history is empty")
    recent = list(history)[-STACK:][::-1]
    while len(recent) < STACK:
        recent.append(recent[-1])
    return np.concatenate(recent)


class WaveGraspEnv:
    """Single-threaded simulator instance.

    ``max_steps`` defaults to ``config.episode_len_train``; evaluation uses a
    longer window. ``sea_state`` can be changed between episodes via ``reset``.
    """

    def __init__(
        self,
        config: EnvConfig | None = None,
        sea_state: SeaStateSpec | None = None,
        max_steps: int | None = None,
    ):
        self.config = config or EnvConfig()
        self.config.validate()
        self.sea_state = sea_state or SeaStateSpec()
        self.max_steps = int(max_steps or self.config.episode_len_train)
        if self.max_steps < 1:
            raise ConfigurationError("max_steps", "must be >= 1")
        self.state: WorldState | None = None
        self._history: list[np.ndarray] = []
        self._done = True
        self._low = np.array(self.config.workspace_low)
        self._high = np.array(self.config.workspace_high)

    # -- episode control -------------------------------------------------

    def reset(self, seed: int | None = None, sea_state: SeaStateSpec | None = None) -> np.ndarray:
        cfg = self.config
        if sea_state is not None:
            sea_state.validate()
            self.sea_state = sea_state
        rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
        xy = rng.uniform(cfg.spawn_low, cfg.spawn_high)
        cube_yaw = rng.uniform(-math.pi, math.pi)
        cube = CubeState(
            position=np.array([xy[0], xy[1], cfg.cube_side / 2]),
            yaw=float(wrap_angle(cube_yaw)),
            side=cfg.cube_side,
        )
        home = np.array(cfg.home)
        gripper = GripperState(
            commanded_position=home.copy(),
            world_position=home.copy(),
            yaw=0.0,
            aperture=cfg.w_max,
            target_aperture=cfg.w_max,
        )
        self.state = WorldState(gripper=gripper, cube=cube, t=0)
        self._place_gripper()
        self._done = False
        self._history = [build_observation(self.state, cfg)]
        return stack_observations(self._history)

    def wave_offset_now(self) -> np.ndarray:
        return wave_offset(self.sea_state, self.state.t * self.config.dt)

    def _place_gripper(self) -> None:
        """World pose = command + base offset, kept above the dock surface."""
        s, cfg = self.state, self.config
        world = s.gripper.commanded_position + self.wave_offset_now()
        floor = cfg.workspace_low[2]
        if s.cube.attached:
            floor = max(floor, cfg.cube_side / 2 - s.grasp_offset[2])
        world[2] = max(world[2], floor)
        s.gripper.world_position = world

    def step(self, action) -> StepResult:
        if self.state is None or self._done:
            raise ProtocolError("step() called with no active episode; call reset() first")
        cfg, s = self.config, self.state
        a = clamp_action(action)
        g, c = s.gripper, s.cube

        g.commanded_position = np.clip(g.commanded_position + a[:3] * cfg.beta_pos, self._low, self._high)
        g.yaw = float(wrap_angle(g.yaw + float(a[3]) * cfg.beta_yaw))
        g.target_aperture = cfg.w_max * (a[4] + 1.0) / 2.0
        s.t += 1
        self._place_gripper()

        release = c.side + APERTURE_SLACK
        if c.attached:
            if g.target_aperture > release:
                g.aperture = min(g.aperture + cfg.aperture_rate, g.target_aperture)
                if g.aperture > release:
                    c.attached = False
                    c.position = c.position.copy()
                    c.position[2] = c.side / 2
        else:
            old = g.aperture
            step = np.clip(g.target_aperture - old, -cfg.aperture_rate, cfg.aperture_rate)
            new = min(max(old + step, 0.0), cfg.w_max)
            # fingers closing around the cube stop at its faces
            eps = 1e-9
            if old >= c.side - eps and new <= c.side + eps and in_grasp_pose(g, c, cfg):
                new = c.side
            g.aperture = new
            if new == c.side and contact_check(g, c, cfg):
                c.attached = True
                s.grasp_offset = c.position - g.world_position
                s.grasp_yaw_offset = c.yaw - g.yaw

        if c.attached:
            c.position = g.world_position + s.grasp_offset
            c.yaw = float(wrap_angle(g.yaw + s.grasp_yaw_offset))

        obs = build_observation(s, cfg)
        self._history.append(obs)
        if len(self._history) > STACK:
            self._history.pop(0)

        contact = contact_check(g, c, cfg)
        rb = self.reward_breakdown(obs, contact)
        success = c.attached and c.position[2] >= cfg.lift_success
        terminated = bool(success and cfg.terminate_on_success)
        truncated = bool(not terminated and s.t >= self.max_steps)
        self._done = terminated or truncated
        info = {
            "dist": float(obs[6]),
            "contact": bool(contact),
            "attached": bool(c.attached),
            "cube_z": float(c.position[2]),
            "wave_offset": [float(v) for v in self.wave_offset_now()],
            "success": bool(success),
            "reward_terms": rb.to_dict(),
        }
        return StepResult(stack_observations(self._history), rb.total, terminated, truncated, info)

    def reward_breakdown(self, obs: np.ndarray, contact: bool) -> RewardBreakdown:
        cfg, c = self.config, self.state.cube
        return step_reward(
            dist=float(obs[6]),
            psi_cube=c.yaw,
            psi_g=self.state.gripper.yaw,
            contact=contact,
            cube_z=float(c.position[2]),
            attached=c.attached,
            cube_side=cfg.cube_side,
            lift_partial=cfg.lift_partial,
            lift_success=cfg.lift_success,
        )

    @property
    def done(self) -> bool:
        return self._done
