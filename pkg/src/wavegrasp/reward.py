"""Dense per-step reward: reach (position + yaw), grasp, lift and success terms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

GRASP_BONUS = 0.5
LIFT_BONUS = 2.0
SUCCESS_BONUS = 5.0
POSITION_GAIN = 1.66
MAX_STEP_REWARD = 1.0 + 1.0 + GRASP_BONUS + LIFT_BONUS + SUCCESS_BONUS


def wrap_angle(a: float) -> float:
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def angle_diff(a: float, b: float) -> float:
    """Absolute wrapped difference in [0, pi]."""
    return abs(wrap_angle(a - b))


def reach_position(dist: float) -> float:
    return 1.0 - math.tanh(POSITION_GAIN * dist)


def reach_orientation(psi_cube: float, psi_g: float) -> float:
    # 2*pi-periodic on purpose, but not mod pi/2: yaw reward stays literal
    return 1.0 - math.tanh(angle_diff(psi_cube, psi_g))


@dataclass(frozen=True)
class RewardBreakdown:
    reach_pos: float
    reach_ori: float
    grasp: float
    lift: float
    success: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def step_reward(
    dist: float,
    psi_cube: float,
    psi_g: float,
    contact: bool,
    cube_z: float,
    attached: bool,
    cube_side: float,
    lift_partial: float = 0.01,
    lift_success: float = 0.20,
) -> RewardBreakdown:
    """Sum of the five reward terms for a post-step state.

    ``lift_partial`` is measured from the resting height (cube centre at
    ``cube_side / 2``); ``lift_success`` is an absolute cube-centre height.
    """
    rp = reach_position(dist)
    ro = reach_orientation(psi_cube, psi_g)
    grasp = GRASP_BONUS if contact else 0.0
    lift = LIFT_BONUS if (contact and cube_z >= cube_side / 2 + lift_partial) else 0.0
    success = SUCCESS_BONUS if (attached and cube_z >= lift_success) else 0.0
    return RewardBreakdown(rp, ro, grasp, lift, success, rp + ro + grasp + lift + success)
