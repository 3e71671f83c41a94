"""Fast self-checks, printed one per line as ``PASS|FAIL <name> <detail>``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .checkpoint import PolicyCheckpoint
from .env import EnvConfig, WaveGraspEnv
from .nn import Mlp
from .reward import MAX_STEP_REWARD, reach_orientation, reach_position
from .sac import SacAgent, SacConfig
from .wave import preset, wave_offset


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.detail}"


def numeric_gradients(net: Mlp, x: np.ndarray, upstream: np.ndarray, h: float = 1e-5) -> list[np.ndarray]:
    """Central differences of sum(upstream * net(x)) w.r.t. every parameter."""
    out = []
    for p in net.params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            fp = float(np.sum(upstream * net.forward(x)))
            flat[i] = keep - h
            fm = float(np.sum(upstream * net.forward(x)))
            flat[i] = keep
            gflat[i] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def near_kink(net: Mlp, x: np.ndarray, margin: float = 1e-7) -> bool:
    """True if any hidden pre-activation is within ``margin`` of zero."""
    h = np.atleast_2d(x)
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = h @ w + b
        if np.any(np.abs(z) < margin):
            return True
        h = np.maximum(z, 0.0)
    return False


def gradient_check(n_nets: int = 100, seed: int = 0, h: float = 1e-5, backward=None) -> tuple[float, int]:
    """Worst relative error between analytic and finite-difference gradients.

    ``backward(net, cache, upstream)`` replaces :meth:`Mlp.backward` when given
    (used to inject faults). Returns ``(max_rel_err, nets_checked)``.
    """
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for _ in range(n_nets):
        widths = [int(rng.integers(1, 5)) for _ in range(int(rng.integers(2, 5)))]
        net = Mlp(widths, rng)
        x = rng.normal(size=(int(rng.integers(1, 4)), widths[0]))
        if near_kink(net, x):
            continue
        upstream = rng.normal(size=(x.shape[0], widths[-1]))
        _, cache = net.forward(x, return_cache=True)
        if backward is None:
            grads, _ = net.backward(cache, upstream)
        else:
            grads = backward(net, cache, upstream)
        for ga, gn in zip(grads, numeric_gradients(net, x, upstream, h)):
            denom = np.maximum(np.abs(ga) + np.abs(gn), 1e-8)
            worst = max(worst, float(np.max(np.abs(ga - gn) / denom)))
        checked += 1
    return worst, checked


def _faulty_backward(net, cache, upstream):
    grads, _ = net.backward(cache, upstream)
    grads[0] = grads[0] * 1.01
    return grads


def run_checks(fault: str | None = None) -> list[CheckResult]:
    """Run all self-checks. ``fault="gradient"`` corrupts backprop (negative control)."""
    results = []

    backward = _faulty_backward if fault == "gradient" else None
    err, n = gradient_check(n_nets=30, backward=backward)
    results.append(CheckResult("gradient_check", err < 1e-5 and n > 0, f"max_rel_err={err:.2e} nets={n}"))

    pts = [
        reach_position(0.0) == 1.0,
        abs(reach_position(0.5) - 0.319524) < 1e-4,
        abs(reach_orientation(math.pi / 4, 0.0) - 0.344206) < 1e-4,
        MAX_STEP_REWARD == 9.5,
    ]
    results.append(CheckResult("reward_points", all(pts), f"{sum(pts)}/{len(pts)}"))

    worst = 0.0
    for code in (0, 1, 2):
        spec = preset(code)
        for t in np.linspace(0.0, 50.0, 101):
            worst = max(worst, float(np.max(np.abs(wave_offset(spec, t) - wave_offset(spec, t + spec.period)))))
    results.append(CheckResult("wave_periodicity", worst < 1e-9, f"max_residual={worst:.1e}"))

    traces = []
    for _ in range(2):
        env = WaveGraspEnv(EnvConfig(), preset(1))
        rng = np.random.default_rng(5)
        obs = [env.reset(seed=7)]
        while not env.done:
            obs.append(env.step(rng.uniform(-1, 1, 5)).observation)
        traces.append(np.array(obs))
    same = traces[0].shape == traces[1].shape and np.array_equal(traces[0], traces[1])
    results.append(CheckResult("env_determinism", same, f"steps={len(traces[0]) - 1}"))

    agent = SacAgent(SacConfig(actor_hidden=(16,), critic_hidden=(16,)), seed=1)
    ck = PolicyCheckpoint.from_agent(agent, EnvConfig())
    back = PolicyCheckpoint.from_bytes(ck.to_bytes())
    x = np.random.default_rng(2).normal(size=(4, 30))
    rt = np.array_equal(agent.actor(x), back.actor(x)) and back.to_bytes() == ck.to_bytes()
    results.append(CheckResult("checkpoint_roundtrip", rt, "bitwise" if rt else "mismatch"))
    return results
