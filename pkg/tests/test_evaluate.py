import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavegrasp.env import EnvConfig, WaveGraspEnv
from wavegrasp.errors import ConfigurationError
from wavegrasp.evaluate import (
    TRACE_COLUMNS,
    EvalProtocol,
    TrialTrace,
    distance_decay_stat,
    evaluate,
    run_trial,
)
from wavegrasp.plots import distance_traces, success_rates, training_curve
from wavegrasp.policies import ScriptedGraspPolicy
from wavegrasp.wave import preset


@pytest.fixture(scope="module")
def oracle_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("eval")
    report = evaluate(ScriptedGraspPolicy(), EvalProtocol(trials=5), out_dir=out)
    return report, out


def test_protocol_defaults():
    p = EvalProtocol()
    assert (p.trials, p.time_limit, p.success_lift, p.sea_states) == (15, 30.0, 0.20, (0, 1, 2))
    assert p.trial_seeds() == list(range(10_000, 10_015))


def test_protocol_rejects_bad_values():
    with pytest.raises(ConfigurationError):
        EvalProtocol(trials=0)
    with pytest.raises(ConfigurationError):
        EvalProtocol(sea_states=(3,))


def test_oracle_succeeds_everywhere(oracle_report):
    report, _ = oracle_report
    for s in (0, 1, 2):
        assert report[s]["success_rate"] == 1.0
        assert report[s]["successes"] == report[s]["trials"] == 5
        assert all(t.cube_z[-1] >= 0.20 for t in report[s]["traces"])


def test_summary_schema(oracle_report):
    _, out = oracle_report
    summary = json.loads((out / "summary.json").read_text())
    assert sorted(summary) == ["0", "1", "2"]
    for entry in summary.values():
        assert {"success_rate", "trials", "successes", "mean_steps", "trace_files", "decay"} <= set(entry)
        assert 0.0 <= entry["success_rate"] <= 1.0
        assert len(entry["trace_files"]) == entry["trials"]


def test_trace_csv(oracle_report):
    report, out = oracle_report
    name = report[2]["trace_files"][0]
    with open(out / name, newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == TRACE_COLUMNS
    trace = report[2]["traces"][0]
    assert len(rows) - 1 == len(trace)
    assert [float(r[1]) for r in rows[1:]] == trace.dist


def test_time_limit_is_300_steps():
    class Idle:
        def reset(self):
            pass

        def act(self, obs):
            return np.zeros(5)

    trace = run_trial(Idle(), EnvConfig(), preset(1), seed=0, max_steps=300)
    assert len(trace) == 300 and not trace.success
    assert trace.t[-1] == pytest.approx(30.0)


def test_state0_matches_static_environment():
    policy = ScriptedGraspPolicy()
    report = evaluate(policy, EvalProtocol(trials=2, sea_states=(0,)))
    for i, seed in enumerate(EvalProtocol().trial_seeds()[:2]):
        env = WaveGraspEnv(EnvConfig(), preset(0), max_steps=300)
        obs = env.reset(seed=seed)
        policy.reset()
        dists = []
        while not env.done:
            r = env.step(policy.act(obs))
            obs = r.observation
            dists.append(r.info["dist"])
        assert dists == report[0]["traces"][i].dist


class TestDecayStat:
    def test_shrinking_peaks_positive(self):
        t = np.arange(200)
        d = (0.3 - 0.0012 * t) * (1 + np.sin(t / 5)) / 2
        assert distance_decay_stat(d) > 0

    def test_constant_is_zero(self):
        assert distance_decay_stat([0.2] * 40) == 0.0

    def test_growing_negative(self):
        assert distance_decay_stat(np.linspace(0, 1, 50)) < 0

    def test_accepts_trace(self):
        tr = TrialTrace(seed=0, sea_state=1, dist=[4.0, 3.0, 2.0, 1.0])
        assert distance_decay_stat(tr) == 3.0

    def test_empty(self):
        with pytest.raises(ValueError):
            distance_decay_stat([])

    @given(st.lists(st.floats(0, 5), min_size=1, max_size=80), st.floats(0.01, 10))
    def test_scale_equivariant(self, d, k):
        assert distance_decay_stat(np.array(d) * k) == pytest.approx(k * distance_decay_stat(d), abs=1e-9)


def test_figures_written(oracle_report, tmp_path):
    report, _ = oracle_report
    paths = [
        distance_traces(report[1]["traces"], tmp_path / "d.png", "state 1"),
        success_rates(report, tmp_path / "s.png", {0: 0.933, 1: 0.87, 2: 0.8}),
        training_curve([1, 2, 3, 4, 5, 6], [1, 1.5, 2, 2.5, 3, 4], tmp_path / "t.png"),
    ]
    for p in paths:
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
