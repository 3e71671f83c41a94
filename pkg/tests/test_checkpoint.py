import struct

import numpy as np
import pytest

from wavegrasp.checkpoint import CKPT_MAGIC, PolicyCheckpoint, config_hash
from wavegrasp.env import EnvConfig
from wavegrasp.errors import CheckpointIncompatibleError, CheckpointVersionError, CorruptCheckpointError
from wavegrasp.evaluate import EvalProtocol, evaluate
from wavegrasp.policies import ActorPolicy
from wavegrasp.sac import SacAgent, SacConfig

SMALL = SacConfig(actor_hidden=(16, 16), critic_hidden=(16, 16))


@pytest.fixture
def agent():
    return SacAgent(SMALL, seed=3)


def test_roundtrip_bitwise(agent, tmp_path):
    ck = PolicyCheckpoint.from_agent(agent, EnvConfig(), {"episode": 7})
    path = ck.save(tmp_path / "p.wgc")
    back = PolicyCheckpoint.load(path)
    x = np.random.default_rng(0).normal(size=(6, 30))
    assert np.array_equal(back.actor(x), agent.actor(x))
    assert back.to_bytes() == ck.to_bytes()
    assert back.meta["episode"] == 7
    assert back.log_alpha == agent.log_alpha
    assert np.array_equal(back.obs_scale, agent.obs_scale)


def test_restored_agent_matches(agent):
    back = PolicyCheckpoint.from_bytes(PolicyCheckpoint.from_agent(agent, EnvConfig()).to_bytes()).to_agent()
    obs = np.random.default_rng(1).normal(size=30)
    assert np.array_equal(back.select_action(obs, deterministic=True), agent.select_action(obs, deterministic=True))
    for a, b in zip(back.q1_target.params, agent.q1_target.params):
        assert np.array_equal(a, b)


def test_identical_eval_traces(agent):
    ck = PolicyCheckpoint.from_agent(agent, EnvConfig())
    back = PolicyCheckpoint.from_bytes(ck.to_bytes())
    proto = EvalProtocol(trials=2, time_limit=5.0, sea_states=(1,))
    a = evaluate(ActorPolicy(agent), proto)[1]["traces"]
    b = evaluate(back, proto)[1]["traces"]
    for ta, tb in zip(a, b):
        assert ta.dist == tb.dist and ta.reward == tb.reward


def test_actor_only(agent):
    ck = PolicyCheckpoint.from_agent(agent, EnvConfig(), include_critics=False)
    back = PolicyCheckpoint.from_bytes(ck.to_bytes())
    assert back.critics is None
    assert len(ck.to_bytes()) < len(PolicyCheckpoint.from_agent(agent, EnvConfig()).to_bytes())


def test_config_hash_tracks_config():
    base = config_hash(EnvConfig(), SMALL)
    assert base == config_hash(EnvConfig(), SMALL)
    assert base != config_hash(EnvConfig(beta_pos=0.04), SMALL)
    assert len(bytes.fromhex(base)) == 32


class TestCorruption:
    def test_truncated(self, agent):
        data = PolicyCheckpoint.from_agent(agent, EnvConfig()).to_bytes()
        for cut in (0, 5, 40, len(data) // 2, len(data) - 1):
            with pytest.raises(CorruptCheckpointError):
                PolicyCheckpoint.from_bytes(data[:cut])

    def test_trailing_garbage(self, agent):
        data = PolicyCheckpoint.from_agent(agent, EnvConfig()).to_bytes()
        with pytest.raises(CorruptCheckpointError):
            PolicyCheckpoint.from_bytes(data + b"\0")

    def test_bad_magic(self):
        with pytest.raises(CorruptCheckpointError):
            PolicyCheckpoint.from_bytes(b"this is not a checkpoint at all")

    def test_version(self, agent):
        data = bytearray(PolicyCheckpoint.from_agent(agent, EnvConfig()).to_bytes())
        data[len(CKPT_MAGIC):len(CKPT_MAGIC) + 4] = struct.pack("<I", 2)
        with pytest.raises(CheckpointVersionError):
            PolicyCheckpoint.from_bytes(bytes(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorruptCheckpointError):
            PolicyCheckpoint.load(tmp_path / "absent.wgc")


def test_dimension_mismatch_rejected():
    agent = SacAgent(SMALL, seed=0, obs_dim=12, act_dim=5)
    ck = PolicyCheckpoint.from_agent(agent, EnvConfig())
    with pytest.raises(CheckpointIncompatibleError):
        ck.check_compatible()
    with pytest.raises(CheckpointIncompatibleError):
        evaluate(ck, EvalProtocol(trials=1, time_limit=1.0))
