"""Policy checkpoint files.

Layout (little-endian)::

    b"WGCKPT\\0\\0"      magic, 8 bytes
    version             u32
    obs_dim, act_dim    u32, u32
    flags               u32   bit 0: critics present
    config_hash         32 bytes, SHA-256 of the canonical env+sac config JSON
    log_alpha           f64
    obs_scale           obs_dim x f64
    meta_len            u32, then meta_len bytes of UTF-8 JSON
    actor               network stream (see wavegrasp.nn)
    [q1, q2, q1_target, q2_target]   if flag bit 0
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .env import ACTION_DIM, STACKED_OBS_DIM, EnvConfig
from .errors import CheckpointIncompatibleError, CheckpointVersionError, CorruptCheckpointError
from .nn import Mlp
from .sac import SacAgent, SacConfig

CKPT_MAGIC = b"WGCKPT\0\0"
CKPT_VERSION = 1
FLAG_CRITICS = 1


def config_hash(env_config: EnvConfig, sac_config: SacConfig) -> str:
    blob = json.dumps({"env": env_config.to_dict(), "sac": sac_config.to_dict()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class PolicyCheckpoint:
    actor: Mlp
    obs_scale: np.ndarray
    log_alpha: float
    config_hash: str
    meta: dict = field(default_factory=dict)
    critics: list[Mlp] | None = None  # q1, q2, q1_target, q2_target

    @property
    def obs_dim(self) -> int:
        return self.actor.widths[0]

    @property
    def act_dim(self) -> int:
        return self.actor.widths[-1] // 2

    @classmethod
    def from_agent(cls, agent: SacAgent, env_config: EnvConfig, meta: dict | None = None,
                   include_critics: bool = True) -> "PolicyCheckpoint":
        meta = dict(meta or {})
        meta.setdefault("env_config", env_config.to_dict())
        meta.setdefault("sac_config", agent.config.to_dict())
        critics = None
        if include_critics:
            critics = [n.copy() for n in (agent.q1, agent.q2, agent.q1_target, agent.q2_target)]
        return cls(
            actor=agent.actor.copy(),
            obs_scale=agent.obs_scale.copy(),
            log_alpha=agent.log_alpha,
            config_hash=config_hash(env_config, agent.config),
            meta=meta,
            critics=critics,
        )

    def env_config(self) -> EnvConfig:
        return EnvConfig.from_dict(self.meta["env_config"]) if "env_config" in self.meta else EnvConfig()

    def sac_config(self) -> SacConfig:
        return SacConfig.from_dict(self.meta["sac_config"]) if "sac_config" in self.meta else SacConfig()

    def to_agent(self) -> SacAgent:
        """A SacAgent carrying this checkpoint's weights (critics only if stored)."""
        agent = SacAgent(self.sac_config(), obs_dim=self.obs_dim, act_dim=self.act_dim,
                         obs_scale=self.obs_scale)
        agent.actor = self.actor.copy()
        if self.critics is not None:
            agent.q1, agent.q2, agent.q1_target, agent.q2_target = (c.copy() for c in self.critics)
        agent.log_alpha = self.log_alpha
        return agent

    def check_compatible(self, obs_dim: int = STACKED_OBS_DIM, act_dim: int = ACTION_DIM) -> None:
        if self.obs_dim != obs_dim or self.act_dim != act_dim:
            raise CheckpointIncompatibleError(
                f"checkpoint is obs {self.obs_dim} / act {self.act_dim}, environment needs "
                f"obs {obs_dim} / act {act_dim}"
            )

    # -- bytes -------------------------------------------------------------

    def to_bytes(self) -> bytes:
        flags = FLAG_CRITICS if self.critics is not None else 0
        meta = json.dumps(self.meta, sort_keys=True).encode()
        out = [
            CKPT_MAGIC,
            struct.pack("<IIII", CKPT_VERSION, self.obs_dim, self.act_dim, flags),
            bytes.fromhex(self.config_hash),
            struct.pack("<d", self.log_alpha),
            np.ascontiguousarray(self.obs_scale, dtype="<f8").tobytes(),
            struct.pack("<I", len(meta)),
            meta,
            self.actor.to_bytes(),
        ]
        if self.critics is not None:
            out += [c.to_bytes() for c in self.critics]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PolicyCheckpoint":
        buf = memoryview(bytes(data))
        pos = 0

        def take(n):
            nonlocal pos
            if pos + n > len(buf):
                raise CorruptCheckpointError("checkpoint truncated")
            chunk = bytes(buf[pos : pos + n])
            pos += n
            return chunk

        if take(len(CKPT_MAGIC)) != CKPT_MAGIC:
            raise CorruptCheckpointError("not a policy checkpoint (bad magic)")
        version, obs_dim, act_dim, flags = struct.unpack("<IIII", take(16))
        if version != CKPT_VERSION:
            raise CheckpointVersionError(f"checkpoint version {version}, expected {CKPT_VERSION}")
        if not (0 < obs_dim < 1 << 16 and 0 < act_dim < 1 << 16):
            raise CorruptCheckpointError("implausible dimensions in header")
        chash = take(32).hex()
        (log_alpha,) = struct.unpack("<d", take(8))
        obs_scale = np.frombuffer(take(8 * obs_dim), dtype="<f8").astype(np.float64)
        (meta_len,) = struct.unpack("<I", take(4))
        try:
            meta = json.loads(take(meta_len).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptCheckpointError(f"unreadable metadata: {exc}") from None
        actor, pos = Mlp._read(buf, pos)
        critics = None
        if flags & FLAG_CRITICS:
            critics = []
            for _ in range(4):
                net, pos = Mlp._read(buf, pos)
                critics.append(net)
        if pos != len(buf):
            raise CorruptCheckpointError(f"{len(buf) - pos} trailing bytes")
        if actor.widths[0] != obs_dim or actor.widths[-1] != 2 * act_dim:
            raise CorruptCheckpointError("actor shape disagrees with header dimensions")
        if not math.isfinite(log_alpha) and log_alpha != -math.inf:
            raise CorruptCheckpointError("non-finite log_alpha")
        return cls(actor, obs_scale, log_alpha, chash, meta, critics)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def load(cls, path) -> "PolicyCheckpoint":
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise CorruptCheckpointError(f"cannot read checkpoint {path}: {exc}") from None
        return cls.from_bytes(data)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
