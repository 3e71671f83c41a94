"""Run configuration: YAML file with ``env``, ``sea_state``, ``sac``, ``train``
and ``eval`` sections, plus ``section.key=value`` command-line overrides.

Precedence is override > file > built-in default. Every key is optional.

Example::

    env:
      beta_pos: 0.05
    sac:
      lr: 0.0001
    train:
      episodes: 3000
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .env import EnvConfig
from .errors import ConfigurationError
from .evaluate import EvalProtocol
from .sac import SacConfig
from .train import TrainConfig

SECTIONS = ("env", "sac", "train", "eval")
DEFAULT_SEED = 0


@dataclass
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalProtocol = field(default_factory=EvalProtocol)

    def to_dict(self) -> dict:
        return {
            "env": self.env.to_dict(),
            "sac": self.sac.to_dict(),
            "train": self.train.to_dict(),
            "eval": {
                "trials": self.eval.trials,
                "time_limit": self.eval.time_limit,
                "success_lift": self.eval.success_lift,
                "sea_states": list(self.eval.sea_states),
                "base_seed": self.eval.base_seed,
            },
        }


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(str(path), f"unparseable YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(str(path), "top level must be a mapping")
    for k, v in data.items():
        if k not in SECTIONS:
            raise ConfigurationError(k, f"unknown section (expected one of {', '.join(SECTIONS)})")
        if not isinstance(v, dict):
            raise ConfigurationError(k, "section must be a mapping")
    return data


def parse_override(text: str) -> tuple[str, str, object]:
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigurationError(text, "override must look like section.key=value")
    key, raw = text.split("=", 1)
    section, name = key.split(".", 1)
    if section not in SECTIONS:
        raise ConfigurationError(section, "unknown section in override")
    return section, name, yaml.safe_load(raw)


def build_config(path=None, overrides=()) -> RunConfig:
    raw = {s: {} for s in SECTIONS}
    if path is not None:
        for s, v in read_config_file(path).items():
            raw[s].update(v)
    for text in overrides:
        section, name, value = parse_override(text)
        raw[section][name] = value
    ev = dict(raw["eval"])
    if "sea_states" in ev:
        ev["sea_states"] = tuple(ev["sea_states"])
    unknown = set(ev) - set(EvalProtocol.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(sorted(unknown)[0], "unknown eval field")
    try:
        return RunConfig(
            env=EnvConfig.from_dict(raw["env"]),
            sac=SacConfig.from_dict(raw["sac"]),
            train=TrainConfig.from_dict(raw["train"]),
            eval=EvalProtocol(**ev),
        )
    except TypeError as exc:
        raise ConfigurationError("config", str(exc)) from None
