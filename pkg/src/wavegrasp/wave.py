"""Base-motion offsets for WMO sea states 0-2.

Heave is a pure sinusoid; surge and sway are attenuated, phase-shifted copies
of it. Code 0 (calm, glassy) is identically zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

# wmo_code -> (lower exclusive, upper inclusive) wave amplitude, metres
WMO_AMPLITUDE_BANDS = {0: (0.0, 0.0), 1: (0.0, 0.1), 2: (0.1, 0.5)}

DEFAULT_PERIOD = 5.0
DEFAULT_PHASES = (0.0, math.pi / 3, 2 * math.pi / 3)  # heave, surge, sway


@dataclass(frozen=True)
class SeaStateSpec:
    wmo_code: int = 0
    amplitude: float = 0.0  # metres
    period: float = DEFAULT_PERIOD  # seconds
    surge_frac: float = 0.4
    sway_frac: float = 0.4
    phases: tuple[float, float, float] = field(default=DEFAULT_PHASES)

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        self.validate()

    def validate(self) -> None:
        if self.wmo_code not in WMO_AMPLITUDE_BANDS:
            raise ConfigurationError("wmo_code", f"unknown WMO code {self.wmo_code!r}")
        lo, hi = WMO_AMPLITUDE_BANDS[self.wmo_code]
        a = self.amplitude
        if self.wmo_code == 0:
            if a != 0.0:
                raise ConfigurationError("amplitude", "sea state 0 must have zero amplitude")
        elif not (lo < a <= hi):
            raise ConfigurationError(
                "amplitude", f"{a} m outside ({lo}, {hi}] for WMO code {self.wmo_code}"
            )
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ConfigurationError("period", "must be a positive finite number of seconds")
        if len(self.phases) != 3:
            raise ConfigurationError("phases", "expected three phase offsets")

    def to_dict(self) -> dict:
        return {
            "wmo_code": self.wmo_code,
            "amplitude": self.amplitude,
            "period": self.period,
            "surge_frac": self.surge_frac,
            "sway_frac": self.sway_frac,
            "phases": list(self.phases),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeaStateSpec":
        d = dict(d)
        if "phases" in d:
            d["phases"] = tuple(d["phases"])
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(sorted(unknown)[0], "unknown sea-state field")
        return cls(**d)


_PRESETS = {
    0: SeaStateSpec(0, 0.0),
    1: SeaStateSpec(1, 0.1),
    2: SeaStateSpec(2, 0.5),
}


def preset(wmo_code: int) -> SeaStateSpec:
    """Return the test sea state for ``wmo_code``: the band's maximum amplitude, 5 s period."""
    try:
        return _PRESETS[int(wmo_code)]
    except (KeyError, ValueError, TypeError):
        raise ConfigurationError("wmo_code", f"no preset for WMO code {wmo_code!r}") from None


def with_amplitude(spec: SeaStateSpec, amplitude: float) -> SeaStateSpec:
    return replace(spec, amplitude=amplitude)


def wave_offset(spec: SeaStateSpec, t: float) -> np.ndarray:
    """Surge, sway, heave displacement (metres) of the base at time ``t`` seconds."""
    if spec.wmo_code == 0 or spec.amplitude == 0.0:
        return np.zeros(3)
    a = spec.amplitude
    w = 2.0 * math.pi * t / spec.period
    p0, p1, p2 = spec.phases
    return np.array(
        [
            spec.surge_frac * a * math.sin(w + p1),
            spec.sway_frac * a * math.sin(w + p2),
            a * math.sin(w + p0),
        ]
    )
