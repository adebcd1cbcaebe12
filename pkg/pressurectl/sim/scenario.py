import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from pressurectl.config import ScenarioConfig
from pressurectl.util.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepWindow:
    start: float
    end: float
    label: str = ""


def _multiple(value: float, step: float) -> Optional[int]:
    n = int(round(value / step))
    if n <= 0 or abs(n * step - value) > 1e-9 * max(1.0, value):
        return None
    return n


class Scenario:
    """
    Reference, disturbance and noise schedule for one closed-loop run.

    Times are in seconds from the start of the run; the reference is in
    normalized loop units (absolute, not deviations).
    """

    def __init__(self, cfg: ScenarioConfig, name: str = "") -> None:
        self.cfg = cfg
        self.name = name
        substeps = _multiple(cfg.dt_ctrl, cfg.dt_sim) if cfg.dt_sim > 0 else None
        if substeps is None:
            raise ConfigError(f"scenario: dt_ctrl={cfg.dt_ctrl} must be a positive multiple of dt_sim={cfg.dt_sim}")
        ticks = _multiple(cfg.duration, cfg.dt_ctrl)
        if ticks is None:
            raise ConfigError(f"scenario: duration={cfg.duration} must be a positive multiple of dt_ctrl={cfg.dt_ctrl}")
        if not cfg.reference:
            raise ConfigError("scenario: reference needs at least one segment")
        times = [seg.t for seg in cfg.reference]
        if times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("scenario: reference segments must start at t=0 and be strictly increasing in t")
        if any(seg.ramp < 0 for seg in cfg.reference):
            raise ConfigError("scenario: ramp durations must be >= 0")
        if cfg.noise.amplitude < 0:
            raise ConfigError("scenario: noise amplitude must be >= 0")
        for w in cfg.windows:
            if not 0 <= w.start < w.end <= cfg.duration:
                raise ConfigError(f"scenario: window [{w.start}, {w.end}] outside [0, {cfg.duration}]")
        self.substeps = substeps
        self.ticks = ticks

    @property
    def dt_sim(self) -> float:
        return self.cfg.dt_sim

    @property
    def dt_ctrl(self) -> float:
        return self.cfg.dt_ctrl

    @property
    def duration(self) -> float:
        return self.cfg.duration

    @property
    def r_bar(self) -> float:
        return self.cfg.r_bar

    def reference(self, t: float) -> float:
        segments = self.cfg.reference
        idx = 0
        for i, seg in enumerate(segments):
            if seg.t <= t + 1e-12:
                idx = i
        seg = segments[idx]
        if idx > 0 and seg.ramp > 0 and t < seg.t + seg.ramp:
            prev = segments[idx - 1].value
            return prev + (seg.value - prev) * (t - seg.t) / seg.ramp
        return seg.value

    def disturbance(self, t: float) -> float:
        d0 = 0.0
        for step in self.cfg.disturbance:
            if step.t <= t + 1e-12:
                d0 = step.value
        return d0

    def noise_samples(self, count: Optional[int] = None) -> np.ndarray:
        """Per-tick measurement noise, drawn from a fresh generator so repeats are identical."""
        n = self.ticks if count is None else count
        noise = self.cfg.noise
        if noise.kind == "none" or noise.amplitude == 0.0:
            return np.zeros(n)
        rng = np.random.default_rng(noise.seed)
        if noise.kind == "uniform":
            return rng.uniform(-noise.amplitude, noise.amplitude, n)
        return rng.normal(0.0, noise.amplitude, n)

    def step_windows(self) -> List[StepWindow]:
        """Configured metric windows, or one window per reference change."""
        if self.cfg.windows:
            return [StepWindow(w.start, w.end, w.label) for w in self.cfg.windows]
        segments = self.cfg.reference
        windows = []
        for i, seg in enumerate(segments[1:], start=1):
            end = segments[i + 1].t if i + 1 < len(segments) else self.duration
            windows.append(StepWindow(seg.t, end, f"step{i}"))
        return windows
