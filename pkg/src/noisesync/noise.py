"""Zero-order-hold Gaussian white noise, as produced by a function generator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseSpec", "NoiseSignal", "generate_noise", "DEFAULT_HOLD"]

DEFAULT_HOLD = 1e-6


@dataclass(frozen=True)
class NoiseSpec:
    """RMS voltage, hold interval (s) and generator seed."""

    rms_voltage: float = 0.0
    hold_interval: float = DEFAULT_HOLD
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.rms_voltage) and self.rms_voltage >= 0):
            raise ValueError(f"rms_voltage must be >= 0, got {self.rms_voltage!r}")
        if not (math.isfinite(self.hold_interval) and self.hold_interval > 0):
            raise ValueError(f"hold_interval must be > 0, got {self.hold_interval!r}")


@dataclass(frozen=True)
class NoiseSignal:
    samples: np.ndarray
    hold_interval: float

    def __len__(self):
        return len(self.samples)

    def value_at(self, t):
        k = np.clip(np.floor(np.asarray(t) / self.hold_interval).astype(int), 0, len(self.samples) - 1)
        return self.samples[k]


def sample_count(duration: float, hold_interval: float) -> int:
    # guard against 10e-3 / 1e-6 = 10000.000000000002
    ratio = duration / hold_interval
    return max(1, math.ceil(ratio - 1e-9 * ratio))


def generate_noise(spec: NoiseSpec, duration: float, stream: int | None = None) -> NoiseSignal:
    """Draw ``ceil(duration / hold_interval)`` held Gaussian samples.

    ``stream`` selects an independent sub-stream of the same seed (used for
    per-oscillator sources); ``None`` is the primary stream.
    """
    if not (math.isfinite(duration) and duration > 0):
        raise ValueError(f"duration must be > 0, got {duration!r}")
    count = sample_count(duration, spec.hold_interval)
    seed = int(spec.seed) % 2**64
    entropy = seed if stream is None else [seed, 1, stream]
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    z = rng.standard_normal(count)
    samples = spec.rms_voltage * z if spec.rms_voltage > 0 else np.zeros(count)
    return NoiseSignal(samples, spec.hold_interval)
