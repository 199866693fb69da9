from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled signal; sample ``n`` sits at time ``n / sample_rate``."""

    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise InvalidInputError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size < 1:
            raise InvalidInputError("samples must be a non-empty 1-D array")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.samples) ** 2)))

    def with_samples(self, samples: np.ndarray) -> TimeSeries:
        return TimeSeries(self.sample_rate, samples)
