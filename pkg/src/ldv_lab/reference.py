"""Reference accelerometer channel (shaker-mounted sensor plus amplifier)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dsp, rng
from .errors import InvalidConfigError
from .motion import SampledKinematics
from .noise import gen_white_noise
from .rng import RandomSeed
from .series import TimeSeries


@dataclass(frozen=True)
class AccelerometerConfig:
    sensitivity: float = 0.1  # V/(m/s^2)
    noise_floor_density: float = 1e-4  # (m/s^2)/sqrt(Hz); 0 models an ideal sensor
    bandwidth: float = 5e3  # Hz
    sample_rate: float = 20e3  # Hz

    def __post_init__(self):
        if not (self.sensitivity > 0 and self.bandwidth > 0 and self.sample_rate > 0):
            raise InvalidConfigError("accelerometer sensitivity, bandwidth and sample rate must be > 0")
        if not self.noise_floor_density >= 0:
            raise InvalidConfigError("noise floor density must be >= 0")
        if not self.bandwidth < self.sample_rate / 2:
            raise InvalidConfigError("accelerometer bandwidth must lie below the Nyquist frequency")

    @property
    def noise_rms(self) -> float:
        """Output noise (V rms) over the Nyquist band."""
        return self.noise_floor_density * self.sensitivity * math.sqrt(self.sample_rate / 2)

    def bandwidth_filter(self) -> np.ndarray:
        width = min(0.2 * self.bandwidth, self.sample_rate / 2 - self.bandwidth, self.bandwidth)
        spec = dsp.FilterSpec(dsp.LOW, (self.bandwidth,), width, 60.0)
        return dsp.design_fir(spec, self.sample_rate)


def simulate_accelerometer(kin: SampledKinematics, cfg: AccelerometerConfig, seed: RandomSeed) -> TimeSeries:
    """Accelerometer output voltage for the target motion ``kin``."""
    ratio = kin.sample_rate / cfg.sample_rate
    factor = round(ratio)
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
        raise InvalidConfigError(
            f"kinematics at {kin.sample_rate} Hz cannot be decimated to {cfg.sample_rate} Hz by an integer factor"
        )
    accel = TimeSeries(kin.sample_rate, kin.acceleration)
    if factor > 1:
        accel = dsp.decimate(accel, factor, passband=cfg.bandwidth)
    sensed = dsp.apply_fir(accel, cfg.bandwidth_filter())
    volts = cfg.sensitivity * sensed.samples
    if cfg.noise_rms > 0:
        volts = volts + gen_white_noise(cfg.noise_rms, volts.size, cfg.sample_rate, seed, tag=rng.ACCELEROMETER).samples
    return TimeSeries(cfg.sample_rate, volts)


def accel_peak_frequency(signal: TimeSeries, band: tuple[float, float], window: str = dsp.HANN) -> dsp.PeakEstimate:
    return dsp.peak_frequency(dsp.compute_spectrum(signal, window), band)
