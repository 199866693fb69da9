"""Photodetector noise: shot, thermal (Johnson), flicker (1/f) and speckle.

Shot, thermal and flicker noise are additive photocurrents.  Speckle is a
multiplicative, piecewise-constant fluctuation of the measurement-beam
intensity, so it scales the beat term by the square root of the multiplier.
Additive white noise is sampled over the Nyquist band, i.e. its bandwidth is
``fs / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidConfigError, InvalidInputError
from .optics import CONSTANTS, DetectorConfig, OpticalConfig
from .rng import RandomSeed
from .series import TimeSeries

SHOT = "shot"
THERMAL = "thermal"
FLICKER = "flicker"
SPECKLE = "speckle"
NOISE_KINDS = frozenset({SHOT, THERMAL, FLICKER, SPECKLE})
DEFAULT_ENABLED = frozenset({SHOT, THERMAL, FLICKER})

# longest flicker record synthesized in one transform; longer records hold
# each flicker sample over a power-of-two number of detector samples
FLICKER_MAX_POINTS = 1 << 20


@dataclass(frozen=True)
class NoiseConfig:
    temperature: float = 290.0  # K
    amp_input_resistance: float = 100.0  # ohm
    detector_resistance: float = 100.0  # ohm
    flicker_K: float = 1e-24
    flicker_alpha: float = 1.0
    flicker_beta: float = 1.0
    speckle_mean: float = 1e-3  # W
    speckle_correlation_time: float = 1e-3  # s
    enabled: frozenset = field(default=DEFAULT_ENABLED)

    def __post_init__(self):
        object.__setattr__(self, "enabled", frozenset(self.enabled))
        unknown = self.enabled - NOISE_KINDS
        if unknown:
            raise InvalidConfigError(f"unknown noise kinds {sorted(unknown)}")
        if not self.temperature > 0:
            raise InvalidConfigError("temperature must be > 0")
        if not (self.amp_input_resistance > 0 and self.detector_resistance > 0):
            raise InvalidConfigError("resistances must be > 0")
        if not self.flicker_K >= 0:
            raise InvalidConfigError("flicker_K must be >= 0")
        if not self.flicker_beta > 0:
            raise InvalidConfigError("flicker_beta must be > 0")
        if not (self.speckle_mean > 0 and self.speckle_correlation_time > 0):
            raise InvalidConfigError("speckle mean and correlation time must be > 0")

    @property
    def load_resistance(self) -> float:
        """Parallel combination of amplifier input and detector resistance."""
        ri, rd = self.amp_input_resistance, self.detector_resistance
        return ri * rd / (ri + rd)


def shot_noise_rms(i_signal: float, bandwidth: float) -> float:
    if i_signal < 0:
        raise InvalidInputError(f"signal current must be >= 0, got {i_signal}")
    if bandwidth < 0:
        raise InvalidInputError(f"bandwidth must be >= 0, got {bandwidth}")
    return math.sqrt(2 * CONSTANTS.e * i_signal * bandwidth)


def thermal_noise_rms(temperature: float, r_input: float, r_detector: float, bandwidth: float) -> float:
    if r_input <= 0 or r_detector <= 0:
        raise InvalidInputError("resistances must be > 0")
    if temperature <= 0:
        raise InvalidInputError("temperature must be > 0")
    if bandwidth < 0:
        raise InvalidInputError(f"bandwidth must be >= 0, got {bandwidth}")
    return math.sqrt(4 * CONSTANTS.k_B * temperature * bandwidth * (r_input + r_detector) / (r_input * r_detector))


def gen_white_noise(
    rms: float, n: int, fs: float, seed: RandomSeed, *, tag: int = rng.WHITE, start: int = 0
) -> TimeSeries:
    """Zero-mean Gaussian samples with standard deviation ``rms``."""
    if rms < 0:
        raise InvalidInputError(f"rms must be >= 0, got {rms}")
    if rms == 0:
        return TimeSeries(fs, np.zeros(n))
    return TimeSeries(fs, rms * rng.standard_normal(seed, tag, start, start + n))


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _psd_integral(scale: float, beta: float, f_lo, f_hi):
    if abs(beta - 1.0) < 1e-12:
        return scale * np.log(f_hi / f_lo)
    return scale * (f_hi ** (1 - beta) - f_lo ** (1 - beta)) / (1 - beta)


def flicker_band_power(i_signal: float, cfg: NoiseConfig, n: int, fs: float) -> float:
    """Integral of K * i^alpha / f^beta over [fs/n, fs/4] (A^2)."""
    scale = cfg.flicker_K * i_signal ** cfg.flicker_alpha
    return float(_psd_integral(scale, cfg.flicker_beta, fs / n, fs / 4))


def gen_flicker_noise(i_signal: float, cfg: NoiseConfig, n: int, fs: float, seed: RandomSeed) -> TimeSeries:
    """1/f^beta current noise by spectral shaping of white Gaussian noise.

    Bin ``k`` of the rfft carries the flicker power between ``k*fs/n`` and
    ``(k+1)*fs/n``; bins outside [fs/n, fs/4] stay empty.  The realization is
    rescaled so its mean square equals the band integral exactly.
    """
    if i_signal < 0:
        raise InvalidInputError(f"signal current must be >= 0, got {i_signal}")
    if not _is_power_of_two(n) or n < 8:
        raise InvalidInputError(f"flicker synthesis needs a power-of-two length >= 8, got {n}")
    scale = cfg.flicker_K * i_signal ** cfg.flicker_alpha
    if scale == 0:
        return TimeSeries(fs, np.zeros(n))
    df = fs / n
    k = np.arange(1, n // 4)
    bin_power = _psd_integral(scale, cfg.flicker_beta, k * df, (k + 1) * df)
    g = seed.generator(rng.FLICKER)
    z = g.standard_normal(k.size) + 1j * g.standard_normal(k.size)
    spectrum = np.zeros(n // 2 + 1, dtype=complex)
    # E|z|^2 = 2, and irfft maps |X_k|^2 to a mean square of 2|X_k|^2 / n^2
    spectrum[k] = z * n * np.sqrt(bin_power) / 2
    x = np.fft.irfft(spectrum, n)
    x *= math.sqrt(bin_power.sum() / np.mean(x * x))
    return TimeSeries(fs, x)


def speckle_interval(cfg: NoiseConfig, fs: float) -> int:
    """Samples per speckle correlation interval."""
    span = fs * cfg.speckle_correlation_time
    if span < 1:
        raise InvalidConfigError(
            f"speckle correlation time {cfg.speckle_correlation_time} s is shorter than one sample"
        )
    return math.ceil(span)


def speckle_values(cfg: NoiseConfig, fs: float, seed: RandomSeed, start: int, stop: int) -> np.ndarray:
    """Unit-mean speckle multiplier for global sample indices ``[start, stop)``.

    Each correlation interval draws an intensity I from the negative
    exponential law with mean ``speckle_mean``; the multiplier is I / mean.
    """
    span = speckle_interval(cfg, fs)
    if stop <= start:
        return np.empty(0)
    intervals = np.arange(start, stop) // span
    lo, hi = int(intervals[0]), int(intervals[-1]) + 1
    intensity = cfg.speckle_mean * rng.standard_exponential(seed, rng.SPECKLE, lo, hi)
    return (intensity / cfg.speckle_mean)[intervals - lo]


def gen_speckle_multiplier(cfg: NoiseConfig, n: int, fs: float, seed: RandomSeed) -> TimeSeries:
    if SPECKLE not in cfg.enabled:
        return TimeSeries(fs, np.ones(n))
    return TimeSeries(fs, speckle_values(cfg, fs, seed, 0, n))


def _next_power_of_two(n: int) -> int:
    return 1 << max(3, (n - 1).bit_length())


class NoiseModel:
    """All noise processes of one acquisition, addressable by sample range.

    ``dc_current`` is the time-averaged photocurrent; it sets the shot and
    flicker levels.  ``n_total`` is the record length, which fixes the flicker
    realization.
    """

    def __init__(
        self,
        cfg: NoiseConfig,
        det: DetectorConfig,
        dc_current: float,
        seed: RandomSeed,
        n_total: int,
    ):
        self.cfg = cfg
        self.fs = det.sample_rate
        self.dc_current = dc_current
        self.seed = seed
        bandwidth = self.fs / 2
        self.shot_rms = shot_noise_rms(dc_current, bandwidth) if SHOT in cfg.enabled else 0.0
        self.thermal_rms = (
            thermal_noise_rms(cfg.temperature, cfg.amp_input_resistance, cfg.detector_resistance, bandwidth)
            if THERMAL in cfg.enabled
            else 0.0
        )
        self.speckle_on = SPECKLE in cfg.enabled
        if self.speckle_on:
            speckle_interval(cfg, self.fs)
        self._flicker = None
        self._hold = 1
        if FLICKER in cfg.enabled and cfg.flicker_K > 0 and dc_current > 0:
            hold = 1
            while -(-n_total // hold) > FLICKER_MAX_POINTS:
                hold *= 2
            points = _next_power_of_two(-(-n_total // hold))
            self._hold = hold
            self._flicker = gen_flicker_noise(dc_current, cfg, points, self.fs / hold, seed).samples

    @property
    def has_additive(self) -> bool:
        return self.shot_rms > 0 or self.thermal_rms > 0 or self._flicker is not None

    def shot(self, start: int, stop: int) -> np.ndarray:
        if self.shot_rms == 0:
            return np.zeros(stop - start)
        return self.shot_rms * rng.standard_normal(self.seed, rng.SHOT, start, stop)

    def thermal(self, start: int, stop: int) -> np.ndarray:
        if self.thermal_rms == 0:
            return np.zeros(stop - start)
        return self.thermal_rms * rng.standard_normal(self.seed, rng.THERMAL, start, stop)

    def flicker(self, start: int, stop: int) -> np.ndarray:
        if self._flicker is None:
            return np.zeros(stop - start)
        idx = np.clip(np.arange(start, stop) // self._hold, 0, self._flicker.size - 1)
        return self._flicker[idx]

    def speckle(self, start: int, stop: int) -> np.ndarray:
        if not self.speckle_on:
            return np.ones(stop - start)
        return speckle_values(self.cfg, self.fs, self.seed, start, stop)

    def additive(self, start: int, stop: int) -> np.ndarray:
        total = np.zeros(stop - start)
        if self.shot_rms > 0:
            total += self.shot(start, stop)
        if self.thermal_rms > 0:
            total += self.thermal(start, stop)
        if self._flicker is not None:
            total += self.flicker(start, stop)
        return total

    def apply(self, clean: np.ndarray, start: int = 0) -> np.ndarray:
        """Corrupt the clean photocurrent ``clean`` occupying ``[start, start+len)``."""
        stop = start + clean.size
        out = clean
        if self.speckle_on:
            out = self.dc_current + (clean - self.dc_current) * np.sqrt(self.speckle(start, stop))
        if self.has_additive:
            out = out + self.additive(start, stop)
        return out

    def components(self, clean: np.ndarray, start: int = 0) -> dict[str, np.ndarray]:
        """Each noise contribution separately; speckle as its perturbation of the beat term."""
        stop = start + clean.size
        ac = clean - self.dc_current
        return {
            SHOT: self.shot(start, stop),
            THERMAL: self.thermal(start, stop),
            FLICKER: self.flicker(start, stop),
            SPECKLE: ac * (np.sqrt(self.speckle(start, stop)) - 1.0),
        }


def _check_detector(clean: TimeSeries, det: DetectorConfig) -> None:
    if clean.sample_rate != det.sample_rate:
        raise InvalidInputError(
            f"signal sampled at {clean.sample_rate} Hz but detector runs at {det.sample_rate} Hz"
        )
    if not math.isclose(det.bandwidth, det.sample_rate / 2):
        raise InvalidInputError("sampled noise needs the detector bandwidth at the Nyquist band fs/2")


def apply_noise(
    clean: TimeSeries,
    dc_signal_current: float,
    opt: OpticalConfig,
    det: DetectorConfig,
    cfg: NoiseConfig,
    seed: RandomSeed,
) -> TimeSeries:
    """Add every enabled noise process to a clean photocurrent."""
    _check_detector(clean, det)
    expected_dc = det.responsivity * opt.dc_intensity
    if not math.isclose(dc_signal_current, expected_dc, rel_tol=1e-9):
        raise InvalidInputError(
            f"dc current {dc_signal_current} A does not match the optical config ({expected_dc} A)"
        )
    if not cfg.enabled:
        return clean
    model = NoiseModel(cfg, det, dc_signal_current, seed, len(clean))
    return clean.with_samples(model.apply(clean.samples))


def noise_components(
    clean: TimeSeries,
    dc_signal_current: float,
    det: DetectorConfig,
    cfg: NoiseConfig,
    seed: RandomSeed,
) -> dict[str, np.ndarray]:
    """Per-process contributions that ``apply_noise`` would add for the same seed."""
    _check_detector(clean, det)
    model = NoiseModel(cfg, det, dc_signal_current, seed, len(clean))
    return model.components(clean.samples)
