"""Heterodyne interferometer: Doppler shift, optical phase, beam fields and
the photodetector current.

The optical carrier is factored out analytically; only the beat between the
Bragg-shifted measurement beam and the reference beam is synthesized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import motion
from .errors import InvalidConfigError, SamplingViolationError
from .motion import MotionProfile, SampledKinematics
from .series import TimeSeries


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 2.99792458e8  # m/s
    e: float = 1.602176634e-19  # C
    k_B: float = 1.380649e-23  # J/K


CONSTANTS = PhysicalConstants()

HENE_WAVELENGTH = 632.8e-9
_MAX_CARRIER_PERIOD = 1 << 16


@dataclass(frozen=True)
class OpticalConfig:
    wavelength: float = HENE_WAVELENGTH  # m
    bragg_shift: float = 1.0e6  # Hz
    mixing_efficiency: float = 0.9
    reflectivity: float = 0.5
    intensity_measurement: float = 1.0e-3  # W
    intensity_reference: float = 1.0e-3  # W
    loss_reference: float = 0.8
    loss_measurement: float = 0.8

    def __post_init__(self):
        if not self.wavelength > 0:
            raise InvalidConfigError(f"wavelength must be > 0, got {self.wavelength}")
        if not self.bragg_shift >= 0:
            raise InvalidConfigError(f"bragg_shift must be >= 0, got {self.bragg_shift}")
        for name in ("mixing_efficiency", "reflectivity", "loss_reference", "loss_measurement"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise InvalidConfigError(f"{name} must lie in (0, 1], got {value}")
        for name in ("intensity_measurement", "intensity_reference"):
            if not getattr(self, name) > 0:
                raise InvalidConfigError(f"{name} must be > 0")

    @property
    def reference_intensity(self) -> float:
        """Reference-arm intensity at the detector (W)."""
        return self.intensity_reference * self.loss_reference

    @property
    def measurement_intensity(self) -> float:
        """Measurement-arm intensity at the detector, after the target (W)."""
        return self.intensity_measurement * self.loss_measurement * self.reflectivity

    @property
    def dc_intensity(self) -> float:
        return self.reference_intensity + self.measurement_intensity

    @property
    def ac_intensity(self) -> float:
        """Amplitude of the beat term."""
        return 2 * self.mixing_efficiency * math.sqrt(self.reference_intensity * self.measurement_intensity)


@dataclass(frozen=True)
class DetectorConfig:
    responsivity: float = 0.5  # A/W
    sample_rate: float = 4.0e6  # Hz
    bandwidth: float | None = None  # Hz, defaults to the Nyquist band

    def __post_init__(self):
        if self.bandwidth is None:
            object.__setattr__(self, "bandwidth", self.sample_rate / 2)
        if not (self.responsivity > 0 and self.sample_rate > 0 and self.bandwidth > 0):
            raise InvalidConfigError("detector responsivity, sample rate and bandwidth must be > 0")


def _check_wavelength(wavelength) -> None:
    if not wavelength > 0:
        raise InvalidConfigError(f"wavelength must be > 0, got {wavelength}")


def doppler_shift(velocity, wavelength: float):
    """Frequency shift of light retro-reflected by a surface moving at ``velocity``."""
    _check_wavelength(wavelength)
    return 2 * velocity / wavelength


def phase_from_displacement(displacement, wavelength: float):
    """Round-trip optical phase 2k*dL with k = 2*pi/wavelength."""
    _check_wavelength(wavelength)
    return 4 * np.pi * displacement / wavelength


@dataclass(frozen=True)
class CarrierPlan:
    bragg_shift: float
    sample_rate: float
    max_doppler: float


def plan_carrier(
    profile: MotionProfile,
    wavelength: float = HENE_WAVELENGTH,
    output_rate: float = 20e3,
    margin: float = 1.5,
    offset: float = 100e3,
) -> CarrierPlan:
    """Bragg shift and detector rate for a profile.

    f_b = margin * max Doppler + offset, rounded up to a multiple of
    ``output_rate / 2``; the detector samples at 4 * f_b.  The rounding keeps
    both the 2:1 baseband decimation and the decimation to ``output_rate``
    integral.
    """
    f_d = abs(doppler_shift(motion.peak_speed(profile), wavelength))
    step = output_rate / 2
    f_b = math.ceil((margin * f_d + offset) / step) * step
    return CarrierPlan(bragg_shift=f_b, sample_rate=4 * f_b, max_doppler=f_d)


def _check_nyquist(sample_rate: float, bragg_shift: float, max_doppler: float) -> None:
    top = bragg_shift + max_doppler
    if not sample_rate > 2 * top:
        raise SamplingViolationError(
            f"sample rate {sample_rate} Hz cannot carry a beat reaching {top} Hz"
        )


@lru_cache(maxsize=32)
def _cycle_table(frequency: int, sample_rate: int) -> np.ndarray | None:
    period = sample_rate // math.gcd(frequency, sample_rate)
    if period > _MAX_CARRIER_PERIOD:
        return None
    table = (np.arange(period, dtype=np.int64) * frequency % sample_rate) / sample_rate
    table.flags.writeable = False
    return table


def carrier_cycles(n: np.ndarray, frequency: float, sample_rate: float) -> np.ndarray:
    """Fractional cycles of a ``frequency`` tone at sample indices ``n``.

    Reduced modulo one cycle before scaling, which keeps the carrier phase
    exact for integer rates however far the index runs.
    """
    n = np.asarray(n, dtype=np.int64)
    f, fs = float(frequency), float(sample_rate)
    if f.is_integer() and fs.is_integer():
        table = _cycle_table(int(f), int(fs))
        if table is not None:
            return table[n % table.size]
    return np.mod(n * f, fs) / fs


def _beat_argument(displacement, n, cfg: OpticalConfig, sample_rate: float) -> np.ndarray:
    carrier = 2 * np.pi * carrier_cycles(n, cfg.bragg_shift, sample_rate)
    return carrier - phase_from_displacement(displacement, cfg.wavelength)


def synth_fields(kin: SampledKinematics, cfg: OpticalConfig) -> tuple[np.ndarray, np.ndarray]:
    """Complex reference and measurement fields, optical carrier factored out."""
    max_doppler = float(np.max(np.abs(doppler_shift(kin.velocity, cfg.wavelength)), initial=0.0))
    _check_nyquist(kin.sample_rate, cfg.bragg_shift, max_doppler)
    n = np.arange(len(kin))
    e_ref = np.full(len(kin), math.sqrt(cfg.reference_intensity), dtype=complex)
    e_meas = math.sqrt(cfg.measurement_intensity) * np.exp(
        1j * _beat_argument(kin.displacement, n, cfg, kin.sample_rate)
    )
    return e_ref, e_meas


def intensity_from_fields(e_ref: np.ndarray, e_meas: np.ndarray, mixing_efficiency: float = 1.0) -> np.ndarray:
    """Detected intensity of two superposed fields with partial mixing.

    With ``mixing_efficiency == 1`` this is exactly |E_m + E_r|^2.
    """
    return (
        np.abs(e_ref) ** 2
        + np.abs(e_meas) ** 2
        + 2 * mixing_efficiency * np.real(e_meas * np.conj(e_ref))
    )


def detector_intensity(displacement, n, cfg: OpticalConfig, sample_rate: float) -> np.ndarray:
    return cfg.dc_intensity + cfg.ac_intensity * np.cos(_beat_argument(displacement, n, cfg, sample_rate))


def synth_detector_signal(kin: SampledKinematics, opt: OpticalConfig, det: DetectorConfig) -> TimeSeries:
    """Photocurrent (A) of the interferometer watching ``kin``."""
    if kin.sample_rate != det.sample_rate:
        raise InvalidConfigError(
            f"kinematics sampled at {kin.sample_rate} Hz, detector at {det.sample_rate} Hz"
        )
    max_doppler = float(np.max(np.abs(doppler_shift(kin.velocity, opt.wavelength)), initial=0.0))
    _check_nyquist(det.sample_rate, opt.bragg_shift, max_doppler)
    n = np.arange(len(kin))
    current = det.responsivity * detector_intensity(kin.displacement, n, opt, det.sample_rate)
    return TimeSeries(det.sample_rate, current)


def detector_current_range(
    profile: MotionProfile,
    opt: OpticalConfig,
    det: DetectorConfig,
    start: int,
    stop: int,
    duration: float | None = None,
) -> np.ndarray:
    """Photocurrent for sample indices ``[start, stop)`` straight from the profile.

    Bit-identical to the matching slice of ``synth_detector_signal`` on the
    whole record; negative indices give the signal before the record starts.
    """
    _check_nyquist(det.sample_rate, opt.bragg_shift,
                   abs(doppler_shift(motion.peak_speed(profile), opt.wavelength)))
    n = np.arange(start, stop)
    x, _, _ = motion.evaluate(profile, n / det.sample_rate, duration)
    return det.responsivity * detector_intensity(x, n, opt, det.sample_rate)
