"""Heterodyne demodulation: quadrature downconversion at the Bragg carrier,
arctangent phase, unwrapping, and conversion to displacement/velocity at the
vibration-analysis rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import InvalidConfigError, InvalidInputError
from .optics import carrier_cycles
from .series import TimeSeries

_TWO_PI = 2 * math.pi
_MAX_LO_PERIOD = 1 << 16


@dataclass(frozen=True)
class DemodConfig:
    """Demodulator settings.

    ``lowpass_cutoff`` defaults to 0.8 * carrier with a transition of
    0.2 * carrier: the pass band then holds Doppler swings up to 0.7 * carrier
    while the detector DC term, which mixes down to -carrier, sits in the
    stop band.
    """

    carrier: float  # Hz
    input_rate: float  # Hz
    lowpass_cutoff: float | None = None  # Hz
    output_rate: float = 20e3  # Hz
    lowpass_transition: float | None = None  # Hz
    stopband_atten: float = 80.0  # dB
    output_passband: float | None = None  # Hz kept flat through the final decimation

    def __post_init__(self):
        if not (self.carrier > 0 and self.input_rate > 0 and self.output_rate > 0):
            raise InvalidConfigError("carrier and rates must be positive")
        if self.lowpass_cutoff is None:
            object.__setattr__(self, "lowpass_cutoff", 0.8 * self.carrier)
        if not 0 < self.lowpass_cutoff < self.carrier:
            raise InvalidConfigError(
                f"low-pass cutoff {self.lowpass_cutoff} Hz must lie below the carrier {self.carrier} Hz"
            )
        if self.lowpass_transition is None:
            object.__setattr__(
                self, "lowpass_transition", min(0.2 * self.carrier, self.carrier - self.lowpass_cutoff)
            )
        if self.output_passband is None:
            object.__setattr__(self, "output_passband", 0.2 * self.output_rate / 2)
        if self.output_rate > self.input_rate:
            raise InvalidConfigError("output rate exceeds input rate")
        ratio = self.input_rate / self.output_rate
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise InvalidConfigError(
                f"input rate {self.input_rate} Hz is not an integer multiple of output rate {self.output_rate} Hz"
            )

    @property
    def baseband_decimation(self) -> int:
        """Largest factor the complex baseband tolerates after the I/Q filter,
        restricted to factors that keep the output rate an integer divisor."""
        top = max(1, int(self.input_rate // (2 * self.lowpass_cutoff)))
        total = round(self.input_rate / self.output_rate)
        for d in range(top, 0, -1):
            if total % d == 0:
                return d
        return 1

    @property
    def baseband_rate(self) -> float:
        return self.input_rate / self.baseband_decimation

    def iq_filter(self) -> np.ndarray:
        spec = dsp.FilterSpec(dsp.LOW, (self.lowpass_cutoff,), self.lowpass_transition, self.stopband_atten)
        return dsp.design_fir(spec, self.input_rate)


@dataclass(frozen=True, eq=False)
class VibrationRecord:
    displacement: TimeSeries  # m
    velocity: TimeSeries  # m/s
    residual_phase_rms: float  # rad


class LocalOscillator:
    """cos/sin of the carrier at arbitrary sample indices, tabulated when the
    carrier repeats after a short whole number of samples."""

    def __init__(self, frequency: float, sample_rate: float):
        self.frequency = frequency
        self.sample_rate = sample_rate
        self.period = None
        f, fs = float(frequency), float(sample_rate)
        if f.is_integer() and fs.is_integer():
            period = int(fs) // math.gcd(int(f), int(fs))
            if period <= _MAX_LO_PERIOD:
                self.period = period
                theta = _TWO_PI * carrier_cycles(np.arange(period), f, fs)
                self._cos = np.cos(theta)
                self._sin = np.sin(theta)

    def __call__(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        if self.period is not None:
            idx = np.arange(start, stop) % self.period
            return self._cos[idx], self._sin[idx]
        theta = _TWO_PI * carrier_cycles(np.arange(start, stop), self.frequency, self.sample_rate)
        return np.cos(theta), np.sin(theta)


class PhaseUnwrapper:
    """Stateful unwrap: consecutive samples differing by more than pi get the
    multiple of 2*pi that brings the step into (-pi, pi]."""

    def __init__(self):
        self._last = None
        self._offset = 0.0

    def __call__(self, wrapped: np.ndarray) -> np.ndarray:
        wrapped = np.asarray(wrapped, dtype=float)
        if wrapped.size == 0:
            return wrapped
        prev = wrapped[0] if self._last is None else self._last
        steps = np.diff(wrapped, prepend=prev)
        jumps = np.abs(steps) > math.pi
        correction = np.zeros_like(wrapped)
        correction[jumps] = -_TWO_PI * np.ceil((steps[jumps] - math.pi) / _TWO_PI)
        offset = self._offset + np.cumsum(correction)
        self._last = wrapped[-1]
        self._offset = offset[-1]
        return wrapped + offset


def unwrap_phase(wrapped: TimeSeries) -> TimeSeries:
    return wrapped.with_samples(PhaseUnwrapper()(wrapped.samples))


class StreamingDemodulator:
    """Photocurrent in, unwrapped interferometric phase out, chunk by chunk.

    Chunks must be pushed contiguously starting at sample ``-lead``; samples
    before ``-lead`` count as zero.  The phase has the sign of the target
    phase, i.e. it is the negated argument of the complex envelope.
    """

    def __init__(self, cfg: DemodConfig, n_samples: int, lead: int = 0):
        self.cfg = cfg
        taps = cfg.iq_filter()
        d = cfg.baseband_decimation
        self.n_out = -(-n_samples // d)
        self._i = dsp.FIRDecimator(taps, d, self.n_out, lead)
        self._q = dsp.FIRDecimator(taps, d, self.n_out, lead)
        self._lo = LocalOscillator(cfg.carrier, cfg.input_rate)
        self._unwrap = PhaseUnwrapper()
        self._next = -lead
        self._phase = np.empty(self.n_out)
        self._filled = 0

    def push(self, chunk: np.ndarray) -> None:
        start = self._next
        cos, sin = self._lo(start, start + chunk.size)
        self._next += chunk.size
        self._store(self._i.process(chunk * cos), self._q.process(-chunk * sin))

    def finish(self) -> TimeSeries:
        self._store(self._i.flush(), self._q.flush())
        return TimeSeries(self.cfg.baseband_rate, self._phase)

    def _store(self, i: np.ndarray, q: np.ndarray) -> None:
        if i.size == 0:
            return
        phase = -self._unwrap(np.arctan2(q, i))
        self._phase[self._filled:self._filled + phase.size] = phase
        self._filled += phase.size


def _check_signal(signal: TimeSeries, cfg: DemodConfig) -> None:
    if signal.sample_rate != cfg.input_rate:
        raise InvalidInputError(
            f"signal sampled at {signal.sample_rate} Hz, demodulator expects {cfg.input_rate} Hz"
        )


def iq_demodulate(signal: TimeSeries, cfg: DemodConfig) -> TimeSeries:
    """Complex envelope of ``signal`` around the carrier, at ``cfg.baseband_rate``.

    Sample ``j`` of the envelope is aligned with input sample
    ``j * baseband_decimation``.
    """
    _check_signal(signal, cfg)
    x = signal.samples
    taps = cfg.iq_filter()
    d = cfg.baseband_decimation
    n_out = -(-x.size // d)
    cos, sin = LocalOscillator(cfg.carrier, cfg.input_rate)(0, x.size)
    out = []
    for mixed in (x * cos, -x * sin):
        dec = dsp.FIRDecimator(taps, d, n_out)
        out.append(np.concatenate([dec.process(mixed), dec.flush()]))
    return TimeSeries(cfg.baseband_rate, out[0] + 1j * out[1])


def demodulate_phase(signal: TimeSeries, cfg: DemodConfig) -> TimeSeries:
    """Unwrapped interferometric phase (rad) at the baseband rate."""
    _check_signal(signal, cfg)
    demod = StreamingDemodulator(cfg, len(signal))
    demod.push(signal.samples)
    return demod.finish()


def _residual_rms(phase: np.ndarray, fs: float, corner: float) -> float:
    n = phase.size
    spectrum = np.fft.rfft(phase - phase.mean())
    freqs = np.fft.rfftfreq(n, 1 / fs)
    power = np.abs(spectrum[freqs > corner]) ** 2
    weights = np.full(power.size, 2.0)
    if n % 2 == 0 and power.size:
        weights[-1] = 1.0
    return float(math.sqrt(np.dot(weights, power)) / n)


def kinematics_from_phase(phase: TimeSeries, wavelength: float, cfg: DemodConfig) -> VibrationRecord:
    """Displacement (zero-mean) and velocity at ``cfg.output_rate`` from an
    unwrapped phase series."""
    if not wavelength > 0:
        raise InvalidConfigError("wavelength must be > 0")
    ratio = phase.sample_rate / cfg.output_rate
    factor = round(ratio)
    if factor < 1 or abs(ratio - factor) > 1e-9 * ratio:
        raise InvalidConfigError(
            f"phase rate {phase.sample_rate} Hz is not an integer multiple of {cfg.output_rate} Hz"
        )
    residual = _residual_rms(phase.samples, phase.sample_rate, cfg.output_rate / 2)
    displacement = phase.samples * (wavelength / (4 * math.pi))
    displacement = displacement - displacement.mean()
    if factor > 1:
        displacement = dsp.decimate(
            TimeSeries(phase.sample_rate, displacement), factor, cfg.output_passband, cfg.stopband_atten
        ).samples
    displacement = displacement - displacement.mean()
    if displacement.size > 1:
        velocity = np.gradient(displacement, 1 / cfg.output_rate)
    else:
        velocity = np.zeros_like(displacement)
    return VibrationRecord(
        displacement=TimeSeries(cfg.output_rate, displacement),
        velocity=TimeSeries(cfg.output_rate, velocity),
        residual_phase_rms=residual,
    )
