"""Vibration-domain signal processing: FIR filters, Henderson smoothing,
windowed spectra and sub-bin peak estimation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import oaconvolve, upfirdn

from .errors import DesignFailureError, InvalidInputError
from .series import TimeSeries

MAX_TAPS = 8191
# a 64x oversampled response grid misses a ripple peak by at most ~0.01 dB
_GRID_OVERSAMPLE = 64
_DESIGN_MARGIN_DB = 0.02

LOW = "low"
HIGH = "high"
BAND = "band"

RECTANGULAR = "rectangular"
HANN = "hann"
WINDOWS = (RECTANGULAR, HANN)


# --------------------------------------------------------------------------
# FIR design

@dataclass(frozen=True)
class FilterSpec:
    kind: str
    cutoffs: tuple[float, ...]
    transition_width: float
    stopband_atten: float = 60.0  # dB

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(float(c) for c in np.atleast_1d(self.cutoffs)))
        if self.kind not in (LOW, HIGH, BAND):
            raise InvalidInputError(f"unknown filter kind {self.kind!r}")
        expected = 2 if self.kind == BAND else 1
        if len(self.cutoffs) != expected:
            raise InvalidInputError(f"{self.kind}-pass filter needs {expected} cutoff(s)")
        if self.kind == BAND and not self.cutoffs[0] < self.cutoffs[1]:
            raise InvalidInputError("band-pass cutoffs must be increasing")
        if not self.transition_width > 0 or not self.stopband_atten > 0:
            raise InvalidInputError("transition width and stopband attenuation must be > 0")

    def stopbands(self, fs: float) -> list[tuple[float, float]]:
        half = self.transition_width / 2
        if self.kind == LOW:
            return [(self.cutoffs[0] + half, fs / 2)]
        if self.kind == HIGH:
            return [(0.0, self.cutoffs[0] - half)]
        return [(0.0, self.cutoffs[0] - half), (self.cutoffs[1] + half, fs / 2)]

    def passbands(self, fs: float) -> list[tuple[float, float]]:
        half = self.transition_width / 2
        if self.kind == LOW:
            return [(0.0, self.cutoffs[0] - half)]
        if self.kind == HIGH:
            return [(self.cutoffs[0] + half, fs / 2)]
        return [(self.cutoffs[0] + half, self.cutoffs[1] - half)]


def kaiser_beta(atten: float) -> float:
    if atten > 50:
        return 0.1102 * (atten - 8.7)
    if atten >= 21:
        return 0.5842 * (atten - 21) ** 0.4 + 0.07886 * (atten - 21)
    return 0.0


def kaiser_length(atten: float, transition_width: float, fs: float) -> int:
    """Odd tap count estimated by Kaiser's formula."""
    n = math.ceil((atten - 7.95) / (2.285 * 2 * math.pi * transition_width / fs)) + 1
    return n | 1


def _lowpass_prototype(cutoff: float, fs: float, n_taps: int, window: np.ndarray) -> np.ndarray:
    m = np.arange(n_taps) - (n_taps - 1) / 2
    h = 2 * cutoff / fs * np.sinc(2 * cutoff / fs * m) * window
    return h / h.sum()


def _taps(spec: FilterSpec, fs: float, n_taps: int) -> np.ndarray:
    window = np.kaiser(n_taps, kaiser_beta(spec.stopband_atten))
    impulse = np.zeros(n_taps)
    impulse[n_taps // 2] = 1.0
    if spec.kind == LOW:
        return _lowpass_prototype(spec.cutoffs[0], fs, n_taps, window)
    if spec.kind == HIGH:
        return impulse - _lowpass_prototype(spec.cutoffs[0], fs, n_taps, window)
    return (_lowpass_prototype(spec.cutoffs[1], fs, n_taps, window)
            - _lowpass_prototype(spec.cutoffs[0], fs, n_taps, window))


def _stopband_atten(taps: np.ndarray, spec: FilterSpec, fs: float) -> float:
    n_fft = 1 << max(14, (_GRID_OVERSAMPLE * taps.size - 1).bit_length())
    response = np.abs(np.fft.rfft(taps, n_fft))
    freqs = np.fft.rfftfreq(n_fft, 1 / fs)
    worst = 0.0
    k = np.arange(taps.size)
    for lo, hi in spec.stopbands(fs):
        sel = (freqs >= lo) & (freqs <= hi)
        if sel.any():
            worst = max(worst, response[sel].max())
        # the band edges fall between grid points and carry the largest leak
        edges = np.exp(-2j * np.pi * np.outer([lo, hi], k) / fs) @ taps
        worst = max(worst, np.abs(edges).max())
    return -20 * math.log10(max(worst, 1e-300))


def design_fir(spec: FilterSpec, fs: float) -> np.ndarray:
    """Linear-phase Kaiser-windowed-sinc FIR; the tap count is grown until the
    measured stopband meets ``spec.stopband_atten``."""
    for c in spec.cutoffs:
        if not 0 < c < fs / 2:
            raise InvalidInputError(f"cutoff {c} Hz outside (0, {fs / 2}) Hz")
    for lo, hi in spec.stopbands(fs) + spec.passbands(fs):
        if hi <= lo or lo < 0 or hi > fs / 2:
            raise InvalidInputError("transition band does not fit between the cutoffs and the band edges")
    return _design_cached(spec, float(fs))


@lru_cache(maxsize=64)
def _design_cached(spec: FilterSpec, fs: float) -> np.ndarray:
    n_taps = kaiser_length(spec.stopband_atten, spec.transition_width, fs)
    while n_taps <= MAX_TAPS:
        taps = _taps(spec, fs, n_taps)
        if _stopband_atten(taps, spec, fs) >= spec.stopband_atten + _DESIGN_MARGIN_DB:
            taps.flags.writeable = False
            return taps
        n_taps = (int(n_taps * 1.1) + 2) | 1
    raise DesignFailureError(
        f"{spec.kind}-pass filter with {spec.transition_width} Hz transition and "
        f"{spec.stopband_atten} dB stopband needs more than {MAX_TAPS} taps at {fs} Hz"
    )


def apply_fir(series: TimeSeries, taps: np.ndarray, zero_phase: bool = False) -> TimeSeries:
    """Same-length filtering with the linear-phase delay removed.

    ``zero_phase`` runs the filter forward and backward (squared magnitude
    response, no phase shift).
    """
    taps = np.asarray(taps)
    if taps.size % 2 == 0:
        raise InvalidInputError("delay compensation needs an odd tap count")
    delay = taps.size // 2

    def once(x):
        return oaconvolve(x, taps)[delay:delay + x.size]

    y = once(series.samples)
    if zero_phase:
        y = once(y[::-1])[::-1]
    return series.with_samples(y)


# --------------------------------------------------------------------------
# decimation

class FIRDecimator:
    """Streaming polyphase FIR decimator.

    Output ``m`` is sum_k h[k] x[m*factor + c - k] with c = (len(h) - 1) / 2,
    i.e. aligned with input sample ``m*factor``.  Input samples are pushed in
    arbitrary chunks; the first pushed sample has global index ``-lead``, and
    samples left of it (or past the end at ``flush``) count as zero.
    """

    def __init__(self, taps: np.ndarray, factor: int, n_out: int, lead: int = 0):
        taps = np.asarray(taps, dtype=float)
        if taps.size % 2 == 0:
            raise InvalidInputError("decimator needs an odd tap count")
        self.taps = taps
        self.factor = int(factor)
        self.n_out = int(n_out)
        self.center = taps.size // 2
        self._skip = -(-2 * self.center // self.factor)
        self._buf = np.empty(0)
        self._buf_start = -int(lead)
        self._next = 0

    @property
    def done(self) -> bool:
        return self._next >= self.n_out

    def process(self, chunk: np.ndarray) -> np.ndarray:
        buf = np.concatenate([self._buf, chunk]) if self._buf.size else np.asarray(chunk, dtype=float)
        end = self._buf_start + buf.size
        reach = end - 1 - self.center
        m_hi = min(self.n_out, reach // self.factor + 1) if reach >= 0 else 0
        return self._emit(buf, m_hi)

    def flush(self) -> np.ndarray:
        return self._emit(self._buf, self.n_out)

    def _emit(self, buf: np.ndarray, m_hi: int) -> np.ndarray:
        m_lo = self._next
        if m_hi <= m_lo:
            self._buf = buf
            return np.empty(0)
        d, c = self.factor, self.center
        a = m_lo * d + c - self._skip * d
        b = (m_hi - 1) * d + c + 1
        lo = a - self._buf_start
        hi = b - self._buf_start
        seg = buf[max(lo, 0):max(min(hi, buf.size), 0)]
        if lo < 0 or hi > buf.size:
            seg = np.concatenate([np.zeros(max(-lo, 0)), seg, np.zeros(max(hi - max(buf.size, lo), 0))])
        y = upfirdn(self.taps, seg, down=d)[self._skip:self._skip + m_hi - m_lo]
        self._next = m_hi
        keep = min(m_hi * d + c - self._skip * d - self._buf_start, buf.size)
        if keep > 0:
            self._buf = buf[keep:]
            self._buf_start += keep
        else:
            self._buf = buf
        return y


def _factor_stages(factor: int, limit: int = 16) -> list[int]:
    primes = []
    n = factor
    p = 2
    while p * p <= n:
        while n % p == 0:
            primes.append(p)
            n //= p
        p += 1
    if n > 1:
        primes.append(n)
    stages: list[int] = []
    for p in sorted(primes, reverse=True):
        if stages and stages[-1] * p <= limit:
            stages[-1] *= p
        else:
            stages.append(p)
    return sorted(stages, reverse=True)


def decimation_plan(fs: float, factor: int, passband: float, atten: float = 80.0) -> list[tuple[int, np.ndarray]]:
    """Cascade of (factor, taps) stages taking ``fs`` down to ``fs / factor``.

    Every stage keeps [0, passband] and attenuates by ``atten`` whatever would
    alias into the final Nyquist band; the last stage has its stopband at the
    output Nyquist frequency.
    """
    if factor < 1 or int(factor) != factor:
        raise InvalidInputError(f"decimation factor must be a positive integer, got {factor}")
    out_nyquist = fs / factor / 2
    if not 0 < passband < out_nyquist:
        raise InvalidInputError(f"passband {passband} Hz must lie below the output Nyquist {out_nyquist} Hz")
    plan = []
    rate = fs
    for d in _factor_stages(int(factor)):
        new_rate = rate / d
        stop = new_rate - out_nyquist
        spec = FilterSpec(LOW, ((passband + stop) / 2,), stop - passband, atten)
        plan.append((d, design_fir(spec, rate)))
        rate = new_rate
    return plan


def _odd_extension(x: np.ndarray, n: int) -> np.ndarray:
    n = min(n, x.size - 1)
    if n <= 0:
        return x
    left = 2 * x[0] - x[n:0:-1]
    right = 2 * x[-1] - x[-2:-n - 2:-1]
    return np.concatenate([left, x, right])


def decimate(series: TimeSeries, factor: int, passband: float | None = None, atten: float = 80.0) -> TimeSeries:
    """Anti-aliased integer-factor downsampling; sample ``m`` of the result sits at
    input sample ``m*factor``.  Ends are padded by odd reflection."""
    if factor == 1:
        return series
    fs = series.sample_rate
    out_nyquist = fs / factor / 2
    passband = 0.25 * out_nyquist if passband is None else passband
    x = series.samples
    rate = fs
    for d, taps in decimation_plan(fs, factor, passband, atten):
        pad = taps.size // 2
        padded = _odd_extension(x, pad)
        lead = (padded.size - x.size) // 2
        n_out = -(-x.size // d)
        dec = FIRDecimator(taps, d, n_out, lead=lead)
        x = np.concatenate([dec.process(padded), dec.flush()])
        rate /= d
    return TimeSeries(rate, x)


# --------------------------------------------------------------------------
# Henderson moving average

def henderson_weights(terms: int) -> np.ndarray:
    """Symmetric Henderson weights; they sum to one and pass cubics unchanged."""
    if terms < 3 or terms % 2 == 0:
        raise InvalidInputError(f"Henderson filter needs an odd term count >= 3, got {terms}")
    m = (terms - 1) // 2
    p = m + 2
    j = np.arange(-m, m + 1, dtype=float)
    num = 315 * ((p - 1) ** 2 - j ** 2) * (p ** 2 - j ** 2) * ((p + 1) ** 2 - j ** 2) * (3 * p ** 2 - 16 - 11 * j ** 2)
    den = 8 * p * (p ** 2 - 1) * (4 * p ** 2 - 1) * (4 * p ** 2 - 9) * (4 * p ** 2 - 25)
    return num / den


def henderson_smooth(series: TimeSeries, terms: int = 13) -> TimeSeries:
    """Henderson moving average; the m = terms // 2 samples at each end use the
    truncated kernel renormalized to unit sum."""
    x = series.samples
    if terms < 5 or terms % 2 == 0 or terms > x.size:
        raise InvalidInputError(f"term count must be odd, >= 5 and <= series length; got {terms}")
    w = henderson_weights(terms)
    m = terms // 2
    y = np.convolve(x, w, mode="same")
    for i in range(m):
        wl = w[m - i:]
        y[i] = np.dot(wl, x[:i + m + 1]) / wl.sum()
        wr = w[:m + 1 + i]
        y[-1 - i] = np.dot(wr, x[-(i + m + 1):]) / wr.sum()
    return series.with_samples(y)


# --------------------------------------------------------------------------
# spectra

@dataclass(frozen=True, eq=False)
class Spectrum:
    frequency_axis: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray
    window: str
    record_length: int
    sample_rate: float

    @property
    def bin_spacing(self) -> float:
        return self.sample_rate / self.record_length


def window_samples(kind: str, n: int) -> np.ndarray:
    if kind == RECTANGULAR:
        return np.ones(n)
    if kind == HANN:
        # periodic (DFT-even) Hann
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    raise InvalidInputError(f"unknown window {kind!r}")


def dft(series: TimeSeries) -> np.ndarray:
    """Unscaled two-sided DFT, X[k] = sum_n x[n] exp(-2j*pi*k*n/N).

    Real input gets its negative-frequency half mirrored from the positive
    half, so X[N-k] == conj(X[k]) holds exactly.
    """
    x = series.samples
    if np.iscomplexobj(x):
        return np.fft.fft(x)
    n = x.size
    half = np.fft.rfft(x)
    return np.concatenate([half, np.conj(half[1:(n + 1) // 2][::-1])])


def compute_spectrum(series: TimeSeries, window: str = HANN) -> Spectrum:
    """One-sided amplitude spectrum, corrected for the window's coherent gain so
    a sine centred on a bin reads its own amplitude."""
    n = len(series)
    if n < 2:
        raise InvalidInputError("spectrum needs at least two samples")
    w = window_samples(window, n)
    x = np.fft.rfft(series.samples * w)
    mag = np.abs(x) / w.sum()
    mag[1:(n + 1) // 2] *= 2
    return Spectrum(
        frequency_axis=np.fft.rfftfreq(n, 1 / series.sample_rate),
        magnitude=mag,
        phase=np.angle(x),
        window=window,
        record_length=n,
        sample_rate=series.sample_rate,
    )


@dataclass(frozen=True)
class PeakEstimate:
    frequency: float  # Hz
    amplitude: float
    bin_index: int
    interpolated: bool


def _hann_kernel(u: np.ndarray) -> np.ndarray:
    """Normalized magnitude of the Hann window's transform, u in bins."""
    u = np.asarray(u, dtype=float)
    den = 1 - u * u
    safe = np.where(np.abs(den) < 1e-12, 1.0, den)
    return np.where(np.abs(den) < 1e-12, 0.5, np.abs(np.sinc(u) / safe))


@lru_cache(maxsize=1)
def _hann_bias_table() -> tuple[np.ndarray, np.ndarray]:
    """Raw log-parabola offset as a function of the true offset, Hann window."""
    delta = np.linspace(-0.5, 0.5, 4001)
    a = np.log(_hann_kernel(-1 - delta))
    b = np.log(_hann_kernel(-delta))
    c = np.log(_hann_kernel(1 - delta))
    return 0.5 * (a - c) / (a - 2 * b + c), delta


def peak_frequency(spec: Spectrum, search_band: tuple[float, float]) -> PeakEstimate:
    """Largest bin inside ``search_band`` refined by a three-point parabola on
    log-magnitude.

    For the Hann window the parabola vertex is mapped through the window's
    exact kernel, which removes the parabola's systematic offset error.
    """
    lo, hi = search_band
    axis = spec.frequency_axis
    inside = np.flatnonzero((axis >= lo) & (axis <= hi))
    if inside.size == 0:
        raise InvalidInputError(f"search band [{lo}, {hi}] Hz holds no spectral bins")
    k = int(inside[np.argmax(spec.magnitude[inside])])
    mag = spec.magnitude
    df = spec.bin_spacing
    if k == 0 or k == mag.size - 1 or min(mag[k - 1], mag[k], mag[k + 1]) <= 0:
        return PeakEstimate(float(axis[k]), float(mag[k]), k, False)
    a, b, c = np.log(mag[k - 1:k + 2])
    curvature = a - 2 * b + c
    if curvature >= 0:
        return PeakEstimate(float(axis[k]), float(mag[k]), k, False)
    offset = 0.5 * (a - c) / curvature
    amplitude = math.exp(b - 0.25 * (a - c) * offset)
    if spec.window == HANN:
        raw, delta = _hann_bias_table()
        offset = float(np.interp(offset, raw, delta))
        amplitude = float(mag[k] / _hann_kernel(offset))
    return PeakEstimate(float((k + offset) * df), float(amplitude), k, True)
