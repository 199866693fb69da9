"""End-to-end scenarios: the LDV channel and the reference accelerometer
watching the same target, the calibration sweep, the component suite and
their reports.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from . import demod, dsp, motion, optics
from .demod import DemodConfig, VibrationRecord
from .errors import InvalidConfigError, LDVError, ScenarioError
from .motion import MotionProfile
from .noise import NoiseConfig, NoiseModel
from .optics import DetectorConfig, OpticalConfig
from .reference import AccelerometerConfig, accel_peak_frequency, simulate_accelerometer
from .rng import RandomSeed
from .series import TimeSeries

THREADS_ENV = "LDV_LAB_THREADS"
DEFAULT_DURATION = 2.0  # s
CHUNK_SIZE = 1 << 18  # detector samples synthesized per step
HENDERSON_TERMS = 13

LDV_TOLERANCE = 0.15  # Hz
ACCEL_TOLERANCE = 0.5  # Hz
CROSS_TOLERANCE = 1.0  # Hz


def default_duration(profile: MotionProfile) -> float:
    """2 s, stretched to whole half-seconds when 16 periods of the lowest
    frequency need longer."""
    return max(DEFAULT_DURATION, math.ceil(2 * 16 / profile.min_frequency) / 2)


@dataclass(frozen=True, eq=False)
class Scenario:
    """One simulated measurement.

    The override mappings hold keyword arguments for the matching config
    class.  Unless ``optical`` sets ``bragg_shift`` (and ``detector`` sets
    ``sample_rate``), the carrier and detector rate come from the carrier
    sizing rule applied to the profile's peak speed.
    """

    name: str
    motion: MotionProfile
    optical: Mapping = field(default_factory=dict)
    noise: Mapping = field(default_factory=dict)
    demod: Mapping = field(default_factory=dict)
    accelerometer: Mapping = field(default_factory=dict)
    detector: Mapping = field(default_factory=dict)
    duration: float | None = None  # s, see default_duration
    seed: RandomSeed = field(default_factory=RandomSeed)
    analysis_band: tuple[float, float] | None = None  # Hz
    truth_frequency: float | None = None  # Hz
    smoothing_terms: int | None = HENDERSON_TERMS
    tolerance: float = LDV_TOLERANCE  # Hz
    accel_tolerance: float = ACCEL_TOLERANCE  # Hz
    cross_tolerance: float = CROSS_TOLERANCE  # Hz

    def __post_init__(self):
        if not self.name:
            raise InvalidConfigError("scenario needs a name")
        floor = 16 / self.motion.min_frequency
        if self.duration is None:
            object.__setattr__(self, "duration", default_duration(self.motion))
        if not self.duration >= floor:
            raise InvalidConfigError(
                f"scenario {self.name!r}: duration {self.duration} s is below 16 periods "
                f"of the lowest frequency ({floor} s)"
            )
        if self.analysis_band is None:
            band = (0.5 * self.motion.min_frequency, 1.5 * self.motion.max_frequency)
            object.__setattr__(self, "analysis_band", band)
        lo, hi = self.analysis_band
        object.__setattr__(self, "analysis_band", (float(lo), float(hi)))
        if not 0 <= lo < hi:
            raise InvalidConfigError(f"scenario {self.name!r}: bad analysis band {self.analysis_band}")
        if self.truth_frequency is None and self.motion.kind != motion.CHIRP:
            inside = [c for c in self.motion.components if lo <= c.frequency <= hi] or list(self.motion.components)
            object.__setattr__(self, "truth_frequency", max(inside, key=lambda c: c.amplitude).frequency)
        if self.smoothing_terms is not None and (self.smoothing_terms < 5 or self.smoothing_terms % 2 == 0):
            raise InvalidConfigError("smoothing_terms must be an odd integer >= 5")

    def with_seed(self, seed: RandomSeed) -> Scenario:
        return replace(self, seed=seed)

    def noiseless(self) -> Scenario:
        """Same scenario with every noise process, optical and inertial, off."""
        acc = dict(self.accelerometer, noise_floor_density=0.0)
        return replace(self, noise=dict(self.noise, enabled=()), accelerometer=acc)


@dataclass(frozen=True)
class ComparisonReport:
    component: str
    truth_frequency: float  # Hz
    ldv_frequency: float  # Hz
    accel_frequency: float  # Hz
    displacement_amplitude_recovered: float  # m
    tolerance: float = LDV_TOLERANCE
    accel_tolerance: float = ACCEL_TOLERANCE
    cross_tolerance: float = CROSS_TOLERANCE

    @property
    def ldv_error(self) -> float:
        return self.ldv_frequency - self.truth_frequency

    @property
    def accel_error(self) -> float:
        return self.accel_frequency - self.truth_frequency

    @property
    def passed(self) -> bool:
        return (
            abs(self.ldv_error) <= self.tolerance
            and abs(self.accel_error) <= self.accel_tolerance
            and abs(self.ldv_frequency - self.accel_frequency) <= self.cross_tolerance
        )


@dataclass(frozen=True)
class CalibrationRow:
    applied_frequency: float  # Hz
    applied_displacement: float  # m
    indicated_frequency: float  # Hz
    indicated_displacement: float  # m
    tolerance: float  # Hz

    @property
    def passed(self) -> bool:
        return abs(self.indicated_frequency - self.applied_frequency) <= self.tolerance


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Everything a scenario run produces, for callers that need more than
    the summary report."""

    scenario: Scenario
    carrier: optics.CarrierPlan
    record: VibrationRecord
    accelerometer: TimeSeries
    ldv_spectrum: dsp.Spectrum
    accel_spectrum: dsp.Spectrum
    ldv_peak: dsp.PeakEstimate
    accel_peak: dsp.PeakEstimate
    report: ComparisonReport


# --------------------------------------------------------------------------
# channels

def _build(cls, overrides: Mapping):
    try:
        return cls(**overrides)
    except TypeError as exc:
        raise InvalidConfigError(f"bad {cls.__name__} override: {exc}") from None


def _configs(s: Scenario):
    """Optical, detector and demodulator configs for a scenario."""
    opt_kw = dict(s.optical)
    det_kw = dict(s.detector)
    dem_kw = dict(s.demod)
    wavelength = opt_kw.get("wavelength", optics.HENE_WAVELENGTH)
    output_rate = dem_kw.get("output_rate", 20e3)
    plan = optics.plan_carrier(s.motion, wavelength, output_rate)
    if "bragg_shift" in opt_kw or "sample_rate" in det_kw:
        f_b = opt_kw.get("bragg_shift", plan.bragg_shift)
        plan = optics.CarrierPlan(f_b, det_kw.get("sample_rate", 4 * f_b), plan.max_doppler)
    opt_kw.setdefault("bragg_shift", plan.bragg_shift)
    det_kw.setdefault("sample_rate", plan.sample_rate)
    opt = _build(OpticalConfig, opt_kw)
    det = _build(DetectorConfig, det_kw)
    dem_kw.setdefault("carrier", opt.bragg_shift)
    dem_kw.setdefault("input_rate", det.sample_rate)
    return plan, opt, det, _build(DemodConfig, dem_kw)


def _noise_config(overrides: Mapping) -> NoiseConfig:
    kw = dict(overrides)
    if "enabled" in kw:
        kw["enabled"] = frozenset(kw["enabled"])
    return _build(NoiseConfig, kw)


def ldv_channel(s: Scenario, chunk_size: int = CHUNK_SIZE) -> tuple[optics.CarrierPlan, VibrationRecord]:
    """Synthesize, corrupt and demodulate the photocurrent chunk by chunk.

    Synthesis starts ``lead`` samples before the record and runs ``lead``
    past its end, so the I/Q filter sees real signal at both edges.
    """
    plan, opt, det, cfg = _configs(s)
    n = motion.sample_count(det.sample_rate, s.duration)
    lead = cfg.iq_filter().size
    dc = det.responsivity * opt.dc_intensity
    noise = NoiseModel(_noise_config(s.noise), det, dc, s.seed, n)
    receiver = demod.StreamingDemodulator(cfg, n, lead)
    for start in range(-lead, n + lead, chunk_size):
        stop = min(start + chunk_size, n + lead)
        clean = optics.detector_current_range(s.motion, opt, det, start, stop, s.duration)
        receiver.push(noise.apply(clean, start))
    record = demod.kinematics_from_phase(receiver.finish(), opt.wavelength, cfg)
    return plan, record


def accelerometer_channel(s: Scenario) -> TimeSeries:
    cfg = _build(AccelerometerConfig, s.accelerometer)
    kin = motion.synth_kinematics(s.motion, cfg.sample_rate, s.duration)
    return simulate_accelerometer(kin, cfg, s.seed)


def simulate(s: Scenario, chunk_size: int = CHUNK_SIZE) -> ScenarioResult:
    """Run both channels of a scenario.  Module errors come back as
    :class:`ScenarioError` naming the scenario."""
    try:
        plan, record = ldv_channel(s, chunk_size)
        displacement = record.displacement
        if s.smoothing_terms:
            displacement = dsp.henderson_smooth(displacement, s.smoothing_terms)
        ldv_spectrum = dsp.compute_spectrum(displacement, dsp.HANN)
        ldv_peak = dsp.peak_frequency(ldv_spectrum, s.analysis_band)
        accel = accelerometer_channel(s)
        accel_spectrum = dsp.compute_spectrum(accel, dsp.HANN)
        accel_peak = accel_peak_frequency(accel, s.analysis_band)
    except LDVError as exc:
        raise ScenarioError(s.name, exc) from exc
    truth = math.nan if s.truth_frequency is None else float(s.truth_frequency)
    report = ComparisonReport(
        component=s.name,
        truth_frequency=truth,
        ldv_frequency=ldv_peak.frequency,
        accel_frequency=accel_peak.frequency,
        displacement_amplitude_recovered=ldv_peak.amplitude,
        tolerance=s.tolerance,
        accel_tolerance=s.accel_tolerance,
        cross_tolerance=s.cross_tolerance,
    )
    return ScenarioResult(s, plan, record, accel, ldv_spectrum, accel_spectrum, ldv_peak, accel_peak, report)


def run_scenario(s: Scenario) -> ComparisonReport:
    return simulate(s).report


# --------------------------------------------------------------------------
# built-in suites

# applied frequency (Hz), applied displacement (m), tolerance (Hz)
CALIBRATION_POINTS = (
    (10.0, 163e-6, 0.30),
    (20.0, 4.15e-3, 0.20),
    (30.0, 1.68e-3, 0.15),
    (40.0, 336e-6, 0.15),
    (50.0, 184e-6, 0.15),
    (60.0, 1.70e-3, 0.15),
    (70.0, 434e-6, 0.15),
    (80.0, 1.16e-3, 0.15),
    (90.0, 165e-6, 0.15),
    (100.0, 770e-6, 0.15),
    (130.0, 401e-6, 0.15),
)

# name, frequency (Hz), displacement amplitude (m)
COMPONENTS = (
    ("pad", 6.0, 0.5e-3),
    ("air filter", 32.0, 0.2e-3),
    ("gear", 76.0, 0.1e-3),
    ("gear variant", 85.0, 0.1e-3),
)


def _tone_scenario(name, frequency, amplitude, seed, tolerance=LDV_TOLERANCE, noise=None) -> Scenario:
    return Scenario(
        name=name,
        motion=MotionProfile.sinusoid(amplitude, frequency),
        noise=dict(noise or {}),
        seed=seed,
        analysis_band=(0.5 * frequency, 1.5 * frequency),
        tolerance=tolerance,
    )


def calibration_scenarios(seed: RandomSeed = RandomSeed(), noise: Mapping | None = None) -> list[Scenario]:
    return [
        _tone_scenario(f"calibration {f:g} Hz", f, a, seed.spawn(i), tol, noise)
        for i, (f, a, tol) in enumerate(CALIBRATION_POINTS)
    ]


def component_scenarios(seed: RandomSeed = RandomSeed(), noise: Mapping | None = None) -> list[Scenario]:
    return [
        _tone_scenario(name, f, a, seed.spawn(i), noise=noise)
        for i, (name, f, a) in enumerate(COMPONENTS)
    ]


def air_filter_40hz(seed: RandomSeed = RandomSeed()) -> Scenario:
    """The air filter driven at 40 Hz."""
    return _tone_scenario("air filter 40 Hz", 40.0, 0.2e-3, seed)


def worker_count(jobs: int) -> int:
    """Workers for ``jobs`` scenarios, capped by ``LDV_LAB_THREADS`` and the CPU count."""
    cap = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise InvalidConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if cap < 1:
            raise InvalidConfigError(f"{THREADS_ENV} must be >= 1")
    return max(1, min(cap, jobs))


def run_all(scenarios: Sequence[Scenario], fn: Callable = run_scenario, workers: int | None = None) -> list:
    """``fn`` over every scenario, in order.  Results do not depend on the
    worker count because each scenario carries its own seed."""
    workers = worker_count(len(scenarios)) if workers is None else max(1, min(workers, len(scenarios)))
    if workers == 1:
        return [fn(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, scenarios))


def _calibration_row(s: Scenario) -> CalibrationRow:
    report = run_scenario(s)
    tone = s.motion.components[0]
    return CalibrationRow(
        applied_frequency=tone.frequency,
        applied_displacement=tone.amplitude,
        indicated_frequency=report.ldv_frequency,
        indicated_displacement=report.displacement_amplitude_recovered,
        tolerance=s.tolerance,
    )


def run_calibration_table(
    seed: RandomSeed = RandomSeed(), noise: Mapping | None = None, workers: int | None = None
) -> list[CalibrationRow]:
    return run_all(calibration_scenarios(seed, noise), _calibration_row, workers)


def run_component_suite(
    seed: RandomSeed = RandomSeed(), noise: Mapping | None = None, workers: int | None = None
) -> list[ComparisonReport]:
    return run_all(component_scenarios(seed, noise), run_scenario, workers)


def all_passed(rows: Iterable) -> bool:
    return all(r.passed for r in rows)
