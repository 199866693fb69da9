"""Digital twin of a heterodyne laser Doppler vibrometer.

The LDV channel synthesizes the photodetector current of an interferometer
watching a vibrating target, adds detector noise, demodulates the beat and
estimates the vibration frequency.  A simulated accelerometer on the same
target provides the reference channel.
"""
from .demod import DemodConfig, VibrationRecord
from .errors import (
    DesignFailureError,
    InvalidConfigError,
    InvalidInputError,
    InvalidProfileError,
    LDVError,
    ReportIOError,
    SamplingViolationError,
    ScenarioError,
)
from .harness import (
    CalibrationRow,
    ComparisonReport,
    Scenario,
    run_calibration_table,
    run_component_suite,
    run_scenario,
    simulate,
)
from .motion import MotionProfile, SampledKinematics, Tone
from .noise import NoiseConfig
from .optics import DetectorConfig, OpticalConfig
from .reference import AccelerometerConfig
from .report import emit_report, emit_spectrum_data
from .rng import RandomSeed
from .series import TimeSeries

__version__ = "0.1.0"

__all__ = [
    "AccelerometerConfig",
    "CalibrationRow",
    "ComparisonReport",
    "DemodConfig",
    "DesignFailureError",
    "DetectorConfig",
    "InvalidConfigError",
    "InvalidInputError",
    "InvalidProfileError",
    "LDVError",
    "MotionProfile",
    "NoiseConfig",
    "OpticalConfig",
    "RandomSeed",
    "ReportIOError",
    "SampledKinematics",
    "SamplingViolationError",
    "Scenario",
    "ScenarioError",
    "TimeSeries",
    "Tone",
    "VibrationRecord",
    "emit_report",
    "emit_spectrum_data",
    "run_calibration_table",
    "run_component_suite",
    "run_scenario",
    "simulate",
]
