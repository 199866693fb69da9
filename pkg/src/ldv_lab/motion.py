"""Prescribed target kinematics.

Targets are kinematic profiles, not structures: displacement is a sum of
sinusoids (or a linear chirp) and velocity/acceleration are its exact
analytical derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidProfileError, SamplingViolationError

SINUSOID = "sinusoid"
MULTI_TONE = "multi-tone"
CHIRP = "chirp"
KINDS = (SINUSOID, MULTI_TONE, CHIRP)


@dataclass(frozen=True)
class Tone:
    amplitude: float  # m
    frequency: float  # Hz
    phase: float = 0.0  # rad


@dataclass(frozen=True)
class MotionProfile:
    """Target displacement law.

    For ``kind == "chirp"`` there is exactly one component, whose frequency is
    the sweep start; ``f_end`` is the sweep stop frequency.
    """

    components: tuple[Tone, ...]
    kind: str = SINUSOID
    f_end: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise InvalidProfileError("motion profile has no components")
        if self.kind not in KINDS:
            raise InvalidProfileError(f"unknown profile kind {self.kind!r}")
        for c in self.components:
            if not c.amplitude >= 0:
                raise InvalidProfileError(f"amplitude must be >= 0, got {c.amplitude}")
            if not c.frequency > 0:
                raise InvalidProfileError(f"frequency must be > 0, got {c.frequency}")
        freqs = [c.frequency for c in self.components]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise InvalidProfileError("multi-tone frequencies must be strictly increasing")
        if self.kind == SINUSOID and len(self.components) != 1:
            raise InvalidProfileError("a sinusoid profile has exactly one component")
        if self.kind == CHIRP:
            if len(self.components) != 1:
                raise InvalidProfileError("a chirp profile has exactly one component")
            if self.f_end is None or not self.f_end > 0:
                raise InvalidProfileError("a chirp needs a positive f_end")

    @classmethod
    def sinusoid(cls, amplitude: float, frequency: float, phase: float = 0.0) -> MotionProfile:
        return cls((Tone(amplitude, frequency, phase),))

    @classmethod
    def multi_tone(cls, tones: Sequence[Tone | tuple]) -> MotionProfile:
        tones = tuple(t if isinstance(t, Tone) else Tone(*t) for t in tones)
        return cls(tones, kind=MULTI_TONE)

    @classmethod
    def chirp(cls, amplitude: float, f_start: float, f_end: float, phase: float = 0.0) -> MotionProfile:
        return cls((Tone(amplitude, f_start, phase),), kind=CHIRP, f_end=f_end)

    @property
    def max_frequency(self) -> float:
        top = max(c.frequency for c in self.components)
        if self.kind == CHIRP:
            top = max(top, self.f_end)
        return top

    @property
    def min_frequency(self) -> float:
        low = min(c.frequency for c in self.components)
        if self.kind == CHIRP:
            low = min(low, self.f_end)
        return low


@dataclass(frozen=True, eq=False)
class SampledKinematics:
    sample_rate: float
    displacement: np.ndarray  # m
    velocity: np.ndarray  # m/s
    acceleration: np.ndarray  # m/s^2

    def __post_init__(self):
        n = len(self.displacement)
        if len(self.velocity) != n or len(self.acceleration) != n:
            raise InvalidProfileError("kinematic series must have equal length")

    def __len__(self) -> int:
        return len(self.displacement)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate


def peak_speed(profile: MotionProfile) -> float:
    """Upper bound on |v(t)|, exact for a single tone."""
    if profile.kind == CHIRP:
        c = profile.components[0]
        return 2 * math.pi * profile.max_frequency * c.amplitude
    return sum(2 * math.pi * c.frequency * c.amplitude for c in profile.components)


def evaluate(profile: MotionProfile, t: np.ndarray, duration: float | None = None):
    """Displacement, velocity and acceleration at instants ``t``.

    ``duration`` sets the sweep length of a chirp and is ignored otherwise.
    """
    t = np.asarray(t, dtype=float)
    x = np.zeros_like(t)
    v = np.zeros_like(t)
    a = np.zeros_like(t)
    if profile.kind == CHIRP:
        if duration is None or not duration > 0:
            raise InvalidProfileError("a chirp needs a positive sweep duration")
        c = profile.components[0]
        rate = (profile.f_end - c.frequency) / duration  # Hz/s
        theta = 2 * np.pi * (c.frequency * t + 0.5 * rate * t * t) + c.phase
        dtheta = 2 * np.pi * (c.frequency + rate * t)
        ddtheta = 2 * np.pi * rate
        s, co = np.sin(theta), np.cos(theta)
        x += c.amplitude * s
        v += c.amplitude * dtheta * co
        a += c.amplitude * (ddtheta * co - dtheta * dtheta * s)
        return x, v, a
    for c in profile.components:
        w = 2 * np.pi * c.frequency
        theta = w * t + c.phase
        s = np.sin(theta)
        x += c.amplitude * s
        v += c.amplitude * w * np.cos(theta)
        a -= c.amplitude * w * w * s
    return x, v, a


def sample_count(sample_rate: float, duration: float) -> int:
    return int(round(duration * sample_rate))


def check_sampling(profile: MotionProfile, sample_rate: float) -> None:
    if not sample_rate > 10 * profile.max_frequency:
        raise SamplingViolationError(
            f"sample rate {sample_rate} Hz must exceed 10x the highest profile "
            f"frequency ({profile.max_frequency} Hz)"
        )


def synth_kinematics(profile: MotionProfile, sample_rate: float, duration: float) -> SampledKinematics:
    """Sample the profile at ``n / sample_rate`` for ``n = 0 .. round(duration*fs) - 1``."""
    check_sampling(profile, sample_rate)
    if not duration > 0:
        raise InvalidProfileError(f"duration must be positive, got {duration}")
    n = sample_count(sample_rate, duration)
    if n < 1:
        raise SamplingViolationError("duration shorter than one sample")
    t = np.arange(n) / sample_rate
    x, v, a = evaluate(profile, t, duration)
    return SampledKinematics(sample_rate, x, v, a)
