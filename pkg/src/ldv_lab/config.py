"""Scenario files.

A scenario file is TOML with one ``[scenario.<name>]`` table per scenario::

    [scenario.pad]
    duration = 2.0
    analysis_band = [3.0, 9.0]
    seed = 7

    [scenario.pad.motion]
    kind = "sinusoid"
    components = [{ amplitude = 5e-4, frequency = 6.0 }]

    [scenario.pad.noise]
    enabled = ["shot", "thermal", "flicker"]

``optical``, ``noise``, ``demod``, ``accelerometer`` and ``detector`` tables
hold keyword overrides for the matching config class.
"""
from __future__ import annotations

import sys
from pathlib import Path

from .errors import InvalidConfigError, InvalidProfileError
from .harness import Scenario
from .motion import CHIRP, MotionProfile, Tone
from .rng import RandomSeed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_OVERRIDES = ("optical", "noise", "demod", "accelerometer", "detector")
_SCALARS = ("duration", "truth_frequency", "smoothing_terms", "tolerance", "accel_tolerance", "cross_tolerance")
_KNOWN = set(_OVERRIDES) | set(_SCALARS) | {"motion", "seed", "analysis_band"}


def _motion(name: str, table: dict) -> MotionProfile:
    kind = table.get("kind", "sinusoid")
    try:
        tones = tuple(Tone(**c) for c in table["components"])
    except (KeyError, TypeError) as exc:
        raise InvalidConfigError(f"scenario {name!r}: bad motion components ({exc})") from None
    if kind == CHIRP:
        if "f_end" not in table:
            raise InvalidProfileError(f"scenario {name!r}: chirp needs f_end")
        return MotionProfile(tones, kind=kind, f_end=float(table["f_end"]))
    return MotionProfile(tones, kind=kind)


def _seed(value) -> RandomSeed:
    if isinstance(value, int):
        return RandomSeed(value)
    if isinstance(value, dict):
        return RandomSeed(value.get("seed", 0), value.get("stream_id", 0), tuple(value.get("path", ())))
    raise InvalidConfigError(f"seed must be an integer or a table, got {value!r}")


def scenario_from_table(name: str, table: dict) -> Scenario:
    unknown = set(table) - _KNOWN
    if unknown:
        raise InvalidConfigError(f"scenario {name!r}: unknown keys {sorted(unknown)}")
    if "motion" not in table:
        raise InvalidConfigError(f"scenario {name!r} has no motion table")
    kwargs = {key: dict(table[key]) for key in _OVERRIDES if key in table}
    kwargs.update({key: table[key] for key in _SCALARS if key in table})
    if "seed" in table:
        kwargs["seed"] = _seed(table["seed"])
    if "analysis_band" in table:
        kwargs["analysis_band"] = tuple(table["analysis_band"])
    return Scenario(name=name, motion=_motion(name, table["motion"]), **kwargs)


def parse_scenarios(text: str) -> dict[str, Scenario]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfigError(f"invalid TOML: {exc}") from None
    tables = data.get("scenario")
    if not isinstance(tables, dict) or not tables:
        raise InvalidConfigError("no [scenario.<name>] tables found")
    return {name: scenario_from_table(name, table) for name, table in tables.items()}


def load_scenarios(path) -> dict[str, Scenario]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfigError(f"cannot read {path}: {exc}") from None
    return parse_scenarios(text)
