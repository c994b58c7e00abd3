"""JSON run configuration.

One document with the sections ``optics``, ``arm``, ``mapping``, ``noise``,
``scan``, ``sequence`` and ``landscape``. Every section and key is optional
and falls back to the library defaults. Unknown keys are rejected, and
errors name the offending field as a dotted path (``noise.rate_scale``).
Units are SI; angular frequencies are rad/s and rotations are Hz.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Mapping

import numpy as np

from .physics import OpticalConfig, SagnacArm, StageMapping
from .simulate import MotorCalibration, NoiseModel, ScanSpec, SequenceSpec


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted location of the problem."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


@dataclass(frozen=True)
class LandscapeGrid:
    """Rotation (Hz, signed) and delay (s) grids for a coincidence landscape."""

    rotation_hz: tuple = tuple(np.linspace(-1.0, 1.0, 41))
    delay_s: tuple = tuple(np.linspace(-2.5e-12, 2.5e-12, 201))

    def __post_init__(self):
        for name in ("rotation_hz", "delay_s"):
            v = tuple(float(x) for x in getattr(self, name))
            if not v:
                raise ValueError(f"{name} must not be empty")
            if not all(math.isfinite(x) for x in v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class RunConfig:
    optics: OpticalConfig = field(default_factory=OpticalConfig)
    arm: SagnacArm = field(default_factory=SagnacArm)
    mapping: StageMapping = field(default_factory=StageMapping)
    noise: NoiseModel = field(default_factory=NoiseModel)
    scan: ScanSpec = None
    sequence: SequenceSpec = field(default_factory=SequenceSpec)
    landscape: LandscapeGrid = field(default_factory=LandscapeGrid)

    def __post_init__(self):
        if self.scan is None:
            object.__setattr__(self, "scan", ScanSpec.around_feature(self.arm, self.mapping))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, noise=replace(self.noise, rng_seed=int(seed)))

    def to_dict(self) -> Dict[str, Any]:
        out = {name: asdict(getattr(self, name)) for name in
               ("optics", "arm", "mapping", "noise", "landscape")}
        out["scan"] = {"stage_positions": list(self.scan.stage_positions)}
        out["sequence"] = {
            "rotation_steps": list(self.sequence.rotation_steps),
            "direction": self.sequence.direction,
            "calibration": asdict(self.sequence.calibration),
        }
        out["landscape"] = {k: list(v) for k, v in out["landscape"].items()}
        return out


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {json.dumps(value)}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _number_list(value, path):
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _grid(value, path):
    """A list of numbers, or ``{"start", "stop", "num"}`` for an even grid."""
    if isinstance(value, Mapping):
        _check_keys(value, {"start", "stop", "num"}, path)
        missing = {"start", "stop", "num"} - set(value)
        if missing:
            raise ConfigError(f"{path}.{sorted(missing)[0]}", "required")
        num = value["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError(f"{path}.num", "expected a positive integer")
        return list(np.linspace(_number(value["start"], f"{path}.start"),
                                _number(value["stop"], f"{path}.stop"), num))
    return _number_list(value, path)


def _check_keys(section, allowed, path):
    if not isinstance(section, Mapping):
        raise ConfigError(path, "expected an object")
    for key in section:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, "unknown key")


def _build(cls, kwargs, path):
    """Construct ``cls`` and attribute constructor errors to a field if one is named."""
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        for name in kwargs:
            if msg.startswith(name) or f" {name} " in f" {msg} ":
                raise ConfigError(f"{path}.{name}", msg) from None
        raise ConfigError(path, msg) from None


def _simple_section(cls, raw, path):
    names = {f.name for f in fields(cls)}
    _check_keys(raw, names, path)
    kwargs = {}
    for key, value in raw.items():
        if key == "rng_seed":
            if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
                raise ConfigError(f"{path}.{key}", "expected an unsigned 64-bit integer")
            kwargs[key] = value
        else:
            kwargs[key] = _number(value, f"{path}.{key}")
    return _build(cls, kwargs, path)


_SCAN_KEYS = {"stage_positions", "step", "half_width", "feature"}


def _scan_section(raw, arm, mapping):
    _check_keys(raw, _SCAN_KEYS, "scan")
    if "stage_positions" in raw:
        extra = set(raw) - {"stage_positions"}
        if extra:
            raise ConfigError(f"scan.{sorted(extra)[0]}", "not allowed together with stage_positions")
        return _build(ScanSpec, {"stage_positions": _number_list(raw["stage_positions"], "scan.stage_positions"),
                                 "mapping": mapping}, "scan")
    kwargs = {k: _number(v, f"scan.{k}") for k, v in raw.items()}
    if "step" in kwargs and not kwargs["step"] > 0:
        raise ConfigError("scan.step", "must be positive")
    if "half_width" in kwargs and not kwargs["half_width"] >= 0:
        raise ConfigError("scan.half_width", "must be >= 0")
    if "feature" in kwargs:
        if kwargs["feature"] != int(kwargs["feature"]) or abs(kwargs["feature"]) > 2:
            raise ConfigError("scan.feature", "expected an integer in [-2, 2]")
        kwargs["feature"] = int(kwargs["feature"])
    return ScanSpec.around_feature(arm, mapping, **kwargs)


def _sequence_section(raw):
    _check_keys(raw, {"rotation_steps", "direction", "calibration"}, "sequence")
    kwargs = {}
    if "rotation_steps" in raw:
        kwargs["rotation_steps"] = _grid(raw["rotation_steps"], "sequence.rotation_steps")
    if "direction" in raw:
        kwargs["direction"] = raw["direction"]
    if "calibration" in raw:
        kwargs["calibration"] = _simple_section(MotorCalibration, raw["calibration"], "sequence.calibration")
    return _build(SequenceSpec, kwargs, "sequence")


def _landscape_section(raw):
    _check_keys(raw, {"rotation_hz", "delay_s"}, "landscape")
    kwargs = {k: _grid(v, f"landscape.{k}") for k, v in raw.items()}
    return _build(LandscapeGrid, kwargs, "landscape")


def config_from_dict(raw: Mapping) -> RunConfig:
    _check_keys(raw, {"optics", "arm", "mapping", "noise", "scan", "sequence", "landscape"}, "")
    optics = _simple_section(OpticalConfig, raw.get("optics", {}), "optics")
    arm = _simple_section(SagnacArm, raw.get("arm", {}), "arm")
    mapping = _simple_section(StageMapping, raw.get("mapping", {}), "mapping")
    noise = _simple_section(NoiseModel, raw.get("noise", {}), "noise")
    scan = _scan_section(raw.get("scan", {}), arm, mapping)
    sequence = _sequence_section(raw.get("sequence", {}))
    landscape = _landscape_section(raw.get("landscape", {}))
    return RunConfig(optics=optics, arm=arm, mapping=mapping, noise=noise, scan=scan,
                     sequence=sequence, landscape=landscape)


def load_config(path) -> RunConfig:
    """Read and validate a JSON run configuration.

    Raises :class:`ConfigError` for malformed JSON or invalid values, and
    ``OSError`` if the file cannot be read.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(raw)


__all__ = ["ConfigError", "LandscapeGrid", "RunConfig", "config_from_dict", "load_config"]
