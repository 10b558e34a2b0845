"""Run configuration: JSON loading, validation, and defaults.

One JSON document configures the whole pipeline. Unknown keys are rejected
at every level so a typo cannot silently fall back to a default. Flag
values passed on the command line override file values, which override the
built-in defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .morphology import StructuringElement
from .segmentation import HueRange, StainThresholds, default_thresholds


class ConfigError(ValueError):
    """Raised for an unreadable, malformed, or invalid configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything the analyze pipeline needs besides the images."""

    thresholds: StainThresholds
    structuring_element: StructuringElement
    morphology_passes: int = 1
    connectivity: int = 8
    min_area: int = 20
    max_area: int | None = None
    output_dir: Path = Path("analysis")
    emit_overlays: bool = False

    def __post_init__(self):
        if self.morphology_passes < 0:
            raise ConfigError(f"morphology_passes must be >= 0, got {self.morphology_passes}")
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_area < 0:
            raise ConfigError(f"min_area must be >= 0, got {self.min_area}")
        if self.max_area is not None and self.max_area < self.min_area:
            raise ConfigError(f"max_area {self.max_area} is below min_area {self.min_area}")


def default_config() -> RunConfig:
    """Built-in defaults: default stain thresholds, one 3x3 opening pass,
    8-connectivity, 20-pixel area floor, no area ceiling."""
    return RunConfig(
        thresholds=default_thresholds(),
        structuring_element=StructuringElement.square(1),
    )


def _reject_unknown(section: str, data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")


def _expect_int(section: str, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    return value


def _expect_number(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _parse_hue_range(name: str, data) -> HueRange:
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object with 'from' and 'to' degrees")
    _reject_unknown(name, data, {"from", "to"})
    if "from" not in data or "to" not in data:
        raise ConfigError(f"{name} needs both 'from' and 'to' degrees")
    return HueRange(
        _expect_number(name, "from", data["from"]),
        _expect_number(name, "to", data["to"]),
    )


def _parse_thresholds(data) -> StainThresholds:
    if not isinstance(data, dict):
        raise ConfigError("thresholds must be an object")
    allowed = {"positive_hue", "negative_hue", "min_saturation", "min_value", "max_value"}
    _reject_unknown("thresholds", data, allowed)
    base = default_thresholds()
    return StainThresholds(
        positive_hue=_parse_hue_range("positive_hue", data["positive_hue"])
        if "positive_hue" in data
        else base.positive_hue,
        negative_hue=_parse_hue_range("negative_hue", data["negative_hue"])
        if "negative_hue" in data
        else base.negative_hue,
        min_saturation=_expect_number("thresholds", "min_saturation", data["min_saturation"])
        if "min_saturation" in data
        else base.min_saturation,
        min_value=_expect_number("thresholds", "min_value", data["min_value"])
        if "min_value" in data
        else base.min_value,
        max_value=_expect_number("thresholds", "max_value", data["max_value"])
        if "max_value" in data
        else base.max_value,
    )


def _parse_structuring_element(data) -> StructuringElement:
    if not isinstance(data, dict):
        raise ConfigError("structuring_element must be an object")
    _reject_unknown("structuring_element", data, {"shape", "radius", "matrix"})
    if "matrix" in data:
        if "shape" in data or "radius" in data:
            raise ConfigError("structuring_element takes either a matrix or a shape, not both")
        return StructuringElement.from_matrix(data["matrix"])
    shape = data.get("shape", "square")
    radius = _expect_int("structuring_element", "radius", data.get("radius", 1))
    if shape == "square":
        return StructuringElement.square(radius)
    if shape == "cross":
        return StructuringElement.cross(radius)
    raise ConfigError(f"structuring_element shape must be 'square' or 'cross', got {shape!r}")


_TOP_LEVEL_KEYS = {
    "thresholds",
    "structuring_element",
    "morphology_passes",
    "connectivity",
    "min_area",
    "max_area",
    "output_dir",
    "emit_overlays",
}


def parse_config(data: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON document; absent keys keep their
    built-in defaults, unknown keys raise ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    _reject_unknown("config", data, _TOP_LEVEL_KEYS)
    base = default_config()
    try:
        updates: dict = {}
        if "thresholds" in data:
            updates["thresholds"] = _parse_thresholds(data["thresholds"])
        if "structuring_element" in data:
            updates["structuring_element"] = _parse_structuring_element(data["structuring_element"])
        if "morphology_passes" in data:
            updates["morphology_passes"] = _expect_int("config", "morphology_passes", data["morphology_passes"])
        if "connectivity" in data:
            updates["connectivity"] = _expect_int("config", "connectivity", data["connectivity"])
        if "min_area" in data:
            updates["min_area"] = _expect_int("config", "min_area", data["min_area"])
        if "max_area" in data:
            updates["max_area"] = (
                None if data["max_area"] is None else _expect_int("config", "max_area", data["max_area"])
            )
        if "output_dir" in data:
            if not isinstance(data["output_dir"], str):
                raise ConfigError(f"config.output_dir must be a string, got {data['output_dir']!r}")
            updates["output_dir"] = Path(data["output_dir"])
        if "emit_overlays" in data:
            if not isinstance(data["emit_overlays"], bool):
                raise ConfigError(f"config.emit_overlays must be a boolean, got {data['emit_overlays']!r}")
            updates["emit_overlays"] = data["emit_overlays"]
        return replace(base, **updates)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
