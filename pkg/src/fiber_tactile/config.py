#!/usr/bin/env python
# encoding: utf-8
"""
Pipeline configuration, loaded from a JSON file.

Every key is optional; anything missing falls back to the defaults below.
The simulator noise profile is tuned so that the closed loop reproduces the
statistics reported for the physical gripper, and is meant to stay frozen.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type, TypeVar, Union

from fiber_tactile.errors import DocumentNotFoundError, MalformedDocumentError
from fiber_tactile.estimation import ForceCurve, PairMap, SortingBoundary
from fiber_tactile.sensor_model import SensorChannelModel

logger = logging.getLogger("fiber_tactile")

T = TypeVar("T")

SIMULATED_PROFILE_TIMESTAMP = "2000-01-01T00:00:00"

PRISMATIC_RIGID = "rigid-prismatic"
VERY_SOFT = "soft"
SPHERE = "sphere"
IRREGULAR = "irregular"
SLENDER = "slender"

DEFAULT_COMPOSITION = {
    PRISMATIC_RIGID: 26,
    VERY_SOFT: 9,
    SPHERE: 2,
    IRREGULAR: 1,
    SLENDER: 4,
}


@dataclass(frozen=True)
class SensorDefaults:
    v_rest: float = 4.5
    d_lo: float = 5.0
    d_hi: float = 30.0
    d_max: float = 35.0
    slope: float = -0.12
    noise_sigma_linear: float = 0.12
    noise_sigma_unstable: float = 0.30
    ambient_offset: float = 0.0
    adc_bits: int = 10

    def model(self) -> SensorChannelModel:
        return SensorChannelModel(**asdict(self))


@dataclass(frozen=True)
class FabricationConfig:
    gain_spread: float = 0.10
    offset_spread: float = 0.20


@dataclass(frozen=True)
class GeometryConfig:
    n_active_fingers: int = 2
    n_deforming_fingers: int = 2
    valid_interval: Tuple[float, float] = (5.0, 30.0)
    pair_tolerance: float = 4.0
    strain_threshold: float = 0.10
    pairs: Mapping[str, Tuple[int, ...]] = field(
        default_factory=lambda: {
            "outer-a": (0, 1),
            "inner-a": (2, 3),
            "inner-b": (4, 5),
            "outer-b": (6, 7),
        }
    )
    intermediate_pairs: Tuple[str, ...] = ("inner-a", "inner-b")


@dataclass(frozen=True)
class GripperSettings:
    max_gap: float = 150.0
    min_gap: float = 0.0
    closing_speed: float = 50.0
    force_setpoint: float = 8.0
    force_curve: Tuple[Tuple[float, float], ...] = (
        (0.0, 0.0),
        (5.0, 1.0),
        (30.0, 6.0),
    )
    finger_multiplicity: int = 2


@dataclass(frozen=True)
class CalibrationSettings:
    plate_widths: Tuple[float, ...] = (32.0, 42.0, 52.0, 62.0, 72.0, 78.0)
    commanded_gap: float = 20.0
    repetitions: int = 3
    r2_threshold: float = 0.95
    # Simulated plates have no acquisition time; null stamps the wall clock
    timestamp: Optional[str] = SIMULATED_PROFILE_TIMESTAMP


@dataclass(frozen=True)
class SimulatorSettings:
    noise: bool = True
    rate_hz: float = 100.0
    approach_ms: float = 200.0
    hold_ms: float = 500.0
    ambient_drift_sigma: float = 0.05
    sphere_skew: float = 0.30
    outer_fraction: float = 0.6
    section_step: float = 40.0
    characterization_step: float = 0.1
    workers: int = 1
    composition: Mapping[str, int] = field(
        default_factory=lambda: dict(DEFAULT_COMPOSITION)
    )


@dataclass(frozen=True)
class TelemetrySettings:
    filter_window: int = 5
    # Wider smoothing used only to locate the hold phase
    steady_window: int = 25
    steady_slope: float = 0.5
    chunk_size: int = 4096


@dataclass(frozen=True)
class PipelineConfig:
    channels: int = 8
    sensor: SensorDefaults = field(default_factory=SensorDefaults)
    fabrication: FabricationConfig = field(default_factory=FabricationConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    gripper: GripperSettings = field(default_factory=GripperSettings)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    simulator: SimulatorSettings = field(default_factory=SimulatorSettings)
    telemetry: TelemetrySettings = field(default_factory=TelemetrySettings)

    @property
    def channel_ids(self) -> List[int]:
        return list(range(self.channels))

    def force_curve(self) -> ForceCurve:
        return ForceCurve(
            samples=tuple(self.gripper.force_curve),
            finger_multiplicity=self.gripper.finger_multiplicity,
        )

    def pair_map(self) -> PairMap:
        return PairMap(
            pairs=dict(self.geometry.pairs),
            intermediate=tuple(self.geometry.intermediate_pairs),
        )

    def boundary(self) -> SortingBoundary:
        return SortingBoundary(strain_threshold=self.geometry.strain_threshold)


SECTIONS: Dict[str, Type[Any]] = {
    "sensor": SensorDefaults,
    "fabrication": FabricationConfig,
    "geometry": GeometryConfig,
    "gripper": GripperSettings,
    "calibration": CalibrationSettings,
    "simulator": SimulatorSettings,
    "telemetry": TelemetrySettings,
}


def _freeze(value: Any) -> Any:
    """JSON arrays become tuples inside frozen config sections"""
    if isinstance(value, list):
        return tuple(_freeze(item) for item in value)
    if isinstance(value, dict):
        return {key: _freeze(item) for key, item in value.items()}
    return value


def _build(cls: Type[T], data: Mapping[str, Any], section: str) -> T:
    if not isinstance(data, dict):
        raise MalformedDocumentError(f"config section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise MalformedDocumentError(
            f"unknown keys in config section {section!r}: {sorted(unknown)}"
        )
    try:
        return cls(**{key: _freeze(value) for key, value in data.items()})
    except (TypeError, ValueError) as e:
        raise MalformedDocumentError(f"invalid config section {section!r}: {e}")


def config_from_dict(data: Mapping[str, Any]) -> PipelineConfig:
    unknown = set(data) - set(SECTIONS) - {"channels"}
    if unknown:
        raise MalformedDocumentError(f"unknown config sections: {sorted(unknown)}")

    sections = {
        name: _build(cls, data.get(name, {}), name) for name, cls in SECTIONS.items()
    }
    channels = data.get("channels", 8)
    if not isinstance(channels, int) or channels < 0:
        raise MalformedDocumentError("channels must be a non-negative integer")

    config = PipelineConfig(channels=channels, **sections)
    try:
        # Surface inconsistent sensor / geometry / curve settings at load time
        config.sensor.model()
        config.force_curve()
        config.boundary()
        if config.geometry.pairs:
            config.pair_map()
    except (TypeError, ValueError, IndexError) as e:
        raise MalformedDocumentError(f"inconsistent config: {e}")
    return config


def load_config(path: Optional[Union[str, Path]] = None) -> PipelineConfig:
    """Load a JSON config file, or the defaults when no path is given"""
    if path is None:
        return PipelineConfig()

    path = Path(path)
    if not path.exists():
        raise DocumentNotFoundError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise MalformedDocumentError(f"Config file {path} is not valid JSON: {e}")

    if not isinstance(data, dict):
        raise MalformedDocumentError(f"Config file {path} must hold a JSON object")
    logger.debug(f"Loaded config from {path}")
    return config_from_dict(data)
