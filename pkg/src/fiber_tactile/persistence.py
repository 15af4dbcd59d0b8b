#!/usr/bin/env python
# encoding: utf-8
"""
File formats: JSON for calibration profiles, object sets and structured
reports, CSV for tabular reports and newline-delimited JSON for episode logs.
Every document carries ``schema_version``; NaN and infinities are refused in
both directions.
"""

import json
import logging
import math
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Type, Union

from fiber_tactile.calibration import CalibrationProfile, ChannelFit
from fiber_tactile.errors import (
    DocumentNotFoundError,
    DomainError,
    MalformedDocumentError,
    SchemaVersionError,
)
from fiber_tactile.exporters import (
    CsvReportExporter,
    JsonReportExporter,
    ReportExporter,
)
from fiber_tactile.exporters.base import SCHEMA_VERSION
from fiber_tactile.grasp_sim import (
    GraspEpisode,
    ObjectSpec,
    SortingMetrics,
    SortingReport,
    SortingRow,
    compute_metrics,
)
from fiber_tactile.sensor_model import SensorReading

logger = logging.getLogger("fiber_tactile")

STRUCTURED = "structured"
TABULAR = "tabular"

EXPORTERS: Dict[str, Type[ReportExporter]] = {
    STRUCTURED: JsonReportExporter,
    TABULAR: CsvReportExporter,
}

METRIC_TOLERANCE = 1e-9

PathLike = Union[str, Path]


def _reject_constant(name: str) -> Any:
    raise MalformedDocumentError(f"non-finite value {name} in document")


def _parse(text: str, source: PathLike) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise MalformedDocumentError(f"{source} is not valid JSON: {e}")


def _load_document(path: PathLike) -> Dict[str, Any]:
    """Read a versioned JSON document"""
    path = Path(path)
    if not path.exists():
        raise DocumentNotFoundError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = _parse(f.read(), path)
    if not isinstance(data, dict):
        raise MalformedDocumentError(f"{path} must hold a JSON object")

    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(version, SCHEMA_VERSION)
    return data


def _save_document(data: Dict[str, Any], path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        text = json.dumps(data, indent=2, allow_nan=False)
    except ValueError as e:
        raise DomainError(f"refusing to write non-finite values: {e}")
    with open(path, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    logger.debug(f"Saved {path}")


def _require_keys(data: Mapping[str, Any], keys: Sequence[str], what: str) -> None:
    missing = [key for key in keys if key not in data]
    if missing:
        raise MalformedDocumentError(f"{what} is missing {missing}")


def _finite_float(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedDocumentError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise MalformedDocumentError(f"{what} must be finite")
    return float(value)


# Calibration profiles


def profile_to_document(profile: CalibrationProfile) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "valid_interval": list(profile.valid_interval),
        "n_deforming_fingers": profile.n_deforming_fingers,
        "created_at": profile.created_at,
        "r2_threshold_used": profile.r2_threshold_used,
        "channels": [asdict(profile.fits[channel]) for channel in profile.channel_ids],
    }


def profile_from_document(data: Mapping[str, Any]) -> CalibrationProfile:
    _require_keys(
        data,
        ["valid_interval", "n_deforming_fingers", "created_at", "r2_threshold_used"],
        "profile",
    )
    try:
        fits = {}
        for entry in data.get("channels", []):
            _require_keys(entry, [f.name for f in fields(ChannelFit)], "channel fit")
            fit = ChannelFit(
                channel_id=int(entry["channel_id"]),
                slope=_finite_float(entry["slope"], "slope"),
                intercept=_finite_float(entry["intercept"], "intercept"),
                r_squared=_finite_float(entry["r_squared"], "r_squared"),
            )
            fits[fit.channel_id] = fit

        low, high = data["valid_interval"]
        return CalibrationProfile(
            fits=fits,
            valid_interval=(
                _finite_float(low, "valid_interval"),
                _finite_float(high, "valid_interval"),
            ),
            n_deforming_fingers=int(data["n_deforming_fingers"]),
            created_at=str(data["created_at"]),
            r2_threshold_used=_finite_float(
                data["r2_threshold_used"], "r2_threshold_used"
            ),
        )
    except (DomainError, TypeError, ValueError) as e:
        raise MalformedDocumentError(f"invalid profile: {e}")


def save_profile(profile: CalibrationProfile, path: PathLike) -> None:
    _save_document(profile_to_document(profile), path)


def load_profile(path: PathLike) -> CalibrationProfile:
    profile = profile_from_document(_load_document(path))
    logger.debug(f"Loaded profile for channels {profile.channel_ids} from {path}")
    return profile


# Sorting reports


def write_report(
    report: SortingReport, path: PathLike, format: str = STRUCTURED
) -> Path:
    """Write ``report`` as a JSON document (structured) or CSV table (tabular)"""
    try:
        exporter = EXPORTERS[format]
    except KeyError:
        raise DomainError(
            f"unknown report format {format!r}, expected one of {sorted(EXPORTERS)}"
        ) from None
    return exporter(report).export(path)


def save_report(report: SortingReport, path: PathLike) -> Path:
    return write_report(report, path, STRUCTURED)


def _metrics_match(stored: SortingMetrics, recomputed: SortingMetrics) -> bool:
    for name, value in asdict(recomputed).items():
        other = getattr(stored, name)
        if value is None or other is None:
            if value is not other:
                return False
        elif not math.isclose(value, other, rel_tol=0.0, abs_tol=METRIC_TOLERANCE):
            return False
    return True


def load_report(path: PathLike) -> SortingReport:
    """
    Read a structured report back and check that its aggregate block still
    matches a recomputation from the rows.
    """
    data = _load_document(path)
    _require_keys(data, ["rows", "metrics"], "report")
    try:
        rows = tuple(
            SortingRow(**{**row, "anomalies": tuple(row.get("anomalies", ()))})
            for row in data["rows"]
        )
        metrics = SortingMetrics(**data["metrics"])
    except TypeError as e:
        raise MalformedDocumentError(f"invalid report: {e}")

    recomputed = compute_metrics(rows)
    if not _metrics_match(metrics, recomputed):
        raise MalformedDocumentError(
            f"report aggregates in {path} do not match its rows"
        )
    return SortingReport(rows=rows, metrics=recomputed, seed=int(data.get("seed", 0)))


# Episode logs


def episode_to_record(episode: GraspEpisode) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "object": asdict(episode.object),
        "outcome": episode.outcome,
        "gap_at_contact": episode.gap_at_contact,
        "gap_at_steady": episode.gap_at_steady,
        "true_compressed_diameter": episode.true_compressed_diameter,
        "midpoint_displacement": episode.midpoint_displacement,
        "compression": episode.compression,
        "achieved_force": episode.achieved_force,
        "finger_force": episode.finger_force,
        "object_force": episode.object_force,
        "steady_voltages": {
            str(channel): voltage
            for channel, voltage in sorted(episode.steady_voltages.items())
        },
        "traces": {
            str(channel): [[r.timestamp, r.voltage] for r in readings]
            for channel, readings in sorted(episode.traces.items())
        },
        "seed": episode.seed,
        "steady_from": episode.steady_from,
    }


def episode_from_record(record: Mapping[str, Any]) -> GraspEpisode:
    if record.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(record.get("schema_version"), SCHEMA_VERSION)
    try:
        traces = {
            int(channel): tuple(
                SensorReading(timestamp=t, channel_id=int(channel), voltage=v)
                for t, v in readings
            )
            for channel, readings in record.get("traces", {}).items()
        }
        return GraspEpisode(
            object=ObjectSpec(**record["object"]),
            outcome=record["outcome"],
            gap_at_contact=record["gap_at_contact"],
            gap_at_steady=record["gap_at_steady"],
            true_compressed_diameter=record["true_compressed_diameter"],
            midpoint_displacement=record["midpoint_displacement"],
            compression=record["compression"],
            achieved_force=record["achieved_force"],
            finger_force=record["finger_force"],
            object_force=record["object_force"],
            steady_voltages={
                int(channel): float(voltage)
                for channel, voltage in record["steady_voltages"].items()
            },
            traces=traces,
            seed=int(record.get("seed", 0)),
            steady_from=float(record.get("steady_from", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedDocumentError(f"invalid episode record: {e!r}")


def append_episode_log(episode: GraspEpisode, path: PathLike) -> None:
    """Append one self-contained JSON line"""
    line = json.dumps(episode_to_record(episode), allow_nan=False)
    with open(path, "a", encoding="utf-8") as f:
        f.write(line + "\n")


def read_episode_log(path: PathLike) -> List[GraspEpisode]:
    """
    Episodes in the order they were appended. A torn last line (a write that
    never completed) is dropped with a warning; damage anywhere else is fatal.
    """
    path = Path(path)
    if not path.exists():
        raise DocumentNotFoundError(f"Episode log not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f.read().split("\n") if line.strip()]

    episodes = []
    for number, line in enumerate(lines, start=1):
        try:
            record = _parse(line, f"{path}:{number}")
        except MalformedDocumentError:
            if number == len(lines):
                logger.warning(f"Ignoring incomplete last line {number} of {path}")
                break
            raise
        if not isinstance(record, dict):
            raise MalformedDocumentError(f"{path}:{number} is not a JSON object")
        episodes.append(episode_from_record(record))
    return episodes


# Object sets


def save_object_set(objects: Sequence[ObjectSpec], path: PathLike) -> None:
    _save_document(
        {
            "schema_version": SCHEMA_VERSION,
            "objects": [asdict(obj) for obj in objects],
        },
        path,
    )


def load_object_set(path: PathLike) -> List[ObjectSpec]:
    data = _load_document(path)
    _require_keys(data, ["objects"], "object set")
    try:
        objects = [ObjectSpec(**entry) for entry in data["objects"]]
    except (TypeError, DomainError) as e:
        raise MalformedDocumentError(f"invalid object set: {e}")
    for obj in objects:
        _finite_float(obj.true_diameter, f"object {obj.id} true_diameter")
        _finite_float(obj.stiffness, f"object {obj.id} stiffness")
    return objects

