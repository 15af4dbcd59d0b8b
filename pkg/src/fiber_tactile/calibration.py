#!/usr/bin/env python
# encoding: utf-8
"""
Plate calibration: grasp plates of known width, record the channel voltages
and fit a straight line of voltage against implied midpoint displacement.
"""

import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from fiber_tactile.errors import (
    CalibrationFailedError,
    DegenerateAbscissaError,
    DegenerateChannelError,
    DomainError,
    IncomparableProfilesError,
    InsufficientDataError,
    InsufficientSpanError,
    MissingChannelError,
)
from fiber_tactile.utils import require_finite

logger = logging.getLogger("fiber_tactile")

IN_RANGE = "in-range"
BELOW_RANGE = "below-range"
ABOVE_RANGE = "above-range"

DEFAULT_R2_THRESHOLD = 0.95
DEFAULT_VALID_INTERVAL = (5.0, 30.0)
MIN_DISTINCT_DISPLACEMENTS = 3
MIN_SPAN_MM = 10.0


@dataclass(frozen=True)
class CalibrationSample:
    """Mean channel voltages recorded while holding one plate"""

    plate_width: float
    commanded_gap: float
    channel_voltages: Mapping[int, float]
    repetitions: int = 1
    n_deforming_fingers: int = 2

    def __post_init__(self) -> None:
        require_finite("plate geometry", self.plate_width, self.commanded_gap)
        if not self.plate_width > self.commanded_gap >= 0.0:
            raise DomainError(
                f"Expected plate_width > commanded_gap >= 0, got "
                f"{self.plate_width}, {self.commanded_gap}"
            )
        if self.repetitions < 1:
            raise DomainError("repetitions must be at least 1")
        if self.n_deforming_fingers not in (1, 2):
            raise DomainError("n_deforming_fingers must be 1 or 2")

    @property
    def implied_displacement(self) -> float:
        return (self.plate_width - self.commanded_gap) / self.n_deforming_fingers


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class ChannelFit:
    channel_id: int
    slope: float
    intercept: float
    r_squared: float

    def __post_init__(self) -> None:
        require_finite("channel fit", self.slope, self.intercept, self.r_squared)
        if not 0.0 <= self.r_squared <= 1.0:
            raise DomainError(f"r_squared must lie in [0, 1], got {self.r_squared}")


@dataclass(frozen=True)
class CalibrationProfile:
    fits: Mapping[int, ChannelFit]
    valid_interval: Tuple[float, float] = DEFAULT_VALID_INTERVAL
    n_deforming_fingers: int = 2
    created_at: str = field(default_factory=lambda: datetime.now().isoformat())
    r2_threshold_used: float = DEFAULT_R2_THRESHOLD

    def __post_init__(self) -> None:
        low, high = self.valid_interval
        if not low < high:
            raise DomainError(f"valid interval {self.valid_interval} is empty")
        for channel_id, fit in self.fits.items():
            if fit.channel_id != channel_id:
                raise DomainError(
                    f"fit for channel {fit.channel_id} keyed as {channel_id}"
                )
            if fit.r_squared < self.r2_threshold_used:
                raise DomainError(
                    f"channel {channel_id} r2 {fit.r_squared} is below the "
                    f"threshold {self.r2_threshold_used}"
                )

    @property
    def channel_ids(self) -> List[int]:
        return sorted(self.fits)

    def fit_for(self, channel_id: int) -> ChannelFit:
        try:
            return self.fits[channel_id]
        except KeyError:
            raise MissingChannelError(channel_id) from None


@dataclass(frozen=True)
class DisplacementReading:
    displacement: float
    status: str


@dataclass(frozen=True)
class ChannelDrift:
    slope_ratio: float
    intercept_delta: float


def fit_linear(points: Sequence[Tuple[float, float]]) -> LinearFit:
    """
    Ordinary least-squares line through ``points``.

    r_squared is 1 - SS_res / SS_tot, and 1 when the data are constant and
    fitted exactly.
    """
    if len(points) < 2:
        raise InsufficientDataError(f"need at least 2 points, got {len(points)}")

    data = np.asarray(points, dtype=float)
    x, y = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(data)):
        raise DomainError("fit points must be finite")

    x_mean, y_mean = x.mean(), y.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    if sxx == 0.0:
        raise DegenerateAbscissaError("all x values are identical")

    slope = float(np.sum((x - x_mean) * (y - y_mean)) / sxx)
    intercept = float(y_mean - slope * x_mean)

    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y_mean) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res == 0.0 else 0.0
    else:
        r_squared = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)

    return LinearFit(slope=slope, intercept=intercept, r_squared=r_squared)


def _channels_of(samples: Sequence[CalibrationSample]) -> List[int]:
    channels = set()
    for sample in samples:
        channels.update(sample.channel_voltages)
    return sorted(channels)


def normalize_channels(
    samples: Sequence[CalibrationSample],
) -> List[CalibrationSample]:
    """
    Rescale each channel so its reading at the smallest displacement maps to
    1.0 and its reading at the largest displacement maps to 0.0.
    """
    normalized: Dict[int, Dict[int, float]] = {i: {} for i in range(len(samples))}

    for channel in _channels_of(samples):
        rows = [
            (i, s.implied_displacement, s.channel_voltages[channel])
            for i, s in enumerate(samples)
            if channel in s.channel_voltages
        ]
        if len(rows) < 2:
            raise InsufficientDataError(f"channel {channel} has fewer than 2 samples")

        d_min = min(r[1] for r in rows)
        d_max = max(r[1] for r in rows)
        v_top = float(np.mean([r[2] for r in rows if r[1] == d_min]))
        v_bottom = float(np.mean([r[2] for r in rows if r[1] == d_max]))
        if v_top == v_bottom:
            raise DegenerateChannelError(f"channel {channel} reads a constant voltage")

        for i, _, voltage in rows:
            normalized[i][channel] = (voltage - v_bottom) / (v_top - v_bottom)

    return [
        replace(sample, channel_voltages=normalized[i])
        for i, sample in enumerate(samples)
    ]


def _sort_key(sample: CalibrationSample) -> Tuple:
    return (
        sample.implied_displacement,
        sample.plate_width,
        sample.commanded_gap,
        tuple(sorted(sample.channel_voltages.items())),
    )


def calibrate(
    samples: Sequence[CalibrationSample],
    r2_threshold: float = DEFAULT_R2_THRESHOLD,
    valid_interval: Tuple[float, float] = DEFAULT_VALID_INTERVAL,
    created_at: Optional[str] = None,
) -> CalibrationProfile:
    """
    Fit every channel on (implied displacement, voltage) and keep the channels
    whose fit is linear enough and falls with displacement.

    Only samples whose implied displacement lies inside ``valid_interval``
    contribute. Sample order never changes the result.

    Raises:
        InsufficientSpanError: fewer than 3 distinct displacements or a span
            under 10 mm inside the valid interval
        CalibrationFailedError: no channel was accepted
    """
    low, high = valid_interval
    usable = sorted(
        (s for s in samples if low <= s.implied_displacement <= high), key=_sort_key
    )

    displacements = sorted({s.implied_displacement for s in usable})
    if len(displacements) < MIN_DISTINCT_DISPLACEMENTS:
        raise InsufficientSpanError(
            f"need {MIN_DISTINCT_DISPLACEMENTS} distinct displacements inside "
            f"{valid_interval}, got {len(displacements)}"
        )
    if displacements[-1] - displacements[0] < MIN_SPAN_MM:
        raise InsufficientSpanError(
            f"displacements span {displacements[-1] - displacements[0]:.2f} mm, "
            f"need {MIN_SPAN_MM} mm"
        )

    fingers = {s.n_deforming_fingers for s in usable}
    if len(fingers) != 1:
        raise DomainError("samples disagree on n_deforming_fingers")

    fits: Dict[int, ChannelFit] = {}
    r_squared: Dict[int, float] = {}
    for channel in _channels_of(usable):
        points = [
            (s.implied_displacement, s.channel_voltages[channel])
            for s in usable
            if channel in s.channel_voltages
        ]
        try:
            line = fit_linear(points)
        except DomainError as e:
            logger.warning(f"Channel {channel} cannot be fitted: {e}")
            r_squared[channel] = 0.0
            continue

        r_squared[channel] = line.r_squared
        if line.r_squared < r2_threshold or line.slope >= 0.0:
            logger.warning(
                f"Rejecting channel {channel}: slope={line.slope:.4f} V/mm, "
                f"r2={line.r_squared:.4f}"
            )
            continue

        fits[channel] = ChannelFit(channel, line.slope, line.intercept, line.r_squared)
        logger.debug(
            f"Channel {channel}: slope={line.slope:.5f} V/mm, "
            f"intercept={line.intercept:.4f} V, r2={line.r_squared:.5f}"
        )

    if not fits:
        raise CalibrationFailedError(r_squared, r2_threshold)

    return CalibrationProfile(
        fits=fits,
        valid_interval=(float(low), float(high)),
        n_deforming_fingers=fingers.pop(),
        created_at=created_at or datetime.now().isoformat(),
        r2_threshold_used=r2_threshold,
    )


def voltage_to_displacement(
    profile: CalibrationProfile, channel_id: int, voltage: float
) -> DisplacementReading:
    """Invert a channel's calibrated line. Out-of-interval values are still returned."""
    fit = profile.fit_for(channel_id)
    displacement = (voltage - fit.intercept) / fit.slope

    low, high = profile.valid_interval
    if displacement < low:
        status = BELOW_RANGE
    elif displacement > high:
        status = ABOVE_RANGE
    else:
        status = IN_RANGE
    return DisplacementReading(displacement=displacement, status=status)


def profile_drift(
    a: CalibrationProfile, b: CalibrationProfile
) -> Dict[int, ChannelDrift]:
    """Relative slope change and absolute intercept change from ``a`` to ``b``"""
    if set(a.fits) != set(b.fits):
        raise IncomparableProfilesError(
            f"channel sets differ: {a.channel_ids} vs {b.channel_ids}"
        )
    return {
        channel: ChannelDrift(
            slope_ratio=b.fits[channel].slope / a.fits[channel].slope,
            intercept_delta=b.fits[channel].intercept - a.fits[channel].intercept,
        )
        for channel in a.channel_ids
    }
