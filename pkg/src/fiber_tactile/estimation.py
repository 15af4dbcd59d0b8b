#!/usr/bin/env python
# encoding: utf-8
"""
Object-level quantities from calibrated finger displacements: sectional
diameter, strain under the grasp force, contact force, soft/rigid class and
the anomaly flags that explain unreliable estimates.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Set, Tuple

import numpy as np

from fiber_tactile.calibration import (
    ABOVE_RANGE,
    BELOW_RANGE,
    IN_RANGE,
    CalibrationProfile,
    DisplacementReading,
    voltage_to_displacement,
)
from fiber_tactile.errors import DomainError, ExtrapolationError, MissingChannelError
from fiber_tactile.utils import require_finite

logger = logging.getLogger("fiber_tactile")

SOFT = "soft"
RIGID = "rigid"
UNRECOGNIZABLE = "unrecognizable"

BELOW_VALID_RANGE = "below-valid-range"
ABOVE_VALID_RANGE = "above-valid-range"
PAIR_DISAGREEMENT = "pair-disagreement"
CONTACT_SHADOWING = "contact-shadowing"

DEFAULT_PAIR_TOLERANCE = 4.0
DEFAULT_STRAIN_THRESHOLD = 0.10
DEFAULT_ACTIVE_FINGERS = 2


@dataclass(frozen=True)
class ForceCurve:
    """Finger contact force (N) against midpoint displacement (mm)"""

    samples: Tuple[Tuple[float, float], ...]
    finger_multiplicity: int = 1

    def __post_init__(self) -> None:
        if len(self.samples) < 2:
            raise DomainError("force curve needs at least 2 samples")
        displacements = np.asarray([s[0] for s in self.samples], dtype=float)
        forces = np.asarray([s[1] for s in self.samples], dtype=float)
        if not (np.all(np.isfinite(displacements)) and np.all(np.isfinite(forces))):
            raise DomainError("force curve samples must be finite")
        if np.any(np.diff(displacements) <= 0):
            raise DomainError("force curve displacements must be strictly increasing")
        if np.any(np.diff(forces) < 0):
            raise DomainError("force curve forces must be non-decreasing")
        if self.finger_multiplicity < 1:
            raise DomainError("finger_multiplicity must be at least 1")

    @property
    def min_displacement(self) -> float:
        return float(self.samples[0][0])

    @property
    def max_displacement(self) -> float:
        return float(self.samples[-1][0])

    @property
    def max_force(self) -> float:
        return float(self.samples[-1][1])

    def finger_force(self, displacement: float) -> float:
        """Force of a single finger, without the multiplicity factor"""
        if not self.min_displacement <= displacement <= self.max_displacement:
            raise ExtrapolationError(
                f"displacement {displacement} mm outside force curve "
                f"[{self.min_displacement}, {self.max_displacement}] mm"
            )
        return float(
            np.interp(
                displacement,
                [s[0] for s in self.samples],
                [s[1] for s in self.samples],
            )
        )


DEFAULT_FORCE_CURVE = ForceCurve(samples=((0.0, 0.0), (5.0, 1.0), (30.0, 6.0)))


@dataclass(frozen=True)
class SortingBoundary:
    strain_threshold: float = DEFAULT_STRAIN_THRESHOLD

    def __post_init__(self) -> None:
        if not 0.0 < self.strain_threshold < 1.0:
            raise DomainError(
                f"strain_threshold must lie in (0, 1), got {self.strain_threshold}"
            )


@dataclass(frozen=True)
class PairMap:
    """Which channels form each sensing pair, and which pairs are intermediate"""

    pairs: Mapping[str, Tuple[int, ...]]
    intermediate: Tuple[str, ...] = ("inner-a", "inner-b")

    def __post_init__(self) -> None:
        if len(self.intermediate) != 2:
            raise DomainError("exactly two intermediate pairs are required")
        for name in self.intermediate:
            if name not in self.pairs or not self.pairs[name]:
                raise DomainError(f"intermediate pair {name!r} has no channels")

    def pair_of(self, name: str) -> Tuple[int, ...]:
        return tuple(self.pairs[name])


DEFAULT_PAIR_MAP = PairMap(
    pairs={
        "outer-a": (0, 1),
        "inner-a": (2, 3),
        "inner-b": (4, 5),
        "outer-b": (6, 7),
    }
)


@dataclass(frozen=True)
class PairAggregate:
    pair_readings: Mapping[str, DisplacementReading]
    midpoint_displacement: float
    anomalies: FrozenSet[str]

    @property
    def pair_displacements(self) -> Dict[str, float]:
        return {name: r.displacement for name, r in self.pair_readings.items()}


@dataclass(frozen=True)
class GraspEstimate:
    pair_displacements: Mapping[str, float]
    midpoint_displacement: float
    # None only for a closed gripper whose fingers never reached the valid interval
    estimated_diameter: Optional[float]
    estimated_strain: Optional[float]
    estimated_force: float
    classification: str
    anomalies: FrozenSet[str] = field(default_factory=frozenset)
    pair_diameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.estimated_diameter is None:
            if self.estimated_strain is not None:
                raise DomainError("a measurable strain needs an estimated diameter")
        elif not self.estimated_diameter > 0.0:
            raise DomainError(
                f"estimated diameter must be positive, got {self.estimated_diameter}"
            )
        if self.estimated_strain is not None and not (
            0.0 <= self.estimated_strain < 1.0
        ):
            raise DomainError(f"strain {self.estimated_strain} outside [0, 1)")
        if (self.classification == UNRECOGNIZABLE) != (self.estimated_strain is None):
            raise DomainError(
                "classification is unrecognizable iff strain is unmeasurable"
            )


def _status_of(displacement: float, valid_interval: Tuple[float, float]) -> str:
    low, high = valid_interval
    if displacement < low:
        return BELOW_RANGE
    if displacement > high:
        return ABOVE_RANGE
    return IN_RANGE


def aggregate_pairs(
    profile: CalibrationProfile,
    steady_voltages: Mapping[int, float],
    pair_map: PairMap = DEFAULT_PAIR_MAP,
    tolerance: float = DEFAULT_PAIR_TOLERANCE,
) -> PairAggregate:
    """
    Convert the intermediate-pair channels to displacement, average within
    each pair, then across the two pairs.

    Flags below/above-valid-range for any channel outside the calibrated
    interval and pair-disagreement when the two pairs differ by more than
    ``tolerance`` mm (lateral bending of the finger).
    """
    anomalies: Set[str] = set()
    readings: Dict[str, DisplacementReading] = {}

    for name in pair_map.intermediate:
        displacements = []
        for channel in pair_map.pair_of(name):
            if channel not in steady_voltages:
                raise MissingChannelError(channel)
            reading = voltage_to_displacement(
                profile, channel, steady_voltages[channel]
            )
            if reading.status == BELOW_RANGE:
                anomalies.add(BELOW_VALID_RANGE)
            elif reading.status == ABOVE_RANGE:
                anomalies.add(ABOVE_VALID_RANGE)
            displacements.append(reading.displacement)

        pair_displacement = float(np.mean(displacements))
        readings[name] = DisplacementReading(
            pair_displacement, _status_of(pair_displacement, profile.valid_interval)
        )

    values = [readings[name].displacement for name in pair_map.intermediate]
    if max(values) - min(values) > tolerance:
        anomalies.add(PAIR_DISAGREEMENT)

    midpoint = float(np.mean(values))
    logger.debug(f"Pair displacements {values} -> midpoint {midpoint:.3f} mm")
    return PairAggregate(
        pair_readings=readings,
        midpoint_displacement=midpoint,
        anomalies=frozenset(anomalies),
    )


def estimate_diameter(
    midpoint_displacement: float,
    gap_at_steady_state: float,
    n_active_fingers: int = DEFAULT_ACTIVE_FINGERS,
) -> float:
    """Compressed sectional diameter: gripper gap plus every finger's deflection"""
    require_finite("diameter input", midpoint_displacement, gap_at_steady_state)
    if midpoint_displacement < 0.0 or gap_at_steady_state < 0.0:
        raise DomainError("displacement and gap must be non-negative")
    if n_active_fingers < 1:
        raise DomainError("n_active_fingers must be at least 1")
    return gap_at_steady_state + n_active_fingers * midpoint_displacement


def estimate_strain(
    gap_at_contact: float,
    estimated_diameter: float,
    measurable: bool = True,
) -> Optional[float]:
    """
    Strain under the grasp force relative to the width at first contact.

    Returns None (unmeasurable) when the caller found the displacement below
    the valid interval.
    """
    if not gap_at_contact > 0.0:
        raise DomainError(f"gap_at_contact must be positive, got {gap_at_contact}")
    if not measurable:
        return None
    strain = (gap_at_contact - estimated_diameter) / gap_at_contact
    return max(strain, 0.0)


def estimate_force(curve: ForceCurve, midpoint_displacement: float) -> float:
    """Contact force at the midpoint displacement, scaled by finger multiplicity"""
    return curve.finger_force(midpoint_displacement) * curve.finger_multiplicity


def classify(strain: Optional[float], boundary: SortingBoundary) -> str:
    if strain is None:
        return UNRECOGNIZABLE
    if strain >= boundary.strain_threshold:
        return SOFT
    return RIGID


def detect_contact_shadowing(pair_readings: Mapping[str, DisplacementReading]) -> bool:
    """
    True when one pair reached the valid interval while another stayed below
    it, i.e. a wide section of the object kept the other pair off a narrower
    one. A single pair is never enough evidence.
    """
    if len(pair_readings) < 2:
        return False
    statuses = [reading.status for reading in pair_readings.values()]
    contacted = any(status != BELOW_RANGE for status in statuses)
    shadowed = any(status == BELOW_RANGE for status in statuses)
    return contacted and shadowed


def estimate_grasp(
    profile: CalibrationProfile,
    steady_voltages: Mapping[int, float],
    gap_at_contact: float,
    gap_at_steady: float,
    curve: ForceCurve = DEFAULT_FORCE_CURVE,
    boundary: SortingBoundary = SortingBoundary(),
    pair_map: PairMap = DEFAULT_PAIR_MAP,
    pair_tolerance: float = DEFAULT_PAIR_TOLERANCE,
    n_active_fingers: int = DEFAULT_ACTIVE_FINGERS,
) -> GraspEstimate:
    """Run the whole estimation chain for one steady grasp"""
    aggregate = aggregate_pairs(profile, steady_voltages, pair_map, pair_tolerance)
    anomalies = set(aggregate.anomalies)
    if detect_contact_shadowing(aggregate.pair_readings):
        anomalies.add(CONTACT_SHADOWING)

    # Inverted readings may dip below zero; the finger cannot.
    midpoint = max(aggregate.midpoint_displacement, 0.0)
    width = estimate_diameter(midpoint, gap_at_steady, n_active_fingers)

    measurable = aggregate.midpoint_displacement >= profile.valid_interval[0]
    strain = estimate_strain(gap_at_contact, width, measurable)
    diameter: Optional[float] = width
    if width <= 0.0:
        # Fully closed on a reading below the valid interval
        logger.debug("Grasp reading gives no width; diameter left unestimated")
        diameter = None

    on_curve = min(max(midpoint, curve.min_displacement), curve.max_displacement)
    force = estimate_force(curve, on_curve)

    pair_diameters = {
        name: estimate_diameter(max(d, 0.0), gap_at_steady, n_active_fingers)
        for name, d in aggregate.pair_displacements.items()
    }

    return GraspEstimate(
        pair_displacements=aggregate.pair_displacements,
        midpoint_displacement=aggregate.midpoint_displacement,
        estimated_diameter=diameter,
        estimated_strain=strain,
        estimated_force=force,
        classification=classify(strain, boundary),
        anomalies=frozenset(anomalies),
        pair_diameters=pair_diameters,
    )


def sorted_anomalies(anomalies: Iterable[str]) -> str:
    """Stable text form for reports"""
    return ";".join(sorted(anomalies))
