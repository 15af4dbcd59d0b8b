#!/usr/bin/env python
# encoding: utf-8
"""
Grasp simulator for a parallel gripper carrying two soft fingers per jaw.

Objects are linear springs. While the jaws close past first contact the
overtravel is shared between finger bending and object compression, and the
two are in static equilibrium: the finger force at the midpoint displacement
equals the spring force of the compressed object. Closing stops once the
jaw force reaches the gripper setpoint, or at the minimum gap when the object
is too soft to ever push back that hard.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from fiber_tactile.calibration import CalibrationProfile, CalibrationSample
from fiber_tactile.config import (
    DEFAULT_COMPOSITION,
    IRREGULAR,
    PRISMATIC_RIGID,
    SLENDER,
    SPHERE,
    VERY_SOFT,
    CalibrationSettings,
    GripperSettings,
    SimulatorSettings,
)
from fiber_tactile.errors import DomainError
from fiber_tactile.estimation import (
    CONTACT_SHADOWING,
    DEFAULT_PAIR_MAP,
    DEFAULT_PAIR_TOLERANCE,
    PAIR_DISAGREEMENT,
    UNRECOGNIZABLE,
    ForceCurve,
    GraspEstimate,
    PairMap,
    SortingBoundary,
    classify,
    estimate_grasp,
)
from fiber_tactile.sensor_model import SensorChannelModel, SensorReading, sample_trace
from fiber_tactile.utils import derive_seed

logger = logging.getLogger("fiber_tactile")

SHAPE_PRISMATIC = "prismatic"
SHAPE_SPHERE = "sphere"
SHAPE_SLENDER = "slender"
SHAPE_IRREGULAR = "irregular"

OUTCOME_GRASPED = "grasped"
OUTCOME_SLIPPED = "slipped"
OUTCOME_FORCE_NOT_REACHED = "force-not-reached"

BISECTION_WIDTH = 1e-12
SETPOINT_TOLERANCE = 1e-9
MAX_BISECTIONS = 200
DIAMETER_TOLERANCE = 6.0
STRAIN_TOLERANCE = 0.1


@dataclass(frozen=True)
class ObjectSpec:
    id: int
    name: str
    true_diameter: float
    stiffness: float
    true_strain_at_force: float
    shape_class: str = SHAPE_PRISMATIC
    graspable: bool = True
    # Irregular objects: the second intermediate pair faces a section this
    # much narrower than the one the first pair contacts.
    section_step: float = 0.0

    def __post_init__(self) -> None:
        if not self.true_diameter > 0.0:
            raise DomainError(f"object {self.id}: true_diameter must be positive")
        if not self.stiffness > 0.0:
            raise DomainError(f"object {self.id}: stiffness must be positive")
        if self.shape_class not in (
            SHAPE_PRISMATIC,
            SHAPE_SPHERE,
            SHAPE_SLENDER,
            SHAPE_IRREGULAR,
        ):
            raise DomainError(f"object {self.id}: unknown shape {self.shape_class!r}")


@dataclass(frozen=True)
class GripperConfig:
    max_gap: float
    closing_speed: float
    force_setpoint: float
    force_curve: ForceCurve
    n_active_fingers: int = 2
    min_gap: float = 0.0

    def __post_init__(self) -> None:
        if not self.max_gap > 0.0:
            raise DomainError("max_gap must be positive")
        if not 0.0 <= self.min_gap < self.max_gap:
            raise DomainError("min_gap must lie in [0, max_gap)")
        if not self.closing_speed > 0.0:
            raise DomainError("closing_speed must be positive")
        reachable = self.force_curve.max_force * self.force_curve.finger_multiplicity
        if not 0.0 < self.force_setpoint <= reachable:
            raise DomainError(
                f"force_setpoint {self.force_setpoint} N outside the force curve "
                f"range (0, {reachable}] N"
            )

    @classmethod
    def from_settings(
        cls, settings: GripperSettings, curve: ForceCurve, n_active_fingers: int
    ) -> "GripperConfig":
        return cls(
            max_gap=settings.max_gap,
            closing_speed=settings.closing_speed,
            force_setpoint=settings.force_setpoint,
            force_curve=curve,
            n_active_fingers=n_active_fingers,
            min_gap=settings.min_gap,
        )


@dataclass(frozen=True)
class GraspEpisode:
    object: ObjectSpec
    outcome: str
    gap_at_contact: float
    gap_at_steady: float
    true_compressed_diameter: float
    midpoint_displacement: float
    compression: float
    achieved_force: float
    finger_force: float
    object_force: float
    steady_voltages: Mapping[int, float] = field(default_factory=dict)
    traces: Mapping[int, Tuple[SensorReading, ...]] = field(default_factory=dict)
    seed: int = 0
    # Hold phase start (ms); steady voltages average readings from here on
    steady_from: float = 0.0

    def __post_init__(self) -> None:
        if self.gap_at_steady > self.gap_at_contact:
            raise DomainError("gap_at_steady must not exceed gap_at_contact")
        if self.outcome != OUTCOME_SLIPPED and not self.traces:
            raise DomainError("a graspable object must leave sensor traces")

    @property
    def true_strain(self) -> float:
        diameter = self.object.true_diameter
        return (diameter - self.true_compressed_diameter) / diameter

    @property
    def equilibrium_residual(self) -> float:
        return abs(self.finger_force - self.object_force)


@dataclass(frozen=True)
class SortingRow:
    object_id: int
    name: str
    shape_class: str
    outcome: str
    true_diameter: float
    estimated_diameter: Optional[float]
    true_strain: float
    estimated_strain: Optional[float]
    classification: Optional[str]
    truth_class: str
    anomalies: Tuple[str, ...] = ()
    midpoint_displacement: Optional[float] = None
    estimated_force: Optional[float] = None


@dataclass(frozen=True)
class SortingMetrics:
    rigid_within_tolerance: Optional[float]
    mean_abs_diameter_error: Optional[float]
    strain_within_tolerance: Optional[float]
    mean_abs_strain_error: Optional[float]
    classification_success: Optional[float]
    unrecognizable_count: int
    slipped_count: int
    graspable_count: int
    diameter_scored_count: int
    strain_scored_count: int


@dataclass(frozen=True)
class SortingReport:
    rows: Tuple[SortingRow, ...]
    metrics: SortingMetrics
    seed: int = 0
    episodes: Tuple[GraspEpisode, ...] = field(default=(), compare=False, repr=False)


def _solve_equilibrium(
    curve: ForceCurve,
    stiffness: float,
    overtravel: float,
    n_active_fingers: int,
    d_limit: float,
) -> Tuple[float, float]:
    """
    Split the jaw overtravel into finger displacement and object compression
    so that curve force at d equals stiffness * compression.

    Returns (midpoint displacement, compression). Bisection on the
    displacement, which is safe because the residual rises monotonically.
    """
    if overtravel <= 0.0:
        return 0.0, 0.0

    upper = min(d_limit, overtravel / n_active_fingers)

    def residual(d: float) -> float:
        return curve.finger_force(d) - stiffness * (overtravel - n_active_fingers * d)

    if residual(upper) < 0.0:
        # Finger bottomed out before the object could balance it
        return upper, overtravel - n_active_fingers * upper

    low, high = 0.0, upper
    for _ in range(MAX_BISECTIONS):
        if high - low <= BISECTION_WIDTH:
            break
        mid = 0.5 * (low + high)
        if residual(mid) < 0.0:
            low = mid
        else:
            high = mid
    d = 0.5 * (low + high)
    return d, max(overtravel - n_active_fingers * d, 0.0)


def _stop_overtravel(
    gripper: GripperConfig, obj: ObjectSpec, d_limit: float
) -> Tuple[float, bool]:
    """Overtravel at which closing stops, and whether the setpoint was reached"""
    curve = gripper.force_curve
    n = gripper.n_active_fingers
    multiplicity = curve.finger_multiplicity
    max_overtravel = obj.true_diameter - gripper.min_gap

    def jaw_force(overtravel: float) -> float:
        d, _ = _solve_equilibrium(curve, obj.stiffness, overtravel, n, d_limit)
        return curve.finger_force(d) * multiplicity

    if jaw_force(max_overtravel) < gripper.force_setpoint:
        return max_overtravel, False

    low, high = 0.0, max_overtravel
    for _ in range(MAX_BISECTIONS):
        if high - low <= SETPOINT_TOLERANCE:
            break
        mid = 0.5 * (low + high)
        if jaw_force(mid) >= gripper.force_setpoint:
            high = mid
        else:
            low = mid
    return high, True


def _pair_factors(
    obj: ObjectSpec,
    pair_map: PairMap,
    settings: SimulatorSettings,
    n_active_fingers: int,
) -> Dict[str, Tuple[float, float]]:
    """
    Per pair (scale, offset) applied to the midpoint displacement:
    d_pair = max(scale * d_mid - offset, 0).
    """
    first, second = pair_map.intermediate
    factors = {name: (settings.outer_fraction, 0.0) for name in pair_map.pairs}
    factors[first] = (1.0, 0.0)
    factors[second] = (1.0, 0.0)
    if obj.shape_class == SHAPE_SPHERE:
        # Lateral bending: the ball rolls the second pair away
        factors[second] = (1.0 - settings.sphere_skew, 0.0)
    elif obj.shape_class == SHAPE_IRREGULAR:
        factors[second] = (1.0, obj.section_step / n_active_fingers)
    return factors


def _slipped_episode(
    gripper: GripperConfig, obj: ObjectSpec, seed: int
) -> GraspEpisode:
    return GraspEpisode(
        object=obj,
        outcome=OUTCOME_SLIPPED,
        gap_at_contact=gripper.min_gap,
        gap_at_steady=gripper.min_gap,
        true_compressed_diameter=obj.true_diameter,
        midpoint_displacement=0.0,
        compression=0.0,
        achieved_force=0.0,
        finger_force=0.0,
        object_force=0.0,
        seed=seed,
    )


def run_grasp(
    gripper: GripperConfig,
    obj: ObjectSpec,
    models: Sequence[SensorChannelModel],
    seed: int,
    settings: SimulatorSettings = SimulatorSettings(),
    pair_map: PairMap = DEFAULT_PAIR_MAP,
) -> GraspEpisode:
    """
    Close the gripper on ``obj`` and record every channel until steady state.

    Non-graspable (or too wide) objects slip and leave no contact; objects too
    soft to reach the force setpoint before the minimum gap end with the
    force-not-reached outcome but still carry traces.
    """
    if not models:
        raise DomainError("no sensor channels to record")
    if not obj.graspable or obj.true_diameter > gripper.max_gap:
        logger.debug(f"Object {obj.id} ({obj.name}) slipped through the gripper")
        return _slipped_episode(gripper, obj, seed)
    if obj.true_diameter <= gripper.min_gap:
        logger.debug(f"Object {obj.id} ({obj.name}) never touches the fingers")
        return _slipped_episode(gripper, obj, seed)

    curve = gripper.force_curve
    n = gripper.n_active_fingers
    d_limit = min(curve.max_displacement, min(m.d_max for m in models))

    stop, reached = _stop_overtravel(gripper, obj, d_limit)
    d_mid, compression = _solve_equilibrium(curve, obj.stiffness, stop, n, d_limit)
    finger_force = curve.finger_force(d_mid)
    object_force = obj.stiffness * compression

    gap_at_contact = obj.true_diameter
    # Rounding can land a hair below the gripper's stop
    gap_at_steady = max(obj.true_diameter - compression - n * d_mid, gripper.min_gap)

    # Closing path: approach without contact, close at constant speed solving
    # the equilibrium at every control step, then hold.
    rate = settings.rate_hz
    step_mm = gripper.closing_speed / rate
    steps = max(int(math.ceil(stop / step_mm)), 1)
    overtravels = np.linspace(0.0, stop, steps + 1)
    close_start = settings.approach_ms
    path: List[Tuple[float, float]] = [(0.0, 0.0)]
    for overtravel in overtravels:
        d, _ = _solve_equilibrium(curve, obj.stiffness, float(overtravel), n, d_limit)
        t = close_start + 1000.0 * float(overtravel) / gripper.closing_speed
        path.append((t, d))
    path[-1] = (path[-1][0], d_mid)
    hold_start = path[-1][0]
    path.append((hold_start + settings.hold_ms, d_mid))

    rng = np.random.default_rng(seed)
    drift = rng.normal(0.0, settings.ambient_drift_sigma) if settings.noise else 0.0

    factors = _pair_factors(obj, pair_map, settings, n)
    channel_factor: Dict[int, Tuple[float, float]] = {}
    for name, channels in pair_map.pairs.items():
        for channel in channels:
            channel_factor[channel] = factors[name]

    traces: Dict[int, Tuple[SensorReading, ...]] = {}
    steady: Dict[int, float] = {}
    for model in models:
        scale, offset = channel_factor.get(model.channel_id, (1.0, 0.0))
        channel_path = [
            (t, min(max(scale * d - offset, 0.0), model.d_max)) for t, d in path
        ]
        drifted = dataclasses.replace(
            model, ambient_offset=model.ambient_offset + drift
        )
        readings = sample_trace(
            drifted,
            channel_path,
            rate,
            noise=settings.noise,
            seed=derive_seed(seed, model.channel_id),
        )
        traces[model.channel_id] = tuple(readings)
        held = [r.voltage for r in readings if r.timestamp >= hold_start]
        steady[model.channel_id] = float(np.mean(held))

    outcome = OUTCOME_GRASPED if reached else OUTCOME_FORCE_NOT_REACHED
    logger.debug(
        f"Object {obj.id} ({obj.name}): {outcome}, d_mid={d_mid:.3f} mm, "
        f"c={compression:.3f} mm, gap {gap_at_contact:.2f} -> {gap_at_steady:.2f} mm"
    )
    return GraspEpisode(
        object=obj,
        outcome=outcome,
        gap_at_contact=gap_at_contact,
        gap_at_steady=gap_at_steady,
        true_compressed_diameter=obj.true_diameter - compression,
        midpoint_displacement=d_mid,
        compression=compression,
        achieved_force=finger_force * curve.finger_multiplicity,
        finger_force=finger_force,
        object_force=object_force,
        steady_voltages=steady,
        traces=traces,
        seed=seed,
        steady_from=hold_start,
    )


def _strain_at_force(diameter: float, stiffness: float, finger_force: float) -> float:
    return min(finger_force / (stiffness * diameter), 1.0)


def generate_object_set(
    seed: int,
    composition: Optional[Mapping[str, int]] = None,
    reference_force: float = 4.0,
    section_step: float = 40.0,
) -> List[ObjectSpec]:
    """
    Deterministic set of test objects.

    Args:
        seed: object-set seed
        composition: count per category (rigid-prismatic, soft, sphere,
            irregular, slender); defaults to the 42-object sorting set
        reference_force: per-finger force used to derive the recorded strain
        section_step: width difference between the two sections of an
            irregular object
    """
    counts = dict(DEFAULT_COMPOSITION if composition is None else composition)
    unknown = set(counts) - set(DEFAULT_COMPOSITION)
    if unknown:
        raise DomainError(f"unknown object categories: {sorted(unknown)}")
    if any(count < 0 for count in counts.values()):
        raise DomainError("object counts must be non-negative")

    rng = np.random.default_rng(seed)
    objects: List[ObjectSpec] = []

    def add(category: str, diameter: float, stiffness: float, **extra: object) -> None:
        objects.append(
            ObjectSpec(
                id=len(objects) + 1,
                name=f"{category}-{len(objects) + 1:02d}",
                true_diameter=round(diameter, 3),
                stiffness=stiffness,
                true_strain_at_force=_strain_at_force(
                    diameter, stiffness, reference_force
                ),
                **extra,  # type: ignore[arg-type]
            )
        )

    for _ in range(counts.get(PRISMATIC_RIGID, 0)):
        add(
            PRISMATIC_RIGID,
            rng.uniform(45.0, 110.0),
            float(np.exp(rng.uniform(np.log(20.0), np.log(200.0)))),
        )
    for _ in range(counts.get(VERY_SOFT, 0)):
        add(VERY_SOFT, rng.uniform(50.0, 100.0), rng.uniform(0.002, 0.010))
    for _ in range(counts.get(SPHERE, 0)):
        add(
            SPHERE,
            rng.uniform(65.0, 80.0),
            rng.uniform(0.25, 0.40),
            shape_class=SHAPE_SPHERE,
        )
    for _ in range(counts.get(IRREGULAR, 0)):
        add(
            IRREGULAR,
            rng.uniform(70.0, 90.0),
            float(np.exp(rng.uniform(np.log(20.0), np.log(200.0)))),
            shape_class=SHAPE_IRREGULAR,
            section_step=section_step,
        )
    for _ in range(counts.get(SLENDER, 0)):
        add(
            SLENDER,
            rng.uniform(3.0, 8.0),
            rng.uniform(50.0, 200.0),
            shape_class=SHAPE_SLENDER,
            graspable=False,
        )

    logger.debug(f"Generated {len(objects)} objects with seed {seed}")
    return objects


def simulate_plate_calibration(
    models: Sequence[SensorChannelModel],
    settings: CalibrationSettings,
    rate_hz: float = 100.0,
    hold_ms: float = 500.0,
    noise: bool = True,
    seed: int = 0,
    n_deforming_fingers: int = 2,
) -> List[CalibrationSample]:
    """Grasp each standard plate ``settings.repetitions`` times and average"""
    samples = []
    for plate_index, width in enumerate(settings.plate_widths):
        displacement = (width - settings.commanded_gap) / n_deforming_fingers
        sums: Dict[int, float] = {m.channel_id: 0.0 for m in models}
        for repetition in range(settings.repetitions):
            for model in models:
                readings = sample_trace(
                    model,
                    [(0.0, displacement), (hold_ms, displacement)],
                    rate_hz,
                    noise=noise,
                    seed=derive_seed(seed, plate_index, repetition, model.channel_id),
                )
                sums[model.channel_id] += float(np.mean([r.voltage for r in readings]))

        samples.append(
            CalibrationSample(
                plate_width=width,
                commanded_gap=settings.commanded_gap,
                channel_voltages={
                    channel: total / settings.repetitions
                    for channel, total in sums.items()
                },
                repetitions=settings.repetitions,
                n_deforming_fingers=n_deforming_fingers,
            )
        )
        logger.debug(f"Plate {width} mm -> implied displacement {displacement} mm")
    return samples


def simulate_characterization_sweep(
    model: SensorChannelModel,
    step_mm: float = 0.1,
    speed_mm_s: float = 1.0,
    noise: bool = True,
    seed: Optional[int] = None,
) -> List[Tuple[float, SensorReading]]:
    """Ramp one channel from 0 to d_max, one reading per ``step_mm``"""
    if not step_mm > 0:
        raise DomainError("sweep step must be positive")
    duration_ms = 1000.0 * model.d_max / speed_mm_s
    rate = speed_mm_s / step_mm
    readings = sample_trace(
        model, [(0.0, 0.0), (duration_ms, model.d_max)], rate, noise=noise, seed=seed
    )
    return [
        (min(r.timestamp * speed_mm_s / 1000.0, model.d_max), r) for r in readings
    ]


def compute_metrics(
    rows: Sequence[SortingRow],
    diameter_tolerance: float = DIAMETER_TOLERANCE,
    strain_tolerance: float = STRAIN_TOLERANCE,
) -> SortingMetrics:
    """Aggregate metrics, recomputable from the rows alone"""
    diameter_rows = [
        r
        for r in rows
        if r.outcome == OUTCOME_GRASPED
        and r.shape_class == SHAPE_PRISMATIC
        and r.truth_class == "rigid"
        and r.estimated_diameter is not None
    ]
    diameter_errors = [
        abs(r.estimated_diameter - r.true_diameter)  # type: ignore[operator]
        for r in diameter_rows
    ]
    strain_errors = [
        abs(r.estimated_strain - r.true_strain)
        for r in rows
        if r.estimated_strain is not None
    ]
    graspable = [r for r in rows if r.outcome != OUTCOME_SLIPPED]
    correct = [r for r in graspable if r.classification == r.truth_class]

    def fraction(hits: int, total: int) -> Optional[float]:
        return hits / total if total else None

    def mean(values: List[float]) -> Optional[float]:
        return float(np.mean(values)) if values else None

    return SortingMetrics(
        rigid_within_tolerance=fraction(
            sum(e <= diameter_tolerance for e in diameter_errors), len(diameter_errors)
        ),
        mean_abs_diameter_error=mean(diameter_errors),
        strain_within_tolerance=fraction(
            sum(e <= strain_tolerance for e in strain_errors), len(strain_errors)
        ),
        mean_abs_strain_error=mean(strain_errors),
        classification_success=fraction(len(correct), len(graspable)),
        unrecognizable_count=sum(r.classification == UNRECOGNIZABLE for r in rows),
        slipped_count=sum(r.outcome == OUTCOME_SLIPPED for r in rows),
        graspable_count=len(graspable),
        diameter_scored_count=len(diameter_errors),
        strain_scored_count=len(strain_errors),
    )


def score_episode(
    episode: GraspEpisode,
    estimate: Optional[GraspEstimate],
    boundary: SortingBoundary,
) -> SortingRow:
    obj = episode.object
    truth_class = classify(episode.true_strain, boundary)
    if estimate is None:
        return SortingRow(
            object_id=obj.id,
            name=obj.name,
            shape_class=obj.shape_class,
            outcome=episode.outcome,
            true_diameter=episode.true_compressed_diameter,
            estimated_diameter=None,
            true_strain=episode.true_strain,
            estimated_strain=None,
            classification=None,
            truth_class=truth_class,
        )
    return SortingRow(
        object_id=obj.id,
        name=obj.name,
        shape_class=obj.shape_class,
        outcome=episode.outcome,
        true_diameter=episode.true_compressed_diameter,
        estimated_diameter=estimate.estimated_diameter,
        true_strain=episode.true_strain,
        estimated_strain=estimate.estimated_strain,
        classification=estimate.classification,
        truth_class=truth_class,
        anomalies=tuple(sorted(estimate.anomalies)),
        midpoint_displacement=estimate.midpoint_displacement,
        estimated_force=estimate.estimated_force,
    )


def estimate_episode(
    episode: GraspEpisode,
    profile: CalibrationProfile,
    gripper: GripperConfig,
    boundary: SortingBoundary,
    pair_map: PairMap = DEFAULT_PAIR_MAP,
    pair_tolerance: float = DEFAULT_PAIR_TOLERANCE,
) -> Optional[GraspEstimate]:
    """Estimate from the recorded steady voltages; None for slipped objects"""
    if episode.outcome == OUTCOME_SLIPPED:
        return None
    return estimate_grasp(
        profile,
        episode.steady_voltages,
        gap_at_contact=episode.gap_at_contact,
        gap_at_steady=episode.gap_at_steady,
        curve=gripper.force_curve,
        boundary=boundary,
        pair_map=pair_map,
        pair_tolerance=pair_tolerance,
        n_active_fingers=gripper.n_active_fingers,
    )


def run_sorting_experiment(
    objects: Sequence[ObjectSpec],
    gripper: GripperConfig,
    profile: CalibrationProfile,
    boundary: SortingBoundary,
    seed: int,
    models: Sequence[SensorChannelModel],
    settings: SimulatorSettings = SimulatorSettings(),
    pair_map: PairMap = DEFAULT_PAIR_MAP,
    pair_tolerance: float = DEFAULT_PAIR_TOLERANCE,
) -> SortingReport:
    """
    Grasp, estimate, classify and score every object.

    Each episode is seeded from (seed, object id), so the report does not
    depend on object order or on how many workers run the episodes.
    """
    if not objects:
        raise DomainError("object list is empty")
    if not models:
        raise DomainError("no sensor channels to record")

    def run_one(obj: ObjectSpec) -> Tuple[GraspEpisode, SortingRow]:
        episode = run_grasp(
            gripper, obj, models, derive_seed(seed, obj.id), settings, pair_map
        )
        estimate = estimate_episode(
            episode, profile, gripper, boundary, pair_map, pair_tolerance
        )
        return episode, score_episode(episode, estimate, boundary)

    workers = max(settings.workers, 1)
    if workers == 1:
        results = [run_one(obj) for obj in objects]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, objects))

    results.sort(key=lambda result: result[0].object.id)
    episodes = tuple(episode for episode, _ in results)
    rows = tuple(row for _, row in results)
    metrics = compute_metrics(rows)

    flagged = {
        name: sum(name in row.anomalies for row in rows)
        for name in (PAIR_DISAGREEMENT, CONTACT_SHADOWING)
    }
    logger.info(
        f"Sorted {len(rows)} objects: {metrics.graspable_count} graspable, "
        f"{metrics.unrecognizable_count} unrecognizable, anomalies {flagged}"
    )
    return SortingReport(rows=rows, metrics=metrics, seed=seed, episodes=episodes)
