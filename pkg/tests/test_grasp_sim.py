import dataclasses

import numpy as np
import pytest

from fiber_tactile.config import PipelineConfig, SimulatorSettings
from fiber_tactile.errors import DomainError
from fiber_tactile.estimation import (
    CONTACT_SHADOWING,
    PAIR_DISAGREEMENT,
    UNRECOGNIZABLE,
    ForceCurve,
)
from fiber_tactile.grasp_sim import (
    OUTCOME_FORCE_NOT_REACHED,
    OUTCOME_GRASPED,
    OUTCOME_SLIPPED,
    SHAPE_IRREGULAR,
    SHAPE_PRISMATIC,
    SHAPE_SLENDER,
    SHAPE_SPHERE,
    GripperConfig,
    ObjectSpec,
    SortingRow,
    compute_metrics,
    generate_object_set,
    run_grasp,
    run_sorting_experiment,
    simulate_characterization_sweep,
    simulate_plate_calibration,
)
from fiber_tactile.sensor_model import SensorChannelModel
from fiber_tactile.tactile_handler import TactileHandler

CURVE = ForceCurve(((0.0, 0.0), (5.0, 1.0), (30.0, 6.0)), finger_multiplicity=2)
GRIPPER = GripperConfig(
    max_gap=150.0, closing_speed=50.0, force_setpoint=8.0, force_curve=CURVE
)
QUIET = SimulatorSettings(noise=False)
MODELS = [SensorChannelModel(channel_id=ch) for ch in range(8)]


def rigid(diameter=60.0, stiffness=100.0, **extra):
    return ObjectSpec(1, "box", diameter, stiffness, 0.0, **extra)


@pytest.fixture(scope="module")
def experiment():
    """The default 42-object experiment, calibrated on the same gripper"""
    handler = TactileHandler(PipelineConfig(), seed=0)
    profile = handler.calibrate()
    config = handler.config
    report = run_sorting_experiment(
        handler.objects(),
        handler.gripper(),
        profile,
        config.boundary(),
        seed=0,
        models=handler.models,
        settings=config.simulator,
        pair_map=config.pair_map(),
    )
    return handler, profile, report


def test_rigid_grasp_reaches_the_setpoint():
    episode = run_grasp(GRIPPER, rigid(), MODELS, seed=1, settings=QUIET)
    assert episode.outcome == OUTCOME_GRASPED
    assert episode.gap_at_contact == 60.0
    assert episode.achieved_force == pytest.approx(8.0, abs=1e-6)
    # Four newtons per finger is reached at 20 mm on the curve
    assert episode.midpoint_displacement == pytest.approx(20.0, abs=1e-6)
    assert episode.compression == pytest.approx(0.04, abs=1e-6)
    assert episode.equilibrium_residual < 1e-6
    assert episode.gap_at_steady == pytest.approx(
        60.0 - episode.compression - 2 * episode.midpoint_displacement, abs=1e-9
    )
    assert sorted(episode.traces) == list(range(8))


def test_steady_voltages_follow_the_pair_geometry():
    episode = run_grasp(GRIPPER, rigid(), MODELS, seed=1, settings=QUIET)
    inner = episode.steady_voltages[2]
    outer = episode.steady_voltages[0]
    # inner pairs at 20 mm, outer pairs at 0.6 * 20 = 12 mm
    assert inner == pytest.approx(4.5 - 0.12 * 15, abs=0.005)
    assert outer == pytest.approx(4.5 - 0.12 * 7, abs=0.005)


def test_sphere_bends_the_second_pair_less():
    ball = rigid(diameter=70.0, stiffness=0.3, shape_class=SHAPE_SPHERE)
    episode = run_grasp(GRIPPER, ball, MODELS, seed=2, settings=QUIET)
    assert episode.outcome == OUTCOME_GRASPED
    # 14 mm instead of 20 mm on the inner-b pair
    assert episode.steady_voltages[4] == pytest.approx(4.5 - 0.12 * 9, abs=0.005)
    assert episode.steady_voltages[2] == pytest.approx(4.5 - 0.12 * 15, abs=0.005)


def test_irregular_object_keeps_the_second_pair_off():
    odd = rigid(diameter=80.0, shape_class=SHAPE_IRREGULAR, section_step=40.0)
    episode = run_grasp(GRIPPER, odd, MODELS, seed=3, settings=QUIET)
    assert episode.steady_voltages[4] == episode.steady_voltages[5]
    assert episode.steady_voltages[4] == pytest.approx(4.5, abs=0.005)


def test_very_soft_object_never_reaches_the_setpoint():
    soft = rigid(diameter=80.0, stiffness=0.005)
    episode = run_grasp(GRIPPER, soft, MODELS, seed=4, settings=QUIET)
    assert episode.outcome == OUTCOME_FORCE_NOT_REACHED
    assert episode.gap_at_steady == pytest.approx(0.0, abs=1e-9)
    assert episode.midpoint_displacement < 5.0
    assert episode.achieved_force < 8.0
    assert episode.equilibrium_residual < 1e-6
    assert episode.true_strain > 0.9


@pytest.mark.parametrize(
    "obj",
    [
        ObjectSpec(1, "pencil", 5.0, 100.0, 0.0, SHAPE_SLENDER, graspable=False),
        rigid(diameter=160.0),
    ],
)
def test_objects_that_slip(obj):
    episode = run_grasp(GRIPPER, obj, MODELS, seed=5, settings=QUIET)
    assert episode.outcome == OUTCOME_SLIPPED
    assert episode.traces == {}
    assert episode.achieved_force == 0.0


def test_same_seed_same_episode():
    settings = SimulatorSettings()
    first = run_grasp(GRIPPER, rigid(), MODELS, seed=9, settings=settings)
    second = run_grasp(GRIPPER, rigid(), MODELS, seed=9, settings=settings)
    assert first == second


def test_gripper_invariants():
    with pytest.raises(DomainError):
        dataclasses.replace(GRIPPER, force_setpoint=13.0)
    with pytest.raises(DomainError):
        dataclasses.replace(GRIPPER, min_gap=150.0)
    with pytest.raises(DomainError):
        dataclasses.replace(GRIPPER, closing_speed=0.0)


def test_object_invariants():
    with pytest.raises(DomainError):
        ObjectSpec(1, "bad", 0.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        ObjectSpec(1, "bad", 10.0, -1.0, 0.0)
    with pytest.raises(DomainError):
        ObjectSpec(1, "bad", 10.0, 1.0, 0.0, shape_class="cube")


def test_default_object_set_composition():
    objects = generate_object_set(seed=3)
    assert len(objects) == 42
    assert [obj.id for obj in objects] == list(range(1, 43))
    shapes = [obj.shape_class for obj in objects]
    assert shapes.count(SHAPE_PRISMATIC) == 35
    assert shapes.count(SHAPE_SPHERE) == 2
    assert shapes.count(SHAPE_IRREGULAR) == 1
    assert shapes.count(SHAPE_SLENDER) == 4
    assert sum(not obj.graspable for obj in objects) == 4
    assert objects == generate_object_set(seed=3)
    assert objects != generate_object_set(seed=4)


def test_object_set_rejects_unknown_categories():
    with pytest.raises(DomainError):
        generate_object_set(0, {"cube": 3})


def test_plate_calibration_without_noise():
    settings = PipelineConfig().calibration
    samples = simulate_plate_calibration(MODELS[:2], settings, noise=False)
    assert [s.implied_displacement for s in samples] == [6, 11, 16, 21, 26, 29]
    assert samples[2].channel_voltages[0] == pytest.approx(4.5 - 0.12 * 11, abs=0.005)


def test_characterization_sweep_covers_the_range():
    sweep = simulate_characterization_sweep(MODELS[0], step_mm=0.1, noise=False)
    displacements = [d for d, _ in sweep]
    assert len(sweep) == 351
    assert displacements[0] == 0.0
    assert displacements[-1] == pytest.approx(35.0)
    assert all(b > a for a, b in zip(displacements, displacements[1:]))


def test_empty_experiment_is_rejected(ideal_profile):
    config = PipelineConfig()
    with pytest.raises(DomainError):
        run_sorting_experiment(
            [], GRIPPER, ideal_profile, config.boundary(), seed=0, models=MODELS
        )


def test_metrics_of_no_rows():
    metrics = compute_metrics([])
    assert metrics.classification_success is None
    assert metrics.mean_abs_diameter_error is None
    assert metrics.slipped_count == 0


def scored_row(object_id, outcome, estimate, strain, classification, truth, shape):
    return SortingRow(
        object_id=object_id,
        name=f"object-{object_id}",
        shape_class=shape,
        outcome=outcome,
        true_diameter=50.0,
        estimated_diameter=estimate,
        true_strain=0.0,
        estimated_strain=strain,
        classification=classification,
        truth_class=truth,
    )


def test_metrics_definitions():
    rows = [
        scored_row(1, "grasped", 53.0, 0.05, "rigid", "rigid", SHAPE_PRISMATIC),
        scored_row(2, "grasped", 58.0, 0.15, "soft", "rigid", SHAPE_PRISMATIC),
        scored_row(
            3, "force-not-reached", 6.0, None, UNRECOGNIZABLE, "soft", SHAPE_PRISMATIC
        ),
        scored_row(4, "slipped", None, None, None, "rigid", SHAPE_SLENDER),
    ]
    metrics = compute_metrics(rows)
    assert metrics.rigid_within_tolerance == 0.5
    assert metrics.mean_abs_diameter_error == pytest.approx(5.5)
    assert metrics.strain_within_tolerance == 0.5
    assert metrics.mean_abs_strain_error == pytest.approx(0.1)
    assert metrics.classification_success == pytest.approx(1 / 3)
    assert metrics.unrecognizable_count == 1
    assert metrics.slipped_count == 1
    assert metrics.graspable_count == 3


def test_experiment_reproduces_the_sorting_statistics(experiment):
    _, _, report = experiment
    metrics = report.metrics
    assert len(report.rows) == 42
    assert metrics.rigid_within_tolerance >= 0.94
    assert metrics.mean_abs_diameter_error <= 4.0
    assert metrics.strain_within_tolerance >= 0.80
    assert metrics.mean_abs_strain_error <= 0.08
    assert metrics.classification_success >= 0.70
    assert metrics.slipped_count == 4


def test_failure_mode_taxonomy(experiment):
    _, _, report = experiment
    rows = {row.object_id: row for row in report.rows}
    episodes = {episode.object.id: episode for episode in report.episodes}

    spheres = [r for r in rows.values() if r.shape_class == SHAPE_SPHERE]
    assert len(spheres) == 2
    assert all(PAIR_DISAGREEMENT in r.anomalies for r in spheres)

    shadowed = [r.object_id for r in rows.values() if CONTACT_SHADOWING in r.anomalies]
    irregular = [r.object_id for r in rows.values() if r.shape_class == SHAPE_IRREGULAR]
    assert shadowed == irregular

    shallow = {
        object_id
        for object_id, episode in episodes.items()
        if episode.outcome != OUTCOME_SLIPPED and episode.midpoint_displacement < 5.0
    }
    unrecognizable = {
        r.object_id for r in rows.values() if r.classification == UNRECOGNIZABLE
    }
    assert len(shallow) == 9
    assert unrecognizable == shallow


def test_every_episode_is_in_equilibrium(experiment):
    _, _, report = experiment
    for episode in report.episodes:
        assert episode.equilibrium_residual < 1e-6
        closure = (
            episode.object.true_diameter
            - episode.compression
            - 2 * episode.midpoint_displacement
        )
        if episode.outcome != OUTCOME_SLIPPED:
            assert abs(episode.gap_at_steady - closure) <= 1e-9


def test_worker_count_does_not_change_results(experiment):
    handler, profile, report = experiment
    config = handler.config
    parallel = run_sorting_experiment(
        list(reversed(handler.objects())),
        handler.gripper(),
        profile,
        config.boundary(),
        seed=0,
        models=handler.models,
        settings=dataclasses.replace(config.simulator, workers=4),
        pair_map=config.pair_map(),
    )
    assert parallel.rows == report.rows
    assert parallel.metrics == report.metrics


def test_true_strain_matches_the_recorded_strain(experiment):
    _, _, report = experiment
    for episode in report.episodes:
        if episode.outcome == OUTCOME_GRASPED:
            assert episode.true_strain == pytest.approx(
                episode.object.true_strain_at_force, abs=1e-4
            )
    assert np.isfinite([row.true_strain for row in report.rows]).all()


def test_stiffer_objects_never_deflect_the_finger_less():
    stiffness = [0.002, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 30.0, 1000.0]
    deflection = [
        run_grasp(
            GRIPPER, rigid(diameter=80.0, stiffness=k), MODELS, seed=6, settings=QUIET
        ).midpoint_displacement
        for k in stiffness
    ]
    assert all(b >= a - 1e-6 for a, b in zip(deflection, deflection[1:]))
    assert deflection[0] < deflection[-1]


def test_grasp_needs_sensor_channels(ideal_profile):
    with pytest.raises(DomainError):
        run_grasp(GRIPPER, rigid(), [], seed=0, settings=QUIET)
    with pytest.raises(DomainError):
        run_sorting_experiment(
            [rigid()], GRIPPER, ideal_profile, PipelineConfig().boundary(), 0, []
        )
