import json

import pytest

from fiber_tactile.config import SimulatorSettings
from fiber_tactile.errors import (
    DocumentNotFoundError,
    DomainError,
    MalformedDocumentError,
    SchemaVersionError,
)
from fiber_tactile.estimation import ForceCurve, SortingBoundary
from fiber_tactile.grasp_sim import (
    GripperConfig,
    ObjectSpec,
    SortingReport,
    SortingRow,
    compute_metrics,
    estimate_episode,
    generate_object_set,
    run_grasp,
)
from fiber_tactile.persistence import (
    TABULAR,
    append_episode_log,
    load_object_set,
    load_profile,
    load_report,
    read_episode_log,
    save_object_set,
    save_profile,
    save_report,
    write_report,
)
from fiber_tactile.sensor_model import SensorChannelModel

CURVE = ForceCurve(((0.0, 0.0), (5.0, 1.0), (30.0, 6.0)), finger_multiplicity=2)
GRIPPER = GripperConfig(150.0, 50.0, 8.0, CURVE)
MODELS = [SensorChannelModel(channel_id=ch) for ch in range(8)]


def synthetic_report(count):
    rows = []
    for i in range(1, count + 1):
        slipped = i % 7 == 0
        rows.append(
            SortingRow(
                object_id=i,
                name=f"object-{i:02d}",
                shape_class="slender" if slipped else "prismatic",
                outcome="slipped" if slipped else "grasped",
                true_diameter=40.0 + i,
                estimated_diameter=None if slipped else 40.5 + i,
                true_strain=0.001 * i,
                estimated_strain=None if slipped else 0.001 * i + 0.01,
                classification=None if slipped else "rigid",
                truth_class="rigid",
                anomalies=("pair-disagreement",) if i == 3 else (),
                midpoint_displacement=None if slipped else 20.0,
                estimated_force=None if slipped else 4.0,
            )
        )
    return SortingReport(rows=tuple(rows), metrics=compute_metrics(rows), seed=7)


def grasp(seed=1):
    obj = ObjectSpec(1, "box", 60.0, 100.0, 0.0)
    return run_grasp(GRIPPER, obj, MODELS, seed, SimulatorSettings())


def test_profile_round_trip(temp_dir, ideal_profile):
    """A saved profile loads back unchanged"""
    path = temp_dir / "profile.json"
    save_profile(ideal_profile, path)

    with open(path, "r") as f:
        data = json.load(f)
    assert data["schema_version"] == 1
    assert len(data["channels"]) == 8

    assert load_profile(path) == ideal_profile


def test_missing_profile(temp_dir):
    with pytest.raises(DocumentNotFoundError):
        load_profile(temp_dir / "nothing.json")


def test_truncated_profile(temp_dir, ideal_profile):
    path = temp_dir / "profile.json"
    save_profile(ideal_profile, path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])

    with pytest.raises(MalformedDocumentError):
        load_profile(path)


def test_newer_schema_is_refused(temp_dir, ideal_profile):
    path = temp_dir / "profile.json"
    save_profile(ideal_profile, path)
    data = json.loads(path.read_text())
    data["schema_version"] = 2
    path.write_text(json.dumps(data))

    with pytest.raises(SchemaVersionError) as excinfo:
        load_profile(path)
    assert excinfo.value.found == 2


def test_non_finite_values_are_refused(temp_dir, ideal_profile):
    path = temp_dir / "profile.json"
    save_profile(ideal_profile, path)
    path.write_text(path.read_text().replace("-0.12", "NaN", 1))

    with pytest.raises(MalformedDocumentError):
        load_profile(path)


def test_profile_with_missing_fields(temp_dir):
    path = temp_dir / "profile.json"
    path.write_text(json.dumps({"schema_version": 1, "channels": []}))
    with pytest.raises(MalformedDocumentError):
        load_profile(path)


def test_empty_report_has_only_a_header(temp_dir):
    report = SortingReport(rows=(), metrics=compute_metrics([]))
    path = write_report(report, temp_dir / "report.csv", TABULAR)

    lines = path.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("object_id,name,shape_class,outcome")


def test_tabular_report(temp_dir):
    path = write_report(synthetic_report(42), temp_dir / "report.csv", TABULAR)
    lines = path.read_text().splitlines()
    assert len(lines) == 43

    # Missing estimates are blank cells, floats have six decimals
    slipped = lines[7].split(",")
    assert slipped[0] == "7"
    assert slipped[5] == ""
    assert lines[1].split(",")[4] == "41.000000"
    assert "pair-disagreement" in lines[3]


def test_unknown_report_format(temp_dir):
    with pytest.raises(DomainError):
        write_report(synthetic_report(1), temp_dir / "report.txt", "xml")


def test_structured_report_round_trip(temp_dir):
    report = synthetic_report(42)
    path = save_report(report, temp_dir / "report.json")

    loaded = load_report(path)
    assert loaded.rows == report.rows
    assert loaded.metrics == report.metrics
    assert loaded.seed == 7


def test_tampered_report_aggregates(temp_dir):
    path = save_report(synthetic_report(10), temp_dir / "report.json")
    data = json.loads(path.read_text())
    data["metrics"]["classification_success"] = 0.5
    path.write_text(json.dumps(data))

    with pytest.raises(MalformedDocumentError):
        load_report(path)


def test_episode_log_round_trip(temp_dir):
    """Episodes appended to the log come back in order and unchanged"""
    path = temp_dir / "episodes.jsonl"
    first, second = grasp(1), grasp(2)
    append_episode_log(first, path)
    append_episode_log(second, path)

    assert read_episode_log(path) == [first, second]


def test_torn_last_line_is_dropped(temp_dir):
    path = temp_dir / "episodes.jsonl"
    episode = grasp()
    append_episode_log(episode, path)
    append_episode_log(episode, path)
    text = path.read_text()
    path.write_text(text[:-40])

    assert read_episode_log(path) == [episode]


def test_damage_before_the_last_line_is_fatal(temp_dir):
    path = temp_dir / "episodes.jsonl"
    episode = grasp()
    append_episode_log(episode, path)
    append_episode_log(episode, path)
    lines = path.read_text().splitlines()
    path.write_text(lines[0][:100] + "\n" + lines[1] + "\n")

    with pytest.raises(MalformedDocumentError):
        read_episode_log(path)


def test_logged_episode_estimates_identically(temp_dir, ideal_profile):
    path = temp_dir / "episodes.jsonl"
    episode = grasp()
    append_episode_log(episode, path)
    (logged,) = read_episode_log(path)

    boundary = SortingBoundary(0.1)
    assert estimate_episode(logged, ideal_profile, GRIPPER, boundary) == (
        estimate_episode(episode, ideal_profile, GRIPPER, boundary)
    )


def test_missing_episode_log(temp_dir):
    with pytest.raises(DocumentNotFoundError):
        read_episode_log(temp_dir / "episodes.jsonl")


def test_object_set_round_trip(temp_dir):
    objects = generate_object_set(seed=5)
    path = temp_dir / "objects.json"
    save_object_set(objects, path)

    assert load_object_set(path) == objects


def test_invalid_object_set(temp_dir):
    path = temp_dir / "objects.json"
    entry = {"id": 1, "name": "x", "true_diameter": -3.0, "stiffness": 1.0}
    entry["true_strain_at_force"] = 0.0
    path.write_text(json.dumps({"schema_version": 1, "objects": [entry]}))

    with pytest.raises(MalformedDocumentError):
        load_object_set(path)
