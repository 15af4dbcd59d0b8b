import dataclasses

import numpy as np
import pytest

from fiber_tactile.errors import DomainError
from fiber_tactile.sensor_model import (
    STAGE_LINEAR,
    STAGE_STACKED,
    STAGE_UNSTABLE,
    SensorChannelModel,
    SensorReading,
    build_channel_models,
    displacement_resolution,
    sample_trace,
    stage_of,
    voltage_at,
    with_fabrication_variation,
)

STEP = 5.0 / 1023


def test_rest_voltage_at_zero_displacement(default_model):
    assert voltage_at(default_model, 0.0) == pytest.approx(4.5, abs=STEP / 2)


def test_linear_stage_value_is_quantized(default_model):
    # 4.5 - 0.12 * 10 = 3.3 V lands on ADC count 675
    assert voltage_at(default_model, 15.0) == pytest.approx(675 * STEP, abs=1e-12)


def test_stacked_stage_holds_the_d_hi_value(default_model):
    assert voltage_at(default_model, 30.0) == voltage_at(default_model, 33.0)
    assert voltage_at(default_model, 35.0) == voltage_at(default_model, 30.0)


def test_ambient_offset_shifts_every_stage():
    model = SensorChannelModel(ambient_offset=-0.5)
    plain = SensorChannelModel()
    for d in (0.0, 15.0, 33.0):
        assert voltage_at(model, d) == pytest.approx(
            voltage_at(plain, d) - 0.5, abs=STEP
        )


@pytest.mark.parametrize("displacement", [-0.1, 35.01, float("nan")])
def test_displacement_outside_range_is_rejected(default_model, displacement):
    with pytest.raises(DomainError):
        voltage_at(default_model, displacement)


def test_voltage_is_clamped_to_the_supply_range():
    model = SensorChannelModel(v_rest=4.9, ambient_offset=1.0)
    assert voltage_at(model, 0.0) == pytest.approx(5.0)
    low = SensorChannelModel(v_rest=0.5, slope=-0.2)
    assert voltage_at(low, 30.0) == 0.0


@pytest.mark.parametrize(
    "overrides",
    [
        {"v_rest": 5.5},
        {"slope": 0.0},
        {"d_lo": 30.0, "d_hi": 5.0},
        {"d_hi": 40.0},
        {"noise_sigma_unstable": 0.01, "noise_sigma_linear": 0.02},
        {"adc_bits": 0},
    ],
)
def test_model_invariants(overrides):
    with pytest.raises(DomainError):
        SensorChannelModel(**overrides)


def test_reading_must_lie_in_supply_range():
    with pytest.raises(DomainError):
        SensorReading(timestamp=0.0, channel_id=0, voltage=5.2)


def test_stage_of(default_model):
    assert stage_of(default_model, 0.0) == STAGE_UNSTABLE
    assert stage_of(default_model, 4.99) == STAGE_UNSTABLE
    assert stage_of(default_model, 5.0) == STAGE_LINEAR
    assert stage_of(default_model, 30.0) == STAGE_LINEAR
    assert stage_of(default_model, 30.5) == STAGE_STACKED


def test_resolution_is_below_two_tenths_of_a_mm(default_model):
    assert displacement_resolution(default_model) < 0.2


def test_unstable_noise_only_adds_light():
    model = SensorChannelModel(noise_sigma_unstable=0.3)
    rng = np.random.default_rng(3)
    quiet = voltage_at(model, 2.0)
    readings = [voltage_at(model, 2.0, noise=True, rng=rng) for _ in range(200)]
    assert min(readings) >= quiet
    assert np.mean(readings) > quiet + 0.1


def test_constant_path_without_noise():
    model = SensorChannelModel()
    readings = sample_trace(model, [(0.0, 0.0), (20.0, 0.0)], rate=100.0, noise=False)
    assert [r.timestamp for r in readings] == [0.0, 10.0, 20.0]
    assert {r.voltage for r in readings} == {voltage_at(model, 0.0)}


def test_ramp_is_non_increasing_without_noise(default_model):
    readings = sample_trace(
        default_model, [(0.0, 0.0), (3500.0, 35.0)], rate=100.0, noise=False
    )
    voltages = [r.voltage for r in readings]
    assert len(voltages) == 351
    assert all(b <= a for a, b in zip(voltages, voltages[1:]))


def test_same_seed_gives_identical_traces(default_model):
    path = [(0.0, 0.0), (1000.0, 35.0)]
    first = sample_trace(default_model, path, rate=100.0, seed=7)
    second = sample_trace(default_model, path, rate=100.0, seed=7)
    other = sample_trace(default_model, path, rate=100.0, seed=8)
    assert first == second
    assert first != other


def test_trace_rejects_bad_paths(default_model):
    with pytest.raises(DomainError):
        sample_trace(default_model, [], rate=100.0)
    with pytest.raises(DomainError):
        sample_trace(default_model, [(0.0, 0.0), (10.0, 1.0)], rate=0.0)
    with pytest.raises(DomainError):
        sample_trace(default_model, [(10.0, 0.0), (10.0, 1.0)], rate=100.0)


def test_fabrication_variation_bounds():
    base = SensorChannelModel()
    for seed in range(20):
        varied = with_fabrication_variation(base, seed, 0.1, 0.2)
        assert 0.9 * 0.12 - 1e-12 <= -varied.slope <= 1.1 * 0.12 + 1e-12
        assert abs(varied.v_rest - base.v_rest) <= 0.2 + 1e-12
        assert varied == with_fabrication_variation(base, seed, 0.1, 0.2)


def test_zero_spread_keeps_the_model():
    base = SensorChannelModel()
    varied = with_fabrication_variation(base, 5, 0.0, 0.0)
    assert varied.slope == base.slope
    assert varied.v_rest == base.v_rest


def test_negative_spread_is_rejected():
    with pytest.raises(DomainError):
        with_fabrication_variation(SensorChannelModel(), 0, -0.1, 0.0)


def test_build_channel_models():
    base = dataclasses.replace(
        SensorChannelModel(), noise_sigma_linear=0.12, noise_sigma_unstable=0.30
    )
    models = build_channel_models(
        base, range(8), seed=11, gain_spread=0.1, offset_spread=0.2
    )
    assert [m.channel_id for m in models] == list(range(8))
    assert len({m.rng_seed for m in models}) == 8
    assert models == build_channel_models(base, range(8), 11, 0.1, 0.2)
    assert all(m.noise_sigma_linear == 0.12 for m in models)


def test_distinct_seeds_give_distinct_models():
    base = SensorChannelModel()
    varied = [with_fabrication_variation(base, seed, 0.1, 0.2) for seed in range(100)]
    assert len({(m.slope, m.v_rest) for m in varied}) == 100
    assert all(m.slope < 0.0 and 0.0 <= m.v_rest <= 5.0 for m in varied)
