#!/usr/bin/env python
# encoding: utf-8
"""
Behavioural forward model of one fiber-cavity channel.

Bending the finger beam deforms the cavity wall between the transmitting and
receiving fibers, attenuating the light that reaches the photoresistor. The
readout is a 0-5 V signal that behaves in three stages along the midpoint
displacement:

* unstable (``0 <= d < d_lo``): diffuse reflection off the cavity wall hides
  the small bending, readings scatter above the rest voltage with no trend;
* linear (``d_lo <= d <= d_hi``): voltage falls linearly with displacement;
* stacked (``d_hi < d <= d_max``): inner layers stack, the reading holds the
  value reached at ``d_hi`` plus unstable noise.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from fiber_tactile.errors import DomainError
from fiber_tactile.utils import child_seeds, require_finite

logger = logging.getLogger("fiber_tactile")

FULL_SCALE_V = 5.0

STAGE_UNSTABLE = "unstable"
STAGE_LINEAR = "linear"
STAGE_STACKED = "stacked"


@dataclass(frozen=True)
class SensorChannelModel:
    """Parameters of one channel. Voltages in V, displacements in mm."""

    channel_id: int = 0
    v_rest: float = 4.5
    d_lo: float = 5.0
    d_hi: float = 30.0
    d_max: float = 35.0
    slope: float = -0.12
    noise_sigma_linear: float = 0.01
    noise_sigma_unstable: float = 0.08
    ambient_offset: float = 0.0
    adc_bits: int = 10
    rng_seed: int = 0

    def __post_init__(self) -> None:
        require_finite(
            "sensor model parameter",
            self.v_rest,
            self.d_lo,
            self.d_hi,
            self.d_max,
            self.slope,
            self.noise_sigma_linear,
            self.noise_sigma_unstable,
            self.ambient_offset,
        )
        if not 0.0 <= self.v_rest <= FULL_SCALE_V:
            raise DomainError(f"v_rest must lie in [0, 5] V, got {self.v_rest}")
        if not 0.0 < self.d_lo < self.d_hi <= self.d_max:
            raise DomainError(
                f"Expected 0 < d_lo < d_hi <= d_max, got "
                f"{self.d_lo}, {self.d_hi}, {self.d_max}"
            )
        if self.slope >= 0.0:
            raise DomainError(f"slope must be negative, got {self.slope}")
        if not self.noise_sigma_unstable > self.noise_sigma_linear >= 0.0:
            raise DomainError(
                "Expected noise_sigma_unstable > noise_sigma_linear >= 0, got "
                f"{self.noise_sigma_unstable}, {self.noise_sigma_linear}"
            )
        if not 1 <= self.adc_bits <= 16:
            raise DomainError(f"adc_bits must lie in [1, 16], got {self.adc_bits}")

    @property
    def adc_step(self) -> float:
        """Voltage represented by one ADC count"""
        return FULL_SCALE_V / (2**self.adc_bits - 1)


@dataclass(frozen=True)
class SensorReading:
    timestamp: float
    channel_id: int
    voltage: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.voltage <= FULL_SCALE_V:
            raise DomainError(f"voltage must lie in [0, 5] V, got {self.voltage}")


def stage_of(model: SensorChannelModel, displacement: float) -> str:
    """Name the behavioural stage a displacement falls into"""
    _check_domain(model, np.asarray([displacement], dtype=float))
    if displacement < model.d_lo:
        return STAGE_UNSTABLE
    if displacement <= model.d_hi:
        return STAGE_LINEAR
    return STAGE_STACKED


def displacement_resolution(model: SensorChannelModel) -> float:
    """Smallest displacement change (mm) that moves the reading by one ADC step"""
    return model.adc_step / abs(model.slope)


def quantize(model: SensorChannelModel, voltages: np.ndarray) -> np.ndarray:
    clamped = np.clip(voltages, 0.0, FULL_SCALE_V)
    counts = np.rint(clamped / model.adc_step)
    return np.asarray(counts * model.adc_step, dtype=float)


def _check_domain(model: SensorChannelModel, displacements: np.ndarray) -> None:
    if not np.all(np.isfinite(displacements)):
        raise DomainError("displacement must be finite")
    if np.any(displacements < 0.0) or np.any(displacements > model.d_max):
        bad = displacements[(displacements < 0.0) | (displacements > model.d_max)]
        raise DomainError(
            f"displacement {float(bad[0])} mm outside [0, {model.d_max}] mm"
        )


def evaluate(
    model: SensorChannelModel,
    displacements: np.ndarray,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Vectorised forward model. Noise is added only when ``rng`` is given; one
    standard normal is drawn per displacement so traces stay reproducible.
    """
    d = np.asarray(displacements, dtype=float)
    _check_domain(model, d)

    # Holding d inside [d_lo, d_hi] gives v_rest in stage 1 and the d_hi value
    # in stage 3.
    held = np.clip(d, model.d_lo, model.d_hi)
    voltages = model.v_rest + model.ambient_offset + model.slope * (held - model.d_lo)

    if rng is not None:
        gauss = rng.standard_normal(d.shape)
        below = d < model.d_lo
        above = d > model.d_hi
        noise = model.noise_sigma_linear * gauss
        # Diffuse reflection off the cavity wall only ever adds light.
        noise = np.where(below, model.noise_sigma_unstable * np.abs(gauss), noise)
        noise = np.where(above, model.noise_sigma_unstable * gauss, noise)
        voltages = voltages + noise

    return quantize(model, voltages)


def voltage_at(
    model: SensorChannelModel,
    displacement: float,
    noise: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Voltage for a single midpoint displacement"""
    if noise and rng is None:
        rng = np.random.default_rng(model.rng_seed)
    point = np.asarray([displacement], dtype=float)
    return float(evaluate(model, point, rng if noise else None)[0])


def sample_trace(
    model: SensorChannelModel,
    displacement_path: Sequence[Tuple[float, float]],
    rate: float,
    noise: bool = True,
    seed: Optional[int] = None,
) -> List[SensorReading]:
    """
    Sample the channel along a (timestamp ms, displacement mm) path at a fixed
    rate, interpolating displacement linearly between path points.

    Args:
        model: channel to sample
        displacement_path: waypoints with strictly increasing timestamps
        rate: sampling rate in Hz
        noise: add sensor noise
        seed: overrides ``model.rng_seed`` for this trace
    """
    if not displacement_path:
        raise DomainError("displacement path is empty")
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate}")

    times = np.asarray([point[0] for point in displacement_path], dtype=float)
    positions = np.asarray([point[1] for point in displacement_path], dtype=float)
    if np.any(np.diff(times) <= 0):
        raise DomainError("path timestamps must be strictly increasing")

    period_ms = 1000.0 / rate
    count = int(np.floor((times[-1] - times[0]) / period_ms + 1e-9)) + 1
    stamps = times[0] + np.arange(count) * period_ms
    displacements = np.interp(stamps, times, positions)

    rng = None
    if noise:
        rng = np.random.default_rng(model.rng_seed if seed is None else seed)
    voltages = evaluate(model, displacements, rng)

    return [
        SensorReading(timestamp=float(t), channel_id=model.channel_id, voltage=float(v))
        for t, v in zip(stamps, voltages)
    ]


def with_fabrication_variation(
    model: SensorChannelModel,
    seed: int,
    gain_spread: float,
    offset_spread: float,
) -> SensorChannelModel:
    """
    Copy of ``model`` with the slope scaled by a factor drawn uniformly from
    [1 - gain_spread, 1 + gain_spread] and the rest voltage shifted uniformly
    within +/- offset_spread.
    """
    if gain_spread < 0 or offset_spread < 0:
        raise DomainError("fabrication spreads must be non-negative")

    rng = np.random.default_rng(seed)
    gain = rng.uniform(1.0 - gain_spread, 1.0 + gain_spread)
    offset = rng.uniform(-offset_spread, offset_spread)

    # Re-clamp so the copy still satisfies the model invariants
    slope = model.slope * max(gain, 1e-3)
    v_rest = min(max(model.v_rest + offset, 0.0), FULL_SCALE_V)
    return dataclasses.replace(model, slope=slope, v_rest=v_rest)


def build_channel_models(
    base: SensorChannelModel,
    channel_ids: Iterable[int],
    seed: int,
    gain_spread: float,
    offset_spread: float,
) -> List[SensorChannelModel]:
    """One fabrication-varied model per channel, each with its own noise seed"""
    ids = list(channel_ids)
    models = []
    for channel_id, channel_seed in zip(ids, child_seeds(seed, ids)):
        template = dataclasses.replace(
            base, channel_id=channel_id, rng_seed=channel_seed
        )
        varied = with_fabrication_variation(
            template, channel_seed, gain_spread, offset_spread
        )
        logger.debug(
            f"Channel {channel_id}: slope={varied.slope:.4f} V/mm, "
            f"v_rest={varied.v_rest:.3f} V"
        )
        models.append(varied)
    return models
