#!/usr/bin/env python
# encoding: utf-8

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from fiber_tactile import persistence
from fiber_tactile.calibration import (
    CalibrationProfile,
    ChannelDrift,
    LinearFit,
    calibrate,
    fit_linear,
    profile_drift,
)
from fiber_tactile.config import PipelineConfig
from fiber_tactile.errors import DomainError, StreamError
from fiber_tactile.estimation import (
    CONTACT_SHADOWING,
    GraspEstimate,
    PairAggregate,
    aggregate_pairs,
    detect_contact_shadowing,
    estimate_force,
    estimate_grasp,
    sorted_anomalies,
)
from fiber_tactile.grasp_sim import (
    OUTCOME_SLIPPED,
    GraspEpisode,
    GripperConfig,
    ObjectSpec,
    SortingReport,
    generate_object_set,
    run_sorting_experiment,
    simulate_characterization_sweep,
    simulate_plate_calibration,
)
from fiber_tactile.sensor_model import (
    STAGE_LINEAR,
    SensorChannelModel,
    build_channel_models,
    stage_of,
)
from fiber_tactile.telemetry import (
    FrameParser,
    TelemetryFrame,
    encode_frame,
    episode_to_frames,
    filter_and_differentiate,
    find_steady_window,
    iter_file_frames,
    split_grasps,
)
from fiber_tactile.utils import derive_seed

logger = logging.getLogger("fiber_tactile")

PathLike = Union[str, Path]

REPORT_FORMATS = {
    "structured": [persistence.STRUCTURED],
    "tabular": [persistence.TABULAR],
    "both": [persistence.STRUCTURED, persistence.TABULAR],
}


@dataclass(frozen=True)
class ReplayResult:
    """
    What a replayed grasp yields. Without the recorded gripper gaps only the
    displacement-level aggregate is available.
    """

    index: int
    frames: int
    steady_from: float
    steady_voltages: Dict[int, float]
    aggregate: PairAggregate
    estimate: Optional[GraspEstimate] = None


def _fmt(value: Optional[float], spec: str = ".3f") -> str:
    return "n/a" if value is None else format(value, spec)


class TactileHandler:
    def __init__(self, config: Optional[PipelineConfig] = None, seed: int = 0):
        self.config = config or PipelineConfig()
        self.seed = seed
        self._models: Optional[List[SensorChannelModel]] = None

    @property
    def models(self) -> List[SensorChannelModel]:
        """Fabrication-varied channel models; fixed for a given (config, seed)"""
        if self._models is None:
            fabrication = self.config.fabrication
            self._models = build_channel_models(
                self.config.sensor.model(),
                self.config.channel_ids,
                self.seed,
                fabrication.gain_spread,
                fabrication.offset_spread,
            )
        return self._models

    def gripper(self) -> GripperConfig:
        return GripperConfig.from_settings(
            self.config.gripper,
            self.config.force_curve(),
            self.config.geometry.n_active_fingers,
        )

    def calibrate(self, out_profile: Optional[PathLike] = None) -> CalibrationProfile:
        """
        Grasp the standard plates with the simulated gripper, fit every
        channel and optionally save the profile.
        """
        settings = self.config.calibration
        samples = simulate_plate_calibration(
            self.models,
            settings,
            rate_hz=self.config.simulator.rate_hz,
            hold_ms=self.config.simulator.hold_ms,
            noise=self.config.simulator.noise,
            seed=derive_seed(self.seed, 1),
            n_deforming_fingers=self.config.geometry.n_deforming_fingers,
        )
        profile = calibrate(
            samples,
            r2_threshold=settings.r2_threshold,
            valid_interval=self.config.geometry.valid_interval,
            created_at=settings.timestamp,
        )

        print(f"{'channel':>7}  {'slope V/mm':>11}  {'intercept V':>11}  {'r2':>7}")
        for channel in profile.channel_ids:
            fit = profile.fit_for(channel)
            print(
                f"{channel:>7}  {fit.slope:>11.5f}  {fit.intercept:>11.4f}  "
                f"{fit.r_squared:>7.4f}"
            )
        rejected = sorted(set(self.config.channel_ids) - set(profile.channel_ids))
        if rejected:
            print(f"Rejected channels: {rejected}")

        if out_profile is not None:
            persistence.save_profile(profile, out_profile)
            logger.info(f"Calibration profile saved to {out_profile}")
        return profile

    def objects(
        self, count: Optional[int] = None, object_set: Optional[PathLike] = None
    ) -> List[ObjectSpec]:
        if object_set is not None:
            objects = persistence.load_object_set(object_set)
        else:
            objects = generate_object_set(
                derive_seed(self.seed, 2),
                self.config.simulator.composition,
                reference_force=self._reference_force(),
                section_step=self.config.simulator.section_step,
            )
        if count is not None:
            if count < 0:
                raise DomainError(f"object count must be non-negative, got {count}")
            objects = objects[:count]
        return objects

    def _reference_force(self) -> float:
        gripper = self.config.gripper
        return gripper.force_setpoint / gripper.finger_multiplicity

    def sort(
        self,
        profile_path: PathLike,
        out: Optional[PathLike] = None,
        report_format: str = "both",
        count: Optional[int] = None,
        object_set: Optional[PathLike] = None,
        episode_log: Optional[PathLike] = None,
        telemetry_out: Optional[PathLike] = None,
    ) -> SortingReport:
        """Run the sorting experiment against a saved calibration profile"""
        if report_format not in REPORT_FORMATS:
            raise DomainError(f"unknown report format {report_format!r}")

        profile = persistence.load_profile(profile_path)
        objects = self.objects(count, object_set)
        report = run_sorting_experiment(
            objects,
            self.gripper(),
            profile,
            self.config.boundary(),
            seed=derive_seed(self.seed, 3),
            models=self.models,
            settings=self.config.simulator,
            pair_map=self.config.pair_map(),
            pair_tolerance=self.config.geometry.pair_tolerance,
        )

        if out is not None:
            for fmt in REPORT_FORMATS[report_format]:
                path = Path(out).with_suffix(persistence.EXPORTERS[fmt].suffix)
                persistence.write_report(report, path, fmt)
                logger.info(f"Report written to {path}")
        if episode_log is not None:
            for episode in report.episodes:
                persistence.append_episode_log(episode, episode_log)
            logger.info(f"{len(report.episodes)} episodes appended to {episode_log}")
        if telemetry_out is not None:
            self.write_telemetry(report.episodes, telemetry_out)

        metrics = report.metrics
        print(f"Objects: {len(report.rows)} ({metrics.graspable_count} graspable)")
        print(
            "Rigid objects within 6 mm: "
            f"{_fmt(metrics.rigid_within_tolerance, '.1%')}"
        )
        print(f"Mean abs diameter error: {_fmt(metrics.mean_abs_diameter_error)} mm")
        print(
            "Measurable strain within 0.1: "
            f"{_fmt(metrics.strain_within_tolerance, '.1%')}"
        )
        print(f"Mean abs strain error: {_fmt(metrics.mean_abs_strain_error)}")
        print(f"Classification success: {_fmt(metrics.classification_success, '.1%')}")
        print(
            f"Unrecognizable: {metrics.unrecognizable_count}, "
            f"slipped: {metrics.slipped_count}"
        )
        return report

    def write_telemetry(
        self, episodes: Sequence[GraspEpisode], path: PathLike
    ) -> List[TelemetryFrame]:
        """Encode every grasped episode back to back, as one serial capture"""
        frames: List[TelemetryFrame] = []
        for episode in episodes:
            if episode.outcome == OUTCOME_SLIPPED:
                continue
            frames.extend(
                episode_to_frames(episode, self.config.channel_ids, len(frames))
            )
        with open(path, "wb") as f:
            for frame in frames:
                f.write(encode_frame(frame))
        logger.info(f"{len(frames)} telemetry frames written to {path}")
        return frames

    def replay(
        self,
        log_path: PathLike,
        profile_path: PathLike,
        episodes_path: Optional[PathLike] = None,
    ) -> List[ReplayResult]:
        """
        Parse a recorded byte log, split it into grasps and estimate each one.

        With an episode log the recorded gripper gaps and hold start are used,
        which makes the estimates identical to the direct pipeline. Otherwise
        the hold phase is located from the smoothed derivative.
        """
        profile = persistence.load_profile(profile_path)
        telemetry = self.config.telemetry

        parser = FrameParser()
        frames = list(iter_file_frames(log_path, parser, telemetry.chunk_size))
        grasps = split_grasps(frames)

        episodes: Optional[List[GraspEpisode]] = None
        if episodes_path is not None:
            episodes = [
                episode
                for episode in persistence.read_episode_log(episodes_path)
                if episode.outcome != OUTCOME_SLIPPED
            ]
            if len(episodes) != len(grasps):
                raise StreamError(
                    f"byte log holds {len(grasps)} grasps but the episode log "
                    f"has {len(episodes)} grasped episodes"
                )

        results = []
        for index, grasp in enumerate(grasps):
            episode = episodes[index] if episodes is not None else None
            try:
                result = self._replay_grasp(index, grasp, profile, episode)
            except StreamError as e:
                logger.warning(f"Grasp {index}: {e}")
                continue
            results.append(result)
            self._print_replay(result)

        stats = parser.stats
        print(
            f"Frames: {stats.frames}, corrupt: {stats.corrupt_frames}, "
            f"skipped bytes: {stats.skipped_bytes}, "
            f"sequence gaps: {len(stats.gaps)} ({stats.missing_frames} missing)"
        )
        return results

    def _replay_grasp(
        self,
        index: int,
        frames: Sequence[TelemetryFrame],
        profile: CalibrationProfile,
        episode: Optional[GraspEpisode],
    ) -> ReplayResult:
        telemetry = self.config.telemetry
        samples = [(frame.timestamp, frame.voltages) for frame in frames]

        filtered = filter_and_differentiate(samples, telemetry.filter_window)
        peak = max(max(abs(d) for d in sample.derivative) for sample in filtered)
        logger.debug(f"Grasp {index}: {len(frames)} frames, peak {peak:.2f} V/s")

        if episode is not None:
            steady_from = episode.steady_from
        else:
            smoothed = filter_and_differentiate(samples, telemetry.steady_window)
            # The last half window only sees a truncated average
            full = smoothed[: max(len(smoothed) - telemetry.steady_window // 2, 1)]
            start = find_steady_window(full, telemetry.steady_slope)
            steady_from = float(frames[start].timestamp)

        held = [frame.voltages for frame in frames if frame.timestamp >= steady_from]
        if not held:
            raise StreamError(f"no frames after the hold start {steady_from} ms")
        steady = {
            channel: float(np.mean([voltages[position] for voltages in held]))
            for position, channel in enumerate(self.config.channel_ids)
        }

        pair_map = self.config.pair_map()
        tolerance = self.config.geometry.pair_tolerance
        aggregate = aggregate_pairs(profile, steady, pair_map, tolerance)
        estimate = None
        if episode is not None:
            estimate = estimate_grasp(
                profile,
                steady,
                gap_at_contact=episode.gap_at_contact,
                gap_at_steady=episode.gap_at_steady,
                curve=self.config.force_curve(),
                boundary=self.config.boundary(),
                pair_map=pair_map,
                pair_tolerance=tolerance,
                n_active_fingers=self.config.geometry.n_active_fingers,
            )
        return ReplayResult(
            index, len(frames), steady_from, steady, aggregate, estimate
        )

    def _print_replay(self, result: ReplayResult) -> None:
        if result.estimate is not None:
            estimate = result.estimate
            print(
                f"Grasp {result.index}: d={estimate.midpoint_displacement:.2f} mm, "
                f"diameter={_fmt(estimate.estimated_diameter, '.2f')} mm, "
                f"strain={_fmt(estimate.estimated_strain)}, "
                f"force={estimate.estimated_force:.2f} N, "
                f"{estimate.classification} "
                f"[{sorted_anomalies(estimate.anomalies)}]"
            )
            return

        aggregate = result.aggregate
        curve = self.config.force_curve()
        on_curve = min(
            max(aggregate.midpoint_displacement, curve.min_displacement),
            curve.max_displacement,
        )
        anomalies = set(aggregate.anomalies)
        if detect_contact_shadowing(aggregate.pair_readings):
            anomalies.add(CONTACT_SHADOWING)
        print(
            f"Grasp {result.index}: d={aggregate.midpoint_displacement:.2f} mm, "
            f"force={estimate_force(curve, on_curve):.2f} N "
            f"[{sorted_anomalies(anomalies)}] (no gripper gaps recorded)"
        )

    def characterize(self, out_csv: Optional[PathLike] = None) -> Dict[int, LinearFit]:
        """
        Sweep every channel from 0 to d_max and fit its linear stage. Writes
        one CSV row per displacement step with raw, filtered, derivative and
        fitted columns per channel.
        """
        simulator = self.config.simulator
        models = self.models
        if not models:
            raise DomainError("no channels configured")

        sweeps = {
            model.channel_id: simulate_characterization_sweep(
                model,
                step_mm=simulator.characterization_step,
                noise=simulator.noise,
                seed=derive_seed(self.seed, 4, model.channel_id),
            )
            for model in models
        }
        reference = models[0]
        displacements = [d for d, _ in sweeps[reference.channel_id]]

        fits: Dict[int, LinearFit] = {}
        filtered = {}
        for model in models:
            sweep = sweeps[model.channel_id]
            linear = [
                (d, reading.voltage)
                for d, reading in sweep
                if stage_of(model, d) == STAGE_LINEAR
            ]
            fits[model.channel_id] = fit_linear(linear)
            filtered[model.channel_id] = filter_and_differentiate(
                [(reading.timestamp, reading.voltage) for _, reading in sweep],
                self.config.telemetry.filter_window,
            )
            print(
                f"Channel {model.channel_id}: slope={fits[model.channel_id].slope:.4f}"
                f" V/mm, r2={fits[model.channel_id].r_squared:.4f}"
            )

        if out_csv is not None:
            header = ["displacement_mm", "stage"]
            for model in models:
                prefix = f"ch{model.channel_id}"
                header += [
                    f"{prefix}_raw_v",
                    f"{prefix}_filtered_v",
                    f"{prefix}_derivative_v_s",
                    f"{prefix}_fit_v",
                ]
            with open(out_csv, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for i, d in enumerate(displacements):
                    row = [f"{d:.3f}", stage_of(reference, d)]
                    for model in models:
                        reading = sweeps[model.channel_id][i][1]
                        sample = filtered[model.channel_id][i]
                        fit = fits[model.channel_id]
                        row += [
                            f"{reading.voltage:.6f}",
                            f"{sample.filtered[0]:.6f}",
                            f"{sample.derivative[0]:.6f}",
                            f"{fit.slope * d + fit.intercept:.6f}",
                        ]
                    writer.writerow(row)
            logger.info(f"Characterization sweep written to {out_csv}")
        return fits

    def drift(
        self, profile_a: PathLike, profile_b: PathLike
    ) -> Dict[int, ChannelDrift]:
        """Compare two calibration profiles of the same gripper"""
        drift = profile_drift(
            persistence.load_profile(profile_a), persistence.load_profile(profile_b)
        )
        for channel, change in sorted(drift.items()):
            print(
                f"Channel {channel}: slope x{change.slope_ratio:.4f}, "
                f"intercept {change.intercept_delta:+.4f} V"
            )
        return drift
