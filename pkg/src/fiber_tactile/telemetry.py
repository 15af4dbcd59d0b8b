#!/usr/bin/env python
# encoding: utf-8
"""
Serial telemetry from the gripper microcontroller.

Every frame carries one sample of the eight receiving fibers::

    magic     4 bytes  b"FCS1"
    sequence  uint16   wraps at 65536
    timestamp uint32   ms since the start of the grasp
    channels  8 x uint16 raw ADC counts (10-bit, 0..1023)
    checksum  uint16   sum of all preceding bytes mod 65536

All fields little-endian, 28 bytes per frame.
"""

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from fiber_tactile.errors import (
    CorruptFrameError,
    DomainError,
    NeedMoreBytesError,
    ResyncNeededError,
    StreamError,
)
from fiber_tactile.sensor_model import FULL_SCALE_V

if TYPE_CHECKING:
    from fiber_tactile.grasp_sim import GraspEpisode

logger = logging.getLogger("fiber_tactile")

MAGIC = b"FCS1"
N_CHANNELS = 8
FRAME_FORMAT = "<4sHI8HH"
FRAME_SIZE = struct.calcsize(FRAME_FORMAT)
MAX_COUNT = 1023
SEQUENCE_MODULUS = 1 << 16
ADC_STEP_V = FULL_SCALE_V / MAX_COUNT


@dataclass(frozen=True)
class TelemetryFrame:
    sequence: int
    timestamp: int
    channels: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.sequence < SEQUENCE_MODULUS:
            raise DomainError(f"sequence {self.sequence} is not an unsigned 16-bit")
        if not 0 <= self.timestamp < (1 << 32):
            raise DomainError(f"timestamp {self.timestamp} is not an unsigned 32-bit")
        if len(self.channels) != N_CHANNELS:
            raise DomainError(
                f"frame needs {N_CHANNELS} channels, got {len(self.channels)}"
            )

    @property
    def voltages(self) -> Tuple[float, ...]:
        return tuple(counts_to_volts(count) for count in self.channels)


@dataclass(frozen=True)
class FilteredSample:
    timestamp: float
    filtered: Tuple[float, ...]
    derivative: Tuple[float, ...]


@dataclass(frozen=True)
class SequenceGap:
    after: int
    missing: int


@dataclass
class StreamStats:
    frames: int = 0
    skipped_bytes: int = 0
    corrupt_frames: int = 0
    gaps: List[SequenceGap] = field(default_factory=list)

    @property
    def missing_frames(self) -> int:
        return sum(gap.missing for gap in self.gaps)


def counts_to_volts(count: int) -> float:
    return count * ADC_STEP_V


def volts_to_counts(voltage: float) -> int:
    if not 0.0 <= voltage <= FULL_SCALE_V:
        raise DomainError(f"voltage {voltage} outside [0, {FULL_SCALE_V}] V")
    return int(np.rint(voltage / ADC_STEP_V))


def _checksum(payload: bytes) -> int:
    return sum(payload) % 65536


def encode_frame(frame: TelemetryFrame) -> bytes:
    for count in frame.channels:
        if not 0 <= count <= MAX_COUNT:
            raise DomainError(f"channel count {count} outside [0, {MAX_COUNT}]")
    body = struct.pack(
        FRAME_FORMAT[:-1], MAGIC, frame.sequence, frame.timestamp, *frame.channels
    )
    return body + struct.pack("<H", _checksum(body))


def decode_frame(data: bytes) -> TelemetryFrame:
    """
    Decode the frame at the start of ``data``.

    Raises:
        NeedMoreBytesError: fewer than a whole frame available
        ResyncNeededError: ``data`` does not start with the magic
        CorruptFrameError: checksum mismatch or counts above the 10-bit range
    """
    if len(data) < FRAME_SIZE:
        raise NeedMoreBytesError(f"need {FRAME_SIZE} bytes, got {len(data)}")
    if data[: len(MAGIC)] != MAGIC:
        raise ResyncNeededError(f"bad magic {bytes(data[:len(MAGIC)])!r}")

    raw = bytes(data[:FRAME_SIZE])
    _, sequence, timestamp, *rest = struct.unpack(FRAME_FORMAT, raw)
    channels, checksum = rest[:N_CHANNELS], rest[N_CHANNELS]
    expected = _checksum(raw[:-2])
    if checksum != expected:
        raise CorruptFrameError(f"checksum {checksum:#06x} != {expected:#06x}")
    if any(count > MAX_COUNT for count in channels):
        raise CorruptFrameError(f"channel counts {channels} exceed {MAX_COUNT}")
    return TelemetryFrame(sequence, timestamp, tuple(channels))


class FrameParser:
    """
    Incremental resynchronising parser.

    Feed it byte chunks of any size; it returns every whole valid frame and
    keeps the statistics of what it had to throw away. The output does not
    depend on how the stream was sliced into chunks.
    """

    def __init__(self) -> None:
        self.stats = StreamStats()
        self._buffer = bytearray()
        self._last_sequence: Optional[int] = None

    def feed(self, chunk: bytes) -> List[TelemetryFrame]:
        self._buffer.extend(chunk)
        frames = []
        while True:
            start = self._buffer.find(MAGIC)
            if start < 0:
                # Keep a possible partial magic at the tail
                self._skip(max(len(self._buffer) - (len(MAGIC) - 1), 0))
                break
            self._skip(start)

            try:
                frame = decode_frame(self._buffer)
            except NeedMoreBytesError:
                break
            except CorruptFrameError as e:
                self.stats.corrupt_frames += 1
                logger.warning(f"Dropping corrupt frame: {e}")
                # Step past this magic only; a real frame may start inside it
                self._skip(1)
                continue

            del self._buffer[:FRAME_SIZE]
            self._track_sequence(frame.sequence)
            self.stats.frames += 1
            frames.append(frame)
        return frames

    def finish(self) -> StreamStats:
        """Account for trailing bytes that never completed a frame"""
        if self._buffer:
            logger.debug(f"Discarding {len(self._buffer)} trailing bytes")
            self._skip(len(self._buffer))
        return self.stats

    def _skip(self, count: int) -> None:
        if count:
            self.stats.skipped_bytes += count
            del self._buffer[:count]

    def _track_sequence(self, sequence: int) -> None:
        if self._last_sequence is not None:
            missing = (sequence - self._last_sequence - 1) % SEQUENCE_MODULUS
            if missing:
                self.stats.gaps.append(SequenceGap(self._last_sequence, missing))
                logger.warning(
                    f"Sequence gap after {self._last_sequence}: {missing} frame(s)"
                )
        self._last_sequence = sequence


def resync_stream(
    chunks: Iterable[bytes],
) -> Tuple[List[TelemetryFrame], StreamStats]:
    parser = FrameParser()
    frames: List[TelemetryFrame] = []
    for chunk in chunks:
        frames.extend(parser.feed(chunk))
    return frames, parser.finish()


def iter_file_frames(
    path: Union[str, Path],
    parser: Optional[FrameParser] = None,
    chunk_size: int = 4096,
) -> Iterator[TelemetryFrame]:
    """
    Frames from a byte log or a character device. Pass a parser to read its
    statistics once the iterator is exhausted.
    """
    parser = parser or FrameParser()
    with open(path, "rb") as f:
        while True:
            chunk = f.read(chunk_size)
            if not chunk:
                break
            yield from parser.feed(chunk)
    parser.finish()


def filter_and_differentiate(
    samples: Sequence[Tuple[float, Union[float, Sequence[float]]]],
    window: int = 5,
) -> List[FilteredSample]:
    """
    Centered moving average (truncated at the edges) followed by a finite
    difference in V/s. ``samples`` holds (timestamp ms, voltage or voltages).
    """
    if window < 1 or window % 2 == 0:
        raise DomainError(f"window must be a positive odd number, got {window}")
    if not samples:
        return []

    times = np.asarray([s[0] for s in samples], dtype=float)
    values = np.asarray([np.atleast_1d(s[1]) for s in samples], dtype=float)
    if np.any(np.diff(times) <= 0):
        raise StreamError("timestamps must be strictly increasing")

    n = len(times)
    half = window // 2
    filtered = np.empty_like(values)
    for i in range(n):
        filtered[i] = values[max(i - half, 0) : min(i + half + 1, n)].mean(axis=0)

    if n > 1:
        derivative = np.gradient(filtered, times / 1000.0, axis=0)
    else:
        derivative = np.zeros_like(filtered)

    return [
        FilteredSample(float(t), tuple(map(float, f)), tuple(map(float, d)))
        for t, f, d in zip(times, filtered, derivative)
    ]


def split_grasps(frames: Sequence[TelemetryFrame]) -> List[List[TelemetryFrame]]:
    """Each grasp restarts its timestamps, so a non-increasing one opens a new grasp"""
    grasps: List[List[TelemetryFrame]] = []
    for frame in frames:
        if not grasps or frame.timestamp <= grasps[-1][-1].timestamp:
            grasps.append([])
        grasps[-1].append(frame)
    return grasps


def find_steady_window(
    samples: Sequence[FilteredSample], slope_threshold: float
) -> int:
    """
    Index where the trailing steady run starts: from there on the
    cross-channel mean derivative stays within ``slope_threshold`` V/s.
    """
    if not samples:
        raise StreamError("no samples to search for a steady window")
    start = len(samples)
    for i in range(len(samples) - 1, -1, -1):
        if abs(float(np.mean(samples[i].derivative))) > slope_threshold:
            break
        start = i
    if start == len(samples):
        raise StreamError("signal is still moving at the end of the stream")
    return start


def episode_to_frames(
    episode: "GraspEpisode",
    channel_ids: Sequence[int],
    start_sequence: int = 0,
) -> List[TelemetryFrame]:
    """Encode a simulated episode's traces as the frames the hardware would send"""
    if len(channel_ids) != N_CHANNELS:
        raise DomainError(f"telemetry carries exactly {N_CHANNELS} channels")
    if not episode.traces:
        return []

    traces = [episode.traces[channel] for channel in channel_ids]
    lengths = {len(trace) for trace in traces}
    if len(lengths) != 1:
        raise DomainError("channel traces differ in length")

    frames = []
    for i, readings in enumerate(zip(*traces)):
        frames.append(
            TelemetryFrame(
                sequence=(start_sequence + i) % SEQUENCE_MODULUS,
                timestamp=int(round(readings[0].timestamp)),
                channels=tuple(volts_to_counts(r.voltage) for r in readings),
            )
        )
    return frames
