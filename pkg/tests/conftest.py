# tests/conftest.py
import os
import shutil
import sys
import tempfile
from pathlib import Path

import pytest

# Add the src directory to Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from fiber_tactile.calibration import CalibrationProfile, ChannelFit  # noqa: E402
from fiber_tactile.sensor_model import SensorChannelModel  # noqa: E402

# Ideal channel: v = 4.5 V at 5 mm, falling 0.12 V/mm
IDEAL_SLOPE = -0.12
IDEAL_INTERCEPT = 5.1
FIXED_TIMESTAMP = "2024-01-01T00:00:00"


def ideal_voltage(displacement: float) -> float:
    return IDEAL_INTERCEPT + IDEAL_SLOPE * displacement


@pytest.fixture
def temp_dir():
    """Create a temporary directory for files written by a test"""
    path = Path(tempfile.mkdtemp())
    yield path
    shutil.rmtree(path, ignore_errors=True)


@pytest.fixture
def default_model():
    return SensorChannelModel()


@pytest.fixture
def ideal_profile():
    """Eight identical channels with a perfect calibration"""
    return CalibrationProfile(
        fits={
            channel: ChannelFit(channel, IDEAL_SLOPE, IDEAL_INTERCEPT, 0.99)
            for channel in range(8)
        },
        created_at=FIXED_TIMESTAMP,
    )
