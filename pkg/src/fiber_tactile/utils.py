import logging
import math
import os
import tempfile
from typing import Iterable, List

import numpy as np

from fiber_tactile.errors import DomainError

logger = logging.getLogger("fiber_tactile")

LOG_FILE_NAME = "fiber_tactile.log"


def setup_logging(debug: bool = False) -> logging.Logger:
    """
    Configure logging for the application.
    Args:
        debug (bool): If True, sets logging level to DEBUG, otherwise INFO
    """

    # Only configure if handlers haven't been set up
    if not logger.handlers:
        base_level = logging.DEBUG if debug else logging.INFO
        logger.setLevel(logging.DEBUG)

        console_handler = logging.StreamHandler()
        console_handler.setLevel(base_level)

        # Debug log always goes to the temp dir, the console follows --debug
        log_dir = tempfile.gettempdir()
        if not os.path.exists(log_dir):
            os.makedirs(log_dir)

        file_handler = logging.FileHandler(os.path.join(log_dir, LOG_FILE_NAME))
        file_handler.setLevel(logging.DEBUG)

        console_formatter = logging.Formatter("%(levelname)s - %(message)s")
        file_formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")

        console_handler.setFormatter(console_formatter)
        file_handler.setFormatter(file_formatter)

        logger.addHandler(console_handler)
        logger.addHandler(file_handler)

    return logger


def require_finite(name: str, *values: float) -> None:
    """Raise DomainError if any value is NaN or infinite"""
    for value in values:
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from a tuple of non-negative integers"""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def child_seeds(seed: int, keys: Iterable[int]) -> List[int]:
    """
    Derive one independent seed per key from a parent seed.

    The derived seed depends only on (seed, key), never on iteration order,
    so work can be split across threads without changing results.
    """
    return [derive_seed(seed, key) for key in keys]
