import os
import logging
from fractions import Fraction
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


def _env_list(name, default):
    raw = os.getenv(name, default)
    return [float(part) for part in raw.split(",") if part.strip()]


class Config:
    SEED = os.getenv("TCT_SEED", "0")
    PRECISION_BITS = os.getenv("TCT_PRECISION_BITS", "53")
    TRUNCATION = os.getenv("TCT_TRUNCATION", "6")
    TOLERANCE = os.getenv("TCT_TOLERANCE", "0.05")
    SAMPLES = os.getenv("TCT_SAMPLES", "2000")
    MAX_SAMPLES = os.getenv("TCT_MAX_SAMPLES", "100000")
    ATTRACTION_SAMPLES = os.getenv("TCT_ATTRACTION_SAMPLES", "48")
    RADIUS_SCHEDULE = os.getenv("TCT_RADIUS_SCHEDULE", "100,1000,10000")
    THRESHOLD_RADIUS = os.getenv("TCT_THRESHOLD_RADIUS", "1000")
    PARAM_SAMPLES = os.getenv("TCT_PARAM_SAMPLES", "20")
    ZERO_TEST_SAMPLES = os.getenv("TCT_ZERO_TEST_SAMPLES", "12")
    MAX_LIFT_STEPS = os.getenv("TCT_MAX_LIFT_STEPS", "64")
    WORKERS = os.getenv("TCT_WORKERS", "1")
    LOG_FILE = os.getenv("TCT_LOG_FILE", "torus_closure.log")
    RUN_LOG = os.getenv("TCT_RUN_LOG", "run_log.json")

    _DEFAULTS = {
        "SEED": (int, 0),
        "PRECISION_BITS": (int, 53),
        "TRUNCATION": (Fraction, Fraction(6)),
        "TOLERANCE": (float, 0.05),
        "SAMPLES": (int, 2000),
        "MAX_SAMPLES": (int, 100000),
        "ATTRACTION_SAMPLES": (int, 48),
        "THRESHOLD_RADIUS": (float, 1000.0),
        "PARAM_SAMPLES": (int, 20),
        "ZERO_TEST_SAMPLES": (int, 12),
        "MAX_LIFT_STEPS": (int, 64),
        "WORKERS": (int, 1),
    }

    def __init__(self):
        for name, (kind, default) in self._DEFAULTS.items():
            raw = getattr(type(self), name)
            try:
                value = kind(raw) if isinstance(raw, str) else raw
            except (TypeError, ValueError, ZeroDivisionError):
                logger.warning(f"WARNING: {name}={raw!r} is not usable, falling back to {default}")
                value = default
            setattr(self, name, value)
        try:
            schedule = _env_list("TCT_RADIUS_SCHEDULE", type(self).RADIUS_SCHEDULE)
        except ValueError:
            logger.warning("WARNING: TCT_RADIUS_SCHEDULE is not a comma list, using 100,1000,10000")
            schedule = [100.0, 1000.0, 10000.0]
        self.RADIUS_SCHEDULE: List[float] = schedule or [100.0, 1000.0, 10000.0]
        if self.PARAM_SAMPLES < 20:
            logger.warning("WARNING: PARAM_SAMPLES below 20 weakens rank certification; using 20")
            self.PARAM_SAMPLES = 20


settings = Config()

_rng: Optional[np.random.Generator] = None


def reset_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Re-seed the shared generator; every randomized step draws from it."""
    global _rng
    _rng = np.random.default_rng(settings.SEED if seed is None else seed)
    return _rng


def get_rng() -> np.random.Generator:
    if _rng is None:
        return reset_rng()
    return _rng


def random_rational(bound: int = 50, nonzero: bool = False) -> Fraction:
    """Small random rational p/q with |p| <= bound and 1 <= q <= bound."""
    rng = get_rng()
    while True:
        value = Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))
        if value != 0 or not nonzero:
            return value
