#!/usr/bin/env python3
"""
Configuration module for fklab.
Handles loading environment variables and the numeric defaults shared by the
enumeration engine, the samplers and the experiments.
"""

import os
import logging
from pathlib import Path
from typing import List, Tuple
from dotenv import load_dotenv

# Define project base directory
# Logging setup lives in main.py to centralize configuration
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring non-integer {name}={raw!r}; using {default}.")
        return default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring non-numeric {name}={raw!r}; using {default}.")
        return default


class Config:
    """Static configuration class holding application settings."""

    # Exact enumeration
    ENUMERATION_LIMIT = _env_int('FKLAB_ENUMERATION_LIMIT', 24)
    LOG_SPACE_THRESHOLD = 40

    # Monte Carlo schedule
    BURN_IN = _env_int('FKLAB_BURN_IN', 1000)
    N_CHAINS = _env_int('FKLAB_N_CHAINS', 8)
    N_BATCHES = _env_int('FKLAB_N_BATCHES', 20)
    WORKERS = _env_int('FKLAB_WORKERS', 1)

    # Tolerances
    EXACT_TOL = _env_float('FKLAB_EXACT_TOL', 1e-12)
    CONTOUR_TOL = _env_float('FKLAB_CONTOUR_TOL', 1e-10)

    # Log Configuration
    LOG_LEVEL = os.getenv('FKLAB_LOG_LEVEL', 'INFO')
    LOG_DIR = BASE_DIR / "logs"
    LOG_FILE = LOG_DIR / "fklab.log"

    @classmethod
    def validate(cls) -> Tuple[bool, List[str]]:
        """Checks the numeric settings for consistency.

        Returns:
            A pair (ok, problems) where problems lists human readable messages.
        """
        problems = []
        if not 1 <= cls.ENUMERATION_LIMIT <= 30:
            problems.append(f"FKLAB_ENUMERATION_LIMIT must lie in [1, 30], got {cls.ENUMERATION_LIMIT}")
        if cls.BURN_IN < 0:
            problems.append(f"FKLAB_BURN_IN must be non-negative, got {cls.BURN_IN}")
        if cls.N_CHAINS < 1:
            problems.append(f"FKLAB_N_CHAINS must be positive, got {cls.N_CHAINS}")
        if cls.N_BATCHES < 2:
            problems.append(f"FKLAB_N_BATCHES must be at least 2, got {cls.N_BATCHES}")
        if cls.WORKERS < 1:
            problems.append(f"FKLAB_WORKERS must be positive, got {cls.WORKERS}")
        if not (0 < cls.EXACT_TOL <= cls.CONTOUR_TOL):
            problems.append("tolerances must satisfy 0 < FKLAB_EXACT_TOL <= FKLAB_CONTOUR_TOL")
        if logging.getLevelName(cls.LOG_LEVEL.upper()) not in (10, 20, 30, 40, 50):
            problems.append(f"FKLAB_LOG_LEVEL is not a logging level: {cls.LOG_LEVEL}")
        return (not problems, problems)
