"""Configuration management for the application."""

import os

from dotenv import load_dotenv

from .log import get_logger

# Load environment variables from .env file
load_dotenv()

# Exact enumeration oracle
ENUMERATION_LIMIT = int(os.environ.get("ENUMERATION_LIMIT", "10000000"))

# Join tree memory budget (megabytes, two float64 tables per clique)
JOINTREE_MAX_MEMORY_MB = float(os.environ.get("JOINTREE_MAX_MEMORY_MB", "512"))

# Numerical tolerance for CPT normalization and decision constancy checks
PROBABILITY_TOLERANCE = float(os.environ.get("PROBABILITY_TOLERANCE", "1e-9"))

# Solver defaults
DEFAULT_METHOD = os.environ.get("DEFAULT_METHOD", "dfbnb")
DEFAULT_JOBS = int(os.environ.get("DEFAULT_JOBS", "1"))

# Maze layouts shipped with the repository
MAZE_DIRECTORY = os.environ.get("MAZE_DIRECTORY", "data/mazes")

METHODS = ("jointree", "exhaustive", "dfbnb")


def validate_config():
    """Validate that the configured values are usable."""
    logger = get_logger()

    problems = []
    if ENUMERATION_LIMIT < 1:
        problems.append("ENUMERATION_LIMIT")
    if JOINTREE_MAX_MEMORY_MB <= 0:
        problems.append("JOINTREE_MAX_MEMORY_MB")
    if not 0 < PROBABILITY_TOLERANCE < 1e-3:
        problems.append("PROBABILITY_TOLERANCE")
    if DEFAULT_METHOD not in METHODS:
        problems.append("DEFAULT_METHOD")
    if DEFAULT_JOBS < 1:
        problems.append("DEFAULT_JOBS")

    if problems:
        error_msg = f"Invalid configuration values: {', '.join(problems)}"
        logger.error(error_msg)
        raise EnvironmentError(error_msg)

    logger.debug("Configuration validated successfully")
