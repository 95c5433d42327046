"""Shared logging configuration for the solver."""

import os
import logging
from logging.handlers import RotatingFileHandler

# Solver loggers hang off this name, so the root logger is left alone
LOGGER_NAME = "influence_bnb"

LOG_DIR = os.environ.get("LOG_DIR", "logs")
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
# empty string turns the log file off
LOG_FILE = os.environ.get("LOG_FILE", "influence-bnb.log")
LOG_FORMAT = "InfluenceBnB - %(asctime)s - %(levelname)s - %(message)s"

LOG_LEVEL_MAP = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}


def get_logger(name=LOGGER_NAME):
    """
    Get the solver logger, configuring it on first use.

    Console output goes to stderr so MEU values and statistics on stdout stay
    machine readable. A rotating file under LOG_DIR is added unless LOG_FILE
    is empty.

    Args:
        name (str, optional): Logger name. Defaults to the solver logger.

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(name)

    if not logger.handlers:
        logger.setLevel(LOG_LEVEL_MAP.get(LOG_LEVEL, logging.INFO))
        formatter = logging.Formatter(LOG_FORMAT)

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if LOG_FILE:
            os.makedirs(LOG_DIR, exist_ok=True)
            file_handler = RotatingFileHandler(
                os.path.join(LOG_DIR, LOG_FILE), maxBytes=10 * 1024 * 1024, backupCount=5  # 10MB
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger


def set_log_level(level, name=LOGGER_NAME):
    """Change the level of an already configured logger (``--log-level`` on the CLI)."""
    if level.upper() not in LOG_LEVEL_MAP:
        raise ValueError(f"unknown log level {level!r}")
    get_logger(name).setLevel(LOG_LEVEL_MAP[level.upper()])
