"""
Runtime Settings

Environment-driven settings for the simulator. Values come from the process
environment, optionally populated from a local .env file.
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

LOG_LEVEL_ENV = "LPSIM_LOG_LEVEL"
OUT_DIR_ENV = "LPSIM_OUT_DIR"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def log_level() -> int:
    """Resolve the logging level named by LPSIM_LOG_LEVEL (default INFO)."""
    name = os.getenv(LOG_LEVEL_ENV, "INFO").strip().upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def default_out_dir() -> Path:
    return Path(os.getenv(OUT_DIR_ENV, "runs/latest"))


def configure_logging() -> None:
    """Apply the environment log level to the root logger."""
    logging.basicConfig(level=log_level(), format=LOG_FORMAT)
    logging.getLogger().setLevel(log_level())
