"""Logging configuration for the CLI and scripts."""
import logging
import logging.config
import os
from pathlib import Path
from typing import Optional

import yaml
from rich.logging import RichHandler

from .paths import get_project_paths, load_environment


def setup_logging(level: Optional[str] = None, config_path: Optional[Path] = None) -> None:
    """
    Configure logging from config/logging.yaml, falling back to a RichHandler.

    Args:
        level: Root level override, otherwise DIFFAN_LOG_LEVEL or the file's level
        config_path: Alternative logging.yaml
    """
    load_environment()
    level = level or os.getenv('DIFFAN_LOG_LEVEL')

    if config_path is None:
        try:
            config_path = get_project_paths()['logging_config']
        except FileNotFoundError:
            config_path = None

    if config_path is not None and Path(config_path).exists():
        with open(config_path, 'r') as f:
            logging.config.dictConfig(yaml.safe_load(f))
    else:
        logging.basicConfig(
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        )
        logging.getLogger().setLevel(logging.INFO)

    if level:
        logging.getLogger('diffan').setLevel(level.upper())
