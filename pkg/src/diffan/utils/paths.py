"""Utility functions for handling project paths."""
import os
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv


def find_project_root(start_path: Optional[Path] = None) -> Path:
    """Find the project root directory by looking for pyproject.toml."""
    if start_path is None:
        start_path = Path(__file__).resolve().parent

    current = start_path.absolute()

    while current != current.parent:
        if (current / 'pyproject.toml').exists():
            return current
        current = current.parent

    raise FileNotFoundError(
        "Project root not found. Ensure pyproject.toml exists in project root directory."
    )


def load_environment() -> None:
    """Load config/.env into the process environment if the project root is reachable."""
    try:
        load_dotenv(find_project_root() / 'config' / '.env')
    except FileNotFoundError:
        # installed without the source tree; rely on the real environment
        pass


def get_project_paths() -> Dict[str, Path]:
    """Get standardized paths for the project."""
    root = find_project_root()
    load_environment()
    runs = os.getenv('DIFFAN_OUTPUT_DIR')

    return {
        'root': root,
        'src': root / 'src',
        'config': root / 'config',
        'default_config': root / 'config' / 'default.yaml',
        'logging_config': root / 'config' / 'logging.yaml',
        'runs': Path(runs) if runs else root / 'runs',
    }


def ensure_directory(path: Path) -> Path:
    """Ensure directory exists, create if it doesn't."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def command_output_dir(out_dir: Optional[Path], command: str) -> Path:
    """out_dir if given, otherwise runs/<command>-<timestamp> under the project or DIFFAN_OUTPUT_DIR."""
    if out_dir:
        return ensure_directory(Path(out_dir))
    try:
        runs = get_project_paths()['runs']
    except FileNotFoundError:
        runs = Path(os.getenv('DIFFAN_OUTPUT_DIR') or 'runs')
    return ensure_directory(runs / f"{command}-{datetime.now():%Y%m%d-%H%M%S}")
