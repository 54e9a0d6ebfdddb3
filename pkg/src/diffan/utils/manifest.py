"""Run manifests: what a command was asked to do and what it wrote."""
import json
import logging
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch

from .. import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: Union[str, Path], payload: Any) -> Path:
    path = Path(path)
    with open(path, 'w') as f:
        json.dump(_jsonable(payload), f, indent=2)
    return path


def write_manifest(out_dir: Union[str, Path], command: str, config: Dict[str, Any],
                   seeds: Dict[str, Any], outputs: List[Union[str, Path]],
                   arguments: Optional[Dict[str, Any]] = None,
                   extra: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write manifest.json into out_dir.

    Args:
        out_dir: Command output directory
        command: Subcommand name
        config: Fully resolved run configuration
        seeds: Every seed the command used, by role
        outputs: Files the command wrote
        arguments: Command line arguments, for reruns
        extra: Further top-level entries, such as training losses
    """
    out_dir = Path(out_dir)
    manifest = {
        'command': command,
        'version': __version__,
        'created': datetime.now().isoformat(timespec='seconds'),
        'python': platform.python_version(),
        'torch': torch.__version__,
        'arguments': arguments or {},
        'seeds': seeds,
        'config': config,
        'outputs': sorted(Path(p).name for p in outputs),
    }
    manifest.update(extra or {})
    path = write_json(out_dir / MANIFEST_NAME, manifest)
    logger.debug("wrote manifest %s", path)
    return path
