"""Representative-class selection and multi-layer CAM fusion."""

import json as _json

from ._camsel import *  # noqa: F401,F403
from ._camsel import CamselError, run as _run


def run(config):
    """Run the full pipeline; `config` is a dict or a JSON string."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _run(config)


__all__ = [name for name in dir() if not name.startswith("_")]
