"""magtrace: trace-formula laboratory for the magnetic Laplacian on compact
hyperbolic surfaces with constant magnetic field."""
from __future__ import annotations

import os
from pathlib import Path

__version__ = "0.1.0"

DATA_ENV = "MAGTRACE_DATA"
_PACKAGE_DATA = Path(__file__).resolve().parent / "data"


def data_dir() -> Path:
    """Directory for data files: ``$MAGTRACE_DATA`` if set, else the shipped data."""
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else _PACKAGE_DATA


def data_path(name: str) -> Path:
    """Resolve ``name`` in :func:`data_dir`, falling back to the shipped copy."""
    p = data_dir() / name
    if not p.exists() and (_PACKAGE_DATA / name).exists():
        return _PACKAGE_DATA / name
    return p


from .errors import (  # noqa: E402
    DataFormatError,
    DomainError,
    EnumerationError,
    IntegrationError,
    MagtraceError,
    RegimeError,
    SpectrumWindowError,
)

__all__ = [
    "DATA_ENV", "data_dir", "data_path", "__version__",
    "MagtraceError", "DomainError", "RegimeError", "IntegrationError",
    "EnumerationError", "SpectrumWindowError", "DataFormatError",
]
