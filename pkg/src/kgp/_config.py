from __future__ import annotations

import os

from .exceptions import UserError
from .logger import logger

_default_fft_workers: int | None = None


def _workers_from_env() -> int | None:
    raw = os.getenv("KGP_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer KGP_THREADS={raw!r}")
        return None
    if value < 0:
        logger.warning(f"Ignoring negative KGP_THREADS={raw!r}")
        return None
    return value


def set_default_fft_workers(workers: int | None) -> None:
    """Cap the worker count used by the FFT transforms. `0` means one worker per CPU, `None`
    falls back to the `KGP_THREADS` environment variable."""
    global _default_fft_workers
    if workers is not None and workers < 0:
        raise UserError(f"fft workers must be >= 0, got {workers}")
    _default_fft_workers = workers


def get_fft_workers() -> int | None:
    """The `workers` argument passed to scipy.fft; None keeps scipy's default."""
    workers = _default_fft_workers if _default_fft_workers is not None else _workers_from_env()
    if workers is None:
        return None
    return -1 if workers == 0 else workers
