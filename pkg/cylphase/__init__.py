import logging
import os

__version__ = "0.1.0"

default = {
    'L_MAX': 16,
    'THREADS': 1,
    'LOG_LEVEL': 'WARNING',
}


def _int_from_env(key_to_check: str, fallback: int) -> int:
    value = os.environ.get(f"CYLPHASE_{key_to_check}")
    if value is None:
        return fallback
    try:
        parsed = int(value)
    except ValueError:
        return fallback
    return parsed if parsed > 0 else fallback


# Truncation half-width for every infinite ell sum; e^{-16^2} is far below
# double precision, so coherent-state tails vanish at the window edge.
L_MAX = _int_from_env("L_MAX", default['L_MAX'])

# Worker threads for grid evaluation and slice-parallel tomography
THREADS = _int_from_env("THREADS", default['THREADS'])

LOG_LEVEL = os.environ.get("CYLPHASE_LOG_LEVEL", default['LOG_LEVEL']).upper()

logging.getLogger(__name__).addHandler(logging.NullHandler())
