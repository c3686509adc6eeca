"""Input validation helpers and seeded RNG plumbing."""

import numpy as np

from .exceptions import ConfigurationError

# Fixed sub-stream labels so that every consumer of a run seed draws from
# its own independent, reproducible stream.
STREAM_SPLIT = 1
STREAM_MINE_A = 2
STREAM_MINE_B = 3
STREAM_RESAMPLE_A = 4
STREAM_RESAMPLE_B = 5
STREAM_NOISE = 6
STREAM_CHANNEL = 7
STREAM_DATA = 8


def as_generator(random_state):
    """Coerce int / None / Generator into a numpy Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def substream(seed, stream, index=0):
    """Deterministic child generator for (seed, stream, index).

    ``seed`` may be None, in which case a fresh nondeterministic
    generator is returned (no reproducibility guarantees).
    """
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(stream), int(index))))


def derive_seed(seed, stream, index=0):
    """Fold (seed, stream, index) into a single reproducible integer seed."""
    if seed is None:
        return None
    ss = np.random.SeedSequence((int(seed), int(stream), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def check_series(a, name="series"):
    """Validate a 1-D finite float series and return it as float64."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_series_pair(x, y):
    """Validate two aligned scalar series of equal length."""
    x = check_series(x, "x")
    y = check_series(y, "y")
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} vs {len(y)}")
    return x, y


def check_matrix(a, name="array"):
    """Coerce to a 2-D float64 sample matrix (rows are samples)."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_fraction(value, name):
    if not (0.0 < value < 1.0):
        raise ConfigurationError(f"{name} must lie strictly in (0, 1), got {value}")
    return float(value)


def check_positive(value, name):
    if value <= 0:
        raise ConfigurationError(f"{name} must be positive, got {value}")
    return value
