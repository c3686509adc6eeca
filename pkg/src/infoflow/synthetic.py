"""Seeded benchmark processes and their closed-form oracles."""

import math
from dataclasses import dataclass

import numpy as np

from .classifier_mi import PairDataset
from .exceptions import ConfigurationError
from .validation import as_generator


@dataclass(frozen=True)
class SeriesPair:
    """Two aligned scalar time series."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("series lengths differ")

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class ThresholdProcessSpec:
    """Coupled threshold process.

    The source is i.i.d. standard normal. The target copies fresh noise
    while its previous value is below the threshold, and otherwise mixes
    the previous source sample with noise at correlation ``rho``.
    """

    rho: float
    lam: float
    T: int
    seed: int | None = None

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ConfigurationError(f"|rho| must be < 1, got {self.rho}")
        if self.T < 2:
            raise ConfigurationError(f"T must be >= 2, got {self.T}")


def gen_threshold_process(spec):
    """Generate the threshold process; deterministic per seed."""
    rng = as_generator(spec.seed)
    x = rng.standard_normal(spec.T)
    z = rng.standard_normal(spec.T)
    y = np.empty(spec.T)
    y[0] = z[0]
    coef = math.sqrt(1.0 - spec.rho**2)
    for t in range(1, spec.T):
        if y[t - 1] < spec.lam:
            y[t] = z[t]
        else:
            y[t] = spec.rho * x[t - 1] + coef * z[t]
    return SeriesPair(x, y)


def closed_form_te(rho, lam):
    """Exact transfer entropy of the threshold process, in nats.

    Equals -0.5 * Q(lam) * log(1 - rho^2) where Q is the standard
    normal complementary CDF.
    """
    if not abs(rho) < 1:
        raise ConfigurationError(f"|rho| must be < 1, got {rho}")
    q = 0.5 * math.erfc(lam / math.sqrt(2.0))
    return -0.5 * q * math.log1p(-rho * rho)


def gen_gaussian_pair(rho, T, seed=None):
    """I.i.d. bivariate normal rows with unit variances and correlation rho.

    True mutual information is -0.5 * log(1 - rho^2) nats.
    """
    if not abs(rho) < 1:
        raise ConfigurationError(f"|rho| must be < 1, got {rho}")
    rng = as_generator(seed)
    u = rng.standard_normal(T)
    v = rho * u + math.sqrt(1.0 - rho * rho) * rng.standard_normal(T)
    return PairDataset(u[:, None], v[:, None], label=1)


def gen_xor_process(noise_std=0.05, T=1000, seed=None):
    """Chained binary XOR process with Gaussian dither.

    The clean bits satisfy Y_t = X_{t-1} XOR Y_{t-1} with i.i.d. fair
    source bits, so the source alone carries no information about the
    target's next value while source and target history together
    determine it. The dither makes the emitted values continuous so
    density-based estimators apply.
    """
    if not (0 <= noise_std <= 0.1):
        raise ConfigurationError(f"noise_std must lie in [0, 0.1], got {noise_std}")
    rng = as_generator(seed)
    xb = rng.integers(0, 2, size=T)
    yb = np.empty(T, dtype=np.int64)
    yb[0] = rng.integers(0, 2)
    for t in range(1, T):
        yb[t] = xb[t - 1] ^ yb[t - 1]
    x = xb.astype(np.float64)
    y = yb.astype(np.float64)
    if noise_std > 0:
        x = x + noise_std * rng.standard_normal(T)
        y = y + noise_std * rng.standard_normal(T)
    return SeriesPair(x, y)


def gen_independent(T, seed=None):
    """Two independent i.i.d. standard normal series (null control)."""
    rng = as_generator(seed)
    return SeriesPair(rng.standard_normal(T), rng.standard_normal(T))
