"""Sliding-window embedding of a series pair into (x-, y0, y-) rows."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .validation import check_series_pair


@dataclass(frozen=True)
class EmbeddingConfig:
    """Memory orders: m past source samples, n past target samples."""

    m: int = 1
    n: int = 1

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigurationError(f"memory orders must be >= 1, got m={self.m}, n={self.n}")


@dataclass(frozen=True)
class EmbeddedDataset:
    """One row per time step t: (x_{t-m..t-1}, y_t, y_{t-n..t-1}).

    Out-of-range indices are zero-padded, so the row count equals the
    series length.
    """

    x_minus: np.ndarray
    y0: np.ndarray
    y_minus: np.ndarray
    m: int
    n: int

    def __len__(self):
        return len(self.y0)

    def joint_v(self):
        """The (y0, y-) block used by the joint-history dataset."""
        return np.hstack([self.y0[:, None], self.y_minus])

    def drop_padded(self):
        """Remove the first max(m, n) rows, which contain padding zeros."""
        k = max(self.m, self.n)
        return EmbeddedDataset(self.x_minus[k:], self.y0[k:], self.y_minus[k:], self.m, self.n)


def _windows(series, width):
    padded = np.concatenate([np.zeros(width), series])
    return np.lib.stride_tricks.sliding_window_view(padded, width)[: len(series)].copy()


def embed(x, y, cfg=None, m=None, n=None):
    """Embed a series pair with memory (m, n); zero padding at the start.

    Accepts either an :class:`EmbeddingConfig` or explicit m/n keywords.
    """
    if cfg is None:
        cfg = EmbeddingConfig(m if m is not None else 1, n if n is not None else 1)
    x, y = check_series_pair(x, y)
    if len(x) < max(cfg.m, cfg.n) + 1:
        raise ConfigurationError(
            f"series of length {len(x)} too short for memory ({cfg.m}, {cfg.n})"
        )
    return EmbeddedDataset(
        x_minus=_windows(x, cfg.m),
        y0=y.copy(),
        y_minus=_windows(y, cfg.n),
        m=cfg.m,
        n=cfg.n,
    )
