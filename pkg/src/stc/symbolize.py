"""Bag-of-symbol transform for multichannel time series.

Values are discretized against per-channel cutlines spanning +-3 sigma of the
fitting population (two open outer regions catch everything beyond), counted
per channel with time order discarded, and the flattened count vector is
z-scored per sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DataError

if TYPE_CHECKING:
    from .data import TimeSeriesSample


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and population standard deviation of the fitting split."""

    mean: np.ndarray   # (K,)
    sigma: np.ndarray  # (K,), >= 0

    def __post_init__(self):
        if self.mean.shape != self.sigma.shape or self.mean.ndim != 1:
            raise DataError("mean and sigma must be 1-D arrays of equal length")
        if np.any(self.sigma < 0):
            raise DataError("sigma must be non-negative")

    @property
    def n_channels(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class CutLines:
    """Per-channel symbol boundaries: n_symbols - 1 strictly increasing values."""

    n_symbols: int
    boundaries: np.ndarray  # (K, n_symbols - 1)

    def __post_init__(self):
        if self.n_symbols < 3:
            raise DataError("n_symbols must be >= 3")
        if self.boundaries.ndim != 2 or self.boundaries.shape[1] != self.n_symbols - 1:
            raise DataError("expected n_symbols - 1 boundaries per channel")
        if np.any(np.diff(self.boundaries, axis=1) <= 0):
            raise DataError("boundaries must be strictly increasing per channel")

    @property
    def n_channels(self) -> int:
        return self.boundaries.shape[0]


@dataclass(frozen=True)
class SymbolSeries:
    """Discretized series: integer symbols in [0, n_symbols), shape (K, L)."""

    symbols: np.ndarray
    n_symbols: int

    def __post_init__(self):
        if self.symbols.ndim != 2 or self.symbols.shape[1] == 0:
            raise DataError("symbol series must be a K x L matrix with L >= 1")
        if self.symbols.min() < 0 or self.symbols.max() >= self.n_symbols:
            raise DataError("symbol out of range [0, n_symbols)")


@dataclass
class SymbolVector:
    """Per-channel symbol counts plus, once normalized, the z-scored flat vector."""

    counts: np.ndarray                 # (K, n_symbols), non-negative integers
    normalized: np.ndarray | None = None  # (K * n_symbols,) floats

    @property
    def n_channels(self) -> int:
        return self.counts.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.counts.shape[1]


def fit_channel_stats(samples: Sequence["TimeSeriesSample"]) -> ChannelStats:
    """Population mean/std per channel over all time steps of all samples."""
    samples = list(samples)
    if not samples:
        raise DataError("cannot fit channel stats on an empty dataset")
    n_channels = samples[0].values.shape[0]
    for idx, sample in enumerate(samples):
        if sample.values.shape[0] != n_channels:
            raise DataError(
                f"sample {idx} has {sample.values.shape[0]} channels, expected {n_channels}"
            )
        if not np.all(np.isfinite(sample.values)):
            bad = np.argwhere(~np.isfinite(sample.values))[0]
            raise DataError(
                f"non-finite value in sample {idx}, channel {bad[0]}"
            )
    stacked = np.concatenate([s.values for s in samples], axis=1)
    return ChannelStats(mean=stacked.mean(axis=1), sigma=stacked.std(axis=1))


def make_cutlines(stats: ChannelStats, n_symbols: int) -> CutLines:
    """Equal-width boundaries spanning mean +- 3 sigma per channel.

    Boundary j is mean + (-3 sigma + 6 sigma / (n_symbols - 2) * j), giving
    n_symbols - 1 boundaries: n_symbols - 2 interior bins plus the two open
    outer regions.
    """
    if n_symbols < 3:
        raise DataError(f"n_symbols must be >= 3, got {n_symbols}")
    if not np.all(np.isfinite(stats.sigma)):
        raise DataError("non-finite sigma")
    if np.any(stats.sigma == 0):
        bad = int(np.argmax(stats.sigma == 0))
        raise DataError(
            f"channel {bad} has zero variance; drop or jitter it before cutline fitting"
        )
    offsets = -3.0 + (6.0 / (n_symbols - 2)) * np.arange(n_symbols - 1)
    boundaries = stats.mean[:, None] + stats.sigma[:, None] * offsets[None, :]
    return CutLines(n_symbols=n_symbols, boundaries=boundaries)


def discretize(sample: "TimeSeriesSample", cuts: CutLines) -> SymbolSeries:
    """Map each value to the count of boundaries strictly below it.

    A value equal to a boundary belongs to the lower-indexed region.
    """
    if sample.values.shape[0] != cuts.n_channels:
        raise DataError(
            f"sample has {sample.values.shape[0]} channels, cutlines have {cuts.n_channels}"
        )
    if not np.all(np.isfinite(sample.values)):
        raise DataError("non-finite value in sample")
    symbols = np.empty(sample.values.shape, dtype=np.int64)
    for k in range(cuts.n_channels):
        symbols[k] = np.searchsorted(cuts.boundaries[k], sample.values[k], side="left")
    return SymbolSeries(symbols=symbols, n_symbols=cuts.n_symbols)


def count_symbols(series: SymbolSeries) -> SymbolVector:
    """Tally symbols per channel, discarding time order."""
    n_channels = series.symbols.shape[0]
    counts = np.zeros((n_channels, series.n_symbols), dtype=np.int64)
    for k in range(n_channels):
        counts[k] = np.bincount(series.symbols[k], minlength=series.n_symbols)
    return SymbolVector(counts=counts)


def normalize_histogram(vec: SymbolVector) -> SymbolVector:
    """Z-score the flattened count vector of one sample.

    Uses the population standard deviation; an all-equal count vector maps to
    the zero vector.
    """
    flat = vec.counts.ravel().astype(np.float64)
    std = flat.std()
    if std == 0:
        normalized = np.zeros_like(flat)
    else:
        normalized = (flat - flat.mean()) / std
    return SymbolVector(counts=vec.counts, normalized=normalized)


def symbolize(sample: "TimeSeriesSample", cuts: CutLines) -> SymbolVector:
    """Full pipeline: discretize, count, normalize."""
    return normalize_histogram(count_symbols(discretize(sample, cuts)))
