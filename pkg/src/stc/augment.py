"""View augmentations: Gaussian jitter for the raw series, count-mass edits
(insertion/deletion of single symbol occurrences) for the histogram."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .symbolize import ChannelStats, SymbolVector, normalize_histogram


@dataclass(frozen=True)
class AugmentConfig:
    jitter_sigma: float = 0.1       # noise std as a fraction of per-channel sigma
    symbol_edit_rate: float = 0.02  # fraction of total count mass edited
    seed: int = 0

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise DataError("jitter_sigma must be >= 0")
        if not 0.0 <= self.symbol_edit_rate <= 1.0:
            raise DataError("symbol_edit_rate must be in [0, 1]")


def jitter(sample, stats: ChannelStats, cfg: AugmentConfig, rng: np.random.Generator):
    """Add independent Gaussian noise with std jitter_sigma * sigma_channel."""
    if cfg.jitter_sigma == 0:
        return replace(sample, values=sample.values.copy())
    noise = rng.standard_normal(sample.values.shape)
    noise *= cfg.jitter_sigma * stats.sigma[:, None]
    return replace(sample, values=sample.values + noise)


def perturb_symbols(
    vec: SymbolVector, cfg: AugmentConfig, rng: np.random.Generator
) -> SymbolVector:
    """Apply m = round(rate * total count) single-count edits to the raw counts.

    Each edit increments a uniform (channel, symbol) cell or decrements a
    uniform nonzero cell with probability 1/2 each; deletion with no mass left
    degrades to insertion. The result is re-normalized.
    """
    counts = vec.counts.copy()
    n_channels, n_symbols = counts.shape
    n_edits = int(round(cfg.symbol_edit_rate * counts.sum()))
    for _ in range(n_edits):
        insert = rng.random() < 0.5
        if not insert:
            nonzero = np.argwhere(counts > 0)
            if len(nonzero) == 0:
                insert = True
            else:
                k, j = nonzero[rng.integers(len(nonzero))]
                counts[k, j] -= 1
        if insert:
            counts[rng.integers(n_channels), rng.integers(n_symbols)] += 1
    return normalize_histogram(SymbolVector(counts=counts))
