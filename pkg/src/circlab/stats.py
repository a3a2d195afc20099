"""Resampling helpers shared by the verification suites.

Statistics in this package depend on the data only through a histogram
(integer counts, sign/bin cells), so the nonparametric bootstrap is done by
drawing multinomial cell counts, which has the same law as resampling
observations with replacement and costs O(cells) per replicate.
"""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

DEFAULT_RESAMPLES = 1000
DEFAULT_ALPHA = 0.01


class Histogram:
    """Cell counts of a discrete sample, with multinomial bootstrap replicates."""

    def __init__(self, cells, counts):
        self.cells = np.asarray(cells)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.n = int(self.counts.sum())

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values)
        if values.ndim == 1:
            cells, counts = np.unique(values, return_counts=True)
        else:
            cells, counts = np.unique(values, axis=0, return_counts=True)
        return cls(cells, counts)

    @property
    def probabilities(self):
        return self.counts / self.n

    def replicates(self, rng, n_resamples=DEFAULT_RESAMPLES):
        """Bootstrap cell counts, shape ``(n_resamples, n_cells)``."""
        return rng.multinomial(self.n, self.probabilities, size=n_resamples)

    def index(self, cell):
        """Position of ``cell`` in ``self.cells`` or -1."""
        if self.cells.ndim == 1:
            i = np.searchsorted(self.cells, cell)
            return int(i) if i < self.cells.size and self.cells[i] == cell else -1
        hits = np.nonzero(np.all(self.cells == np.asarray(cell), axis=1))[0]
        return int(hits[0]) if hits.size else -1


def bonferroni_z(alpha, m):
    """Two-sided normal quantile for family-wise level ``alpha`` over ``m`` tests."""
    return float(sps.norm.isf(alpha / (2 * max(m, 1))))


def normal_interval(estimate, replicates, alpha=DEFAULT_ALPHA, m=1):
    """``estimate +- z * bootstrap SE`` with Bonferroni over ``m`` intervals."""
    se = np.std(replicates, axis=0, ddof=1)
    z = bonferroni_z(alpha, m)
    return estimate - z * se, estimate + z * se, se


def percentile_interval(replicates, alpha=DEFAULT_ALPHA):
    lo, hi = np.quantile(replicates, [alpha / 2, 1 - alpha / 2], axis=0)
    return lo, hi


def mean_exp(values_hist, weights, counts=None):
    """Mean of ``exp(weights . cell)`` from histogram counts (vectorised over rows)."""
    cells = values_hist.cells
    e = np.exp(cells @ np.atleast_1d(weights) if cells.ndim > 1 else cells * weights)
    counts = values_hist.counts if counts is None else counts
    return counts @ e / values_hist.n


def ks_two_sample(x, y):
    """Two-sample KS: exact p-value up to 10^4 per sample, asymptotic beyond."""
    method = "exact" if max(len(x), len(y)) <= 10_000 else "asymp"
    res = sps.ks_2samp(x, y, method=method)
    return float(res.statistic), float(res.pvalue)


def two_proportion_test(k1, n1, k2, n2):
    """Two-sided z-test for equal proportions; returns ``(z, p)``."""
    p = (k1 + k2) / (n1 + n2)
    if p in (0.0, 1.0):
        return 0.0, 1.0
    se = np.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    z = (k1 / n1 - k2 / n2) / se
    return float(z), float(2 * sps.norm.sf(abs(z)))
