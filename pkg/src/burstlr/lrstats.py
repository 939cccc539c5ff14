"""Likelihood-ratio statistics over disjoint and sliding windows.

A window pools ``G`` consecutive bins.  The disjoint layout gives
``N = P/G`` independent statistics (it requires ``G | P``); the sliding
layout gives ``M = P - G + 1`` overlapping ones, window ``i`` covering
bins ``i .. i+G-1``.  Each statistic is computed on the log scale:
``xi = 2 * (loglik(full MLE) - loglik(restricted MLE))`` first, then
``lambda = exp(-xi/2)``, so long windows cannot underflow.

Pooled window data are sorted before estimation, which makes the results
exactly invariant under within-bin permutations and makes the sliding
vector agree bit-for-bit with the disjoint vector on shared windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import BinnedDataset
from .errors import DegenerateDataError, InvariantViolationError
from .families import Family, NullSpec, log_likelihood, mle_full, mle_restricted

XI_CLAMP = -1e-7
LAMBDA_UPPER_SLACK = 1e-12


@dataclass(frozen=True)
class WindowIndexing:
    """Window bookkeeping: M sliding windows always, N disjoint ones when G | P."""

    P: int
    G: int

    def __post_init__(self):
        if not 1 <= self.G <= self.P:
            raise ValueError("need 1 <= G <= P")

    @property
    def M(self) -> int:
        return self.P - self.G + 1

    @property
    def N(self) -> int | None:
        return self.P // self.G if self.P % self.G == 0 else None

    def standard_bins(self, i: int) -> tuple[int, int]:
        """1-based inclusive bin range of disjoint window i."""
        return (i - 1) * self.G + 1, i * self.G

    def sliding_bins(self, i: int) -> tuple[int, int]:
        """1-based inclusive bin range of sliding window i."""
        return i, i + self.G - 1


@dataclass
class LrVector:
    """Per-window likelihood ratios with their MLEs and skip flags."""

    kind: str  # "standard" | "sliding"
    P: int
    G: int
    lam: np.ndarray
    xi: np.ndarray
    skipped: np.ndarray  # bool per window
    window_bins: list[tuple[int, int]]
    theta_full: list[np.ndarray | None]
    theta_restricted: list[np.ndarray | None]
    clamped: int

    def __len__(self) -> int:
        return self.lam.size

    @property
    def skipped_indices(self) -> tuple[int, ...]:
        """1-based indices of skipped windows."""
        return tuple(int(i) + 1 for i in np.flatnonzero(self.skipped))


def xi_from_lambda(values) -> np.ndarray:
    """Elementwise -2 log(lambda); rejects ratios outside (0, 1]."""
    arr = np.asarray(values, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > 1.0 + LAMBDA_UPPER_SLACK):
        raise InvariantViolationError(
            "likelihood ratios must lie in (0, 1]; got values outside"
        )
    return -2.0 * np.log(np.minimum(arr, 1.0))


def _window_statistic(model: Family, null: NullSpec, pooled: np.ndarray):
    """(lambda, xi, theta_hat, theta_star) for one window's pooled data."""
    theta_hat = mle_full(model, pooled)
    theta_star = mle_restricted(model, null, pooled)
    ll_hat = log_likelihood(model, pooled, theta_hat)
    ll_star = log_likelihood(model, pooled, theta_star)
    xi = 2.0 * (ll_hat - ll_star)
    clamped = 0
    if xi < 0.0:
        if xi < XI_CLAMP:
            raise InvariantViolationError(
                f"restricted likelihood exceeds full likelihood (xi = {xi:.3e})"
            )
        xi = 0.0
        clamped = 1
    lam = float(np.exp(-0.5 * xi))
    return lam, xi, theta_hat, theta_star, clamped


def _lr_vector(
    data: BinnedDataset,
    model: Family,
    null: NullSpec,
    kind: str,
    windows: list[tuple[int, int]],
) -> LrVector:
    n = len(windows)
    lam = np.full(n, np.nan)
    xi = np.full(n, np.nan)
    skipped = np.zeros(n, dtype=bool)
    theta_full: list[np.ndarray | None] = [None] * n
    theta_restricted: list[np.ndarray | None] = [None] * n
    clamped = 0
    for w, (first, last) in enumerate(windows):
        pooled = data.pooled(first, last)
        if pooled.size == 0:
            skipped[w] = True
            continue
        pooled = np.sort(pooled)
        try:
            lam[w], xi[w], theta_full[w], theta_restricted[w], c = _window_statistic(
                model, null, pooled
            )
        except DegenerateDataError:
            skipped[w] = True
            continue
        clamped += c
    return LrVector(
        kind=kind,
        P=data.P,
        G=windows[0][1] - windows[0][0] + 1 if windows else 0,
        lam=lam,
        xi=xi,
        skipped=skipped,
        window_bins=windows,
        theta_full=theta_full,
        theta_restricted=theta_restricted,
        clamped=clamped,
    )


def lambda_standard(data: BinnedDataset, model: Family, null: NullSpec, G: int) -> LrVector:
    """Disjoint-window statistics; window i pools bins (i-1)G+1 .. iG."""
    idx = WindowIndexing(data.P, G)
    if idx.N is None:
        raise ValueError(f"standard windows require G | P (P = {data.P}, G = {G})")
    windows = [idx.standard_bins(i) for i in range(1, idx.N + 1)]
    return _lr_vector(data, model, null, "standard", windows)


def lambda_new(data: BinnedDataset, model: Family, null: NullSpec, G: int) -> LrVector:
    """Sliding-window statistics; window i pools bins i .. i+G-1, i = 1..M."""
    idx = WindowIndexing(data.P, G)
    windows = [idx.sliding_bins(i) for i in range(1, idx.M + 1)]
    return _lr_vector(data, model, null, "sliding", windows)
