"""Limiting laws of the windowed statistics.

The joint limit of the sliding-window deviances is an M-vector whose
i-th component is a sum of r squared standard normals, with Gaussian
cross-window correlation rho_{i,j} driven only by the bin counts and the
window length G:

    rho_{i,j} = (sum_{p=max(i,j)}^{min(i,j)+G-1} n_p)
                / sqrt(sum_{q=i}^{i+G-1} sum_{l=j}^{j+G-1} n_q n_l)

for |i-j| < G and exactly 0 otherwise.  ``sample_chi2_limit`` draws from
that law directly (one Cholesky factor of R reused for r independent
copies).  ``sample_chi2_limit_oracle`` draws from the alternative
representation in terms of score-limit Gaussians and the quadratic form
built from the information matrix; the two must agree in distribution,
which the test suite checks.  ``sample_mle_limit`` draws the Gaussian
limit of the scaled windowed MLEs (covariance blocks rho_{i,j} I^-1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, SingularWindowError
from .rng import GENERATOR_ID, run_chunked


@dataclass(frozen=True)
class CorrelationMatrix:
    """Banded M x M correlation matrix of the window statistics."""

    G: int
    counts: tuple[int, ...]
    rho: np.ndarray
    zero_count_bins: tuple[int, ...] = ()

    @property
    def P(self) -> int:
        return len(self.counts)

    @property
    def M(self) -> int:
        return self.rho.shape[0]

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor, with an escalating diagonal jitter fallback."""
        return _cholesky_with_jitter(self.rho)


def _cholesky_with_jitter(mat: np.ndarray) -> np.ndarray:
    scale = float(np.trace(mat)) / mat.shape[0]
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(
                mat if jitter == 0.0 else mat + jitter * scale * np.eye(mat.shape[0])
            )
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = 1e-12
            elif jitter < 1e-8:
                jitter *= 10.0
            else:
                raise NumericalError(
                    "Cholesky failed even with maximal diagonal jitter"
                ) from None


def correlation_matrix(counts, G: int) -> CorrelationMatrix:
    """Build the banded correlation matrix from bin counts and window length."""
    n = np.asarray(counts, dtype=float)
    if n.ndim != 1 or n.size < 1:
        raise ValueError("counts must be a non-empty vector")
    if np.any(n < 0):
        raise ValueError("counts must be non-negative")
    P = n.size
    if not 1 <= G <= P:
        raise ValueError("need 1 <= G <= P")
    M = P - G + 1
    csum = np.concatenate([[0.0], np.cumsum(n)])

    def span(a: int, b: int) -> float:
        # sum of counts over 1-based bins a..b inclusive
        return csum[b] - csum[a - 1]

    win = np.array([span(i, i + G - 1) for i in range(1, M + 1)])
    if np.any(win <= 0):
        bad = int(np.flatnonzero(win <= 0)[0]) + 1
        raise SingularWindowError(f"window {bad} holds zero observations")
    rho = np.zeros((M, M))
    for i in range(1, M + 1):
        rho[i - 1, i - 1] = 1.0
        for j in range(i + 1, min(i + G, M + 1)):
            a, b = j, i + G - 1  # max(i,j), min(i,j)+G-1 for j > i
            val = span(a, b) / np.sqrt(win[i - 1] * win[j - 1])
            rho[i - 1, j - 1] = rho[j - 1, i - 1] = val
    zero_bins = tuple(int(p) + 1 for p in np.flatnonzero(n == 0))
    return CorrelationMatrix(
        G=G,
        counts=tuple(int(v) for v in n),
        rho=rho,
        zero_count_bins=zero_bins,
    )


@dataclass(frozen=True)
class LimitSampleBatch:
    """A batch of Monte Carlo draws from one of the limiting laws."""

    kind: str  # "chi2-vector" | "mle-gaussian"
    draws: np.ndarray  # (count, M) or (count, d*M)
    seed: int
    generator: str = GENERATOR_ID

    @property
    def count(self) -> int:
        return self.draws.shape[0]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"c{j+1}" for j in range(self.draws.shape[1])])
            for row in self.draws:
                writer.writerow([repr(float(v)) for v in row])


def sample_chi2_limit(
    R: CorrelationMatrix, r: int, count: int, seed: int, threads: int = 0
) -> LimitSampleBatch:
    """Draw (sum_h Z_{h,1}^2, ..., sum_h Z_{h,M}^2) with Cov(Z_{h,i}, Z_{h,j}) = rho_{i,j}.

    The r copies of the correlated Gaussian M-vector are independent, so a
    single M x M Cholesky factor is reused; no rM x rM factorization.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    L = R.cholesky()
    M = R.M

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, r, M))
        y = z @ L.T
        return np.einsum("nrm,nrm->nm", y, y)

    parts = run_chunked(draw, seed, count, threads)
    draws = np.concatenate(parts) if parts else np.empty((0, M))
    return LimitSampleBatch(kind="chi2-vector", draws=draws, seed=seed)


def null_quadratic_form(info: np.ndarray, r: int) -> np.ndarray:
    """Quadratic-form matrix of the alternative chi-squared representation.

    ``info`` is the information matrix with the r constrained coordinates
    first.  With H zero except for the inverse of the lower-right free
    block, the matrix is (Id - info H)' info^-1 (Id - info H), which
    algebraically equals info^-1 - H.
    """
    info = np.asarray(info, dtype=float)
    d = info.shape[0]
    if info.shape != (d, d) or not 1 <= r <= d:
        raise ValueError("need a square information matrix and 1 <= r <= d")
    H = np.zeros((d, d))
    if r < d:
        free = info[r:, r:]
        try:
            H[r:, r:] = np.linalg.inv(free)
        except np.linalg.LinAlgError:
            raise NumericalError("free-block of the information matrix is singular")
    W = np.eye(d) - info @ H
    return W.T @ np.linalg.inv(info) @ W


def sample_chi2_limit_oracle(
    R: CorrelationMatrix,
    info: np.ndarray,
    r: int,
    count: int,
    seed: int,
    threads: int = 0,
) -> LimitSampleBatch:
    """Draw the chi-squared limit via its score-Gaussian representation.

    (G_1, ..., G_M) is Gaussian with covariance blocks rho_{i,j} * info and
    the i-th output component is G_i' Q G_i with Q from
    ``null_quadratic_form``.  Distributionally identical to
    ``sample_chi2_limit``; kept as an independent cross-check.
    """
    info = np.asarray(info, dtype=float)
    Q = null_quadratic_form(info, r)
    A = R.cholesky()
    B = _cholesky_with_jitter(info)
    M = R.M

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, M, info.shape[0]))
        g = np.einsum("ik,nkb->nib", A, z) @ B.T
        return np.einsum("nia,ab,nib->ni", g, Q, g)

    parts = run_chunked(draw, seed, count, threads)
    draws = np.concatenate(parts) if parts else np.empty((0, M))
    return LimitSampleBatch(kind="chi2-vector", draws=draws, seed=seed)


def sample_mle_limit(
    R: CorrelationMatrix,
    info_inverse: np.ndarray,
    count: int,
    seed: int,
    threads: int = 0,
) -> LimitSampleBatch:
    """Draw the dM-dimensional Gaussian limit of the scaled windowed MLEs.

    Covariance block (i, j) is rho_{i,j} * info_inverse; draws are laid out
    window-major, column i*d + a holding coordinate a of window i+1.
    """
    info_inverse = np.asarray(info_inverse, dtype=float)
    d = info_inverse.shape[0]
    A = R.cholesky()
    B = _cholesky_with_jitter(info_inverse)
    M = R.M

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, M, d))
        g = np.einsum("ik,nkb->nib", A, z) @ B.T
        return g.reshape(size, M * d)

    parts = run_chunked(draw, seed, count, threads)
    draws = np.concatenate(parts) if parts else np.empty((0, M * d))
    return LimitSampleBatch(kind="mle-gaussian", draws=draws, seed=seed)


def spaced_exceedance(draws: np.ndarray, c: float, G: int, k: int) -> np.ndarray:
    """Greedy per-draw test for k components above c at index spacing >= G.

    The greedy left-to-right scan (take the earliest qualifying index, then
    the earliest one at least G later, ...) decides existence exactly.
    """
    n, M = draws.shape
    taken = np.zeros(n, dtype=np.int64)
    next_ok = np.zeros(n, dtype=np.int64)
    for i in range(M):
        pick = (draws[:, i] > c) & (next_ok <= i) & (taken < k)
        taken[pick] += 1
        next_ok[pick] = i + G
    return taken >= k


@dataclass(frozen=True)
class RejectionEstimate:
    """Monte Carlo probability estimate with its binomial standard error."""

    estimate: float
    se: float
    count: int

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "se": self.se, "count": self.count}


def rejection_probability(
    R: CorrelationMatrix,
    r: int,
    c: float,
    k: int,
    G: int,
    count: int,
    seed: int,
    threads: int = 0,
) -> RejectionEstimate:
    """P(k spaced components of the chi-squared limit exceed c), by Monte Carlo."""
    if c < 0:
        raise ValueError("threshold c must be >= 0")
    if not 1 <= k <= R.M:
        raise ValueError("need 1 <= k <= M")
    batch = sample_chi2_limit(R, r, count, seed, threads)
    hits = spaced_exceedance(batch.draws, c, G, k)
    p = float(np.mean(hits)) if count else float("nan")
    se = float(np.sqrt(p * (1.0 - p) / count)) if count else float("nan")
    return RejectionEstimate(estimate=p, se=se, count=count)
