"""Rejection rules, the exact type-I error of the disjoint procedure, and
threshold calibration.

Both procedures reject when at least k likelihood ratios fall strictly
below alpha; the sliding procedure additionally requires the chosen
window indices to be at least G apart.  Skipped windows never count.
The disjoint procedure's size is the binomial tail
``pi(k, alpha) = sum_{h>=k} C(N,h) p^h (1-p)^{N-h}`` with
``p = P(chi2_r > -2 log alpha)``; the sliding procedure's size comes from
Monte Carlo under the correlated chi-squared limit law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .errors import CalibrationError
from .limitlaw import CorrelationMatrix, RejectionEstimate, sample_chi2_limit, spaced_exceedance
from .lrstats import LrVector


def chi2_tail(c: float, r: int) -> float:
    """Upper tail P(chi2_r > c) via the regularized incomplete gamma."""
    if c < 0:
        return 1.0
    return float(gammaincc(r / 2.0, c / 2.0))


def chi2_quantile(p: float, r: int) -> float:
    """c with P(chi2_r > c) = p."""
    from scipy.special import gammainccinv

    return float(2.0 * gammainccinv(r / 2.0, p))


def binomial_at_least(N: int, k: int, p: float) -> float:
    """P(Binomial(N, p) >= k) by direct summation."""
    return float(sum(math.comb(N, h) * p**h * (1.0 - p) ** (N - h) for h in range(k, N + 1)))


def alpha_to_c(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return -2.0 * math.log(alpha)


def c_to_alpha(c: float) -> float:
    if c < 0:
        raise ValueError("threshold c must be >= 0")
    return math.exp(-0.5 * c)


@dataclass(frozen=True)
class DecisionConfig:
    """Threshold alpha (equivalently c = -2 log alpha), count k, window length G."""

    alpha: float
    k: int
    G: int
    kind: str = "sliding"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.kind not in ("standard", "sliding"):
            raise ValueError("kind must be 'standard' or 'sliding'")

    @property
    def c(self) -> float:
        return alpha_to_c(self.alpha)


@dataclass
class DecisionReport:
    """Outcome of one rejection rule on one LR vector."""

    kind: str
    verdict: str  # "reject" | "retain"
    witness: tuple[int, ...]  # 1-based window indices, empty when retained
    lam: tuple[float, ...]
    xi: tuple[float, ...]
    skipped: tuple[int, ...]  # 1-based indices of skipped windows
    alpha: float
    k: int
    G: int
    level_estimate: float | None = None
    level_se: float | None = None
    provenance: str | None = None  # "binomial" | "mc"
    clamped: int = 0
    simple_null: bool = False

    @property
    def c(self) -> float:
        return alpha_to_c(self.alpha)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": self.verdict,
            "witness": list(self.witness),
            "lambda": [None if math.isnan(v) else v for v in self.lam],
            "xi": [None if math.isnan(v) else v for v in self.xi],
            "skipped": list(self.skipped),
            "alpha": self.alpha,
            "c": self.c,
            "k": self.k,
            "G": self.G,
            "level_estimate": self.level_estimate,
            "level_se": self.level_se,
            "provenance": self.provenance,
            "clamped": self.clamped,
            "simple_null": self.simple_null,
        }


def _sub_alpha_indices(lr: LrVector, alpha: float) -> list[int]:
    """0-based indices of usable windows with lambda strictly below alpha."""
    ok = ~lr.skipped & (lr.lam < alpha)
    return [int(i) for i in np.flatnonzero(ok)]


def greedy_spaced_witness(indices: list[int], k: int, G: int) -> tuple[int, ...] | None:
    """Earliest k members of ``indices`` with consecutive gaps >= G, or None.

    Greedy selection is exact for a spacing constraint: any feasible
    selection can be shifted index-by-index onto the greedy one.
    """
    chosen: list[int] = []
    next_ok = -(10**9)
    for i in indices:
        if i >= next_ok:
            chosen.append(i)
            next_ok = i + G
            if len(chosen) == k:
                return tuple(chosen)
    return None


def reject_standard(
    lr: LrVector,
    alpha: float,
    k: int,
    *,
    level_estimate: float | None = None,
    level_se: float | None = None,
    provenance: str | None = None,
    simple_null: bool = False,
) -> DecisionReport:
    """Reject when at least k disjoint-window ratios fall strictly below alpha."""
    if lr.kind != "standard":
        raise ValueError("reject_standard expects a standard LrVector")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = _sub_alpha_indices(lr, alpha)
    reject = len(hits) >= k
    witness = tuple(i + 1 for i in hits[:k]) if reject else ()
    return DecisionReport(
        kind="standard",
        verdict="reject" if reject else "retain",
        witness=witness,
        lam=tuple(float(v) for v in lr.lam),
        xi=tuple(float(v) for v in lr.xi),
        skipped=lr.skipped_indices,
        alpha=alpha,
        k=k,
        G=lr.G,
        level_estimate=level_estimate,
        level_se=level_se,
        provenance=provenance,
        clamped=lr.clamped,
        simple_null=simple_null,
    )


def reject_new(
    lr: LrVector,
    alpha: float,
    k: int,
    G: int | None = None,
    *,
    level_estimate: float | None = None,
    level_se: float | None = None,
    provenance: str | None = None,
    simple_null: bool = False,
) -> DecisionReport:
    """Reject when k sliding-window ratios below alpha exist at spacing >= G."""
    if lr.kind != "sliding":
        raise ValueError("reject_new expects a sliding LrVector")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be >= 1")
    G = lr.G if G is None else G
    witness0 = greedy_spaced_witness(_sub_alpha_indices(lr, alpha), k, G)
    return DecisionReport(
        kind="sliding",
        verdict="reject" if witness0 is not None else "retain",
        witness=tuple(i + 1 for i in witness0) if witness0 is not None else (),
        lam=tuple(float(v) for v in lr.lam),
        xi=tuple(float(v) for v in lr.xi),
        skipped=lr.skipped_indices,
        alpha=alpha,
        k=k,
        G=G,
        level_estimate=level_estimate,
        level_se=level_se,
        provenance=provenance,
        clamped=lr.clamped,
        simple_null=simple_null,
    )


def type1_standard(N: int, k: int, alpha: float, r: int) -> float:
    """Exact size of the disjoint procedure under the classical chi-squared limit."""
    if not 1 <= k <= N:
        raise ValueError("need 1 <= k <= N")
    p = chi2_tail(alpha_to_c(alpha), r)
    return binomial_at_least(N, k, p)


def type1_new(
    R: CorrelationMatrix,
    r: int,
    alpha: float,
    k: int,
    G: int,
    count: int,
    seed: int,
    threads: int = 0,
) -> RejectionEstimate:
    """Monte Carlo size of the sliding procedure under the correlated limit law."""
    from .limitlaw import rejection_probability

    return rejection_probability(R, r, alpha_to_c(alpha), k, G, count, seed, threads)


@dataclass
class CalibrationResult:
    """Calibrated threshold with the bisection trace."""

    alpha: float
    c: float
    level: float
    k: int
    method: str  # "binomial" | "mc"
    achieved: float
    achieved_se: float = 0.0
    trace: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "level": self.level,
            "k": self.k,
            "method": self.method,
            "achieved": self.achieved,
            "achieved_se": self.achieved_se,
            "trace": self.trace,
        }


C_BRACKET = (0.0, 200.0)


def calibrate_alpha(
    level: float,
    k: int,
    *,
    procedure: str,
    N: int | None = None,
    r: int = 1,
    R: CorrelationMatrix | None = None,
    G: int | None = None,
    count: int = 100_000,
    seed: int | None = None,
    threads: int = 0,
) -> CalibrationResult:
    """Solve for alpha giving the requested type-I error.

    Bisection on c in [0, 200].  The disjoint procedure uses the exact
    binomial formula (tolerance 1e-10 on the level); the sliding one
    reuses a single Monte Carlo batch across all bisection steps (common
    random numbers) and stops once within two standard errors.
    """
    if not 0.0 < level < 1.0:
        raise CalibrationError("target level must lie in (0, 1)")
    if k < 1:
        raise CalibrationError("k must be >= 1")
    lo, hi = C_BRACKET
    trace: list[dict] = []

    if procedure == "standard":
        if N is None or N < k:
            raise CalibrationError("standard calibration needs N >= k")

        def size_at(c: float) -> tuple[float, float]:
            return binomial_at_least(N, k, chi2_tail(c, r)), 0.0

        tol = 1e-10
        method = "binomial"
    elif procedure == "sliding":
        if R is None or G is None:
            raise CalibrationError("sliding calibration needs R and G")
        if seed is None:
            raise CalibrationError("sliding calibration needs a seed")
        if not 1 <= k <= R.M:
            raise CalibrationError("need 1 <= k <= M")
        batch = sample_chi2_limit(R, r, count, seed, threads)

        def size_at(c: float) -> tuple[float, float]:
            p = float(np.mean(spaced_exceedance(batch.draws, c, G, k)))
            return p, float(np.sqrt(max(p * (1.0 - p), 1e-12) / count))

        tol = None  # stop at 2 s.e. instead
        method = "mc"
    else:
        raise CalibrationError("procedure must be 'standard' or 'sliding'")

    p_lo, se_lo = size_at(lo)
    p_hi, se_hi = size_at(hi)
    if p_lo < level - (2 * se_lo if tol is None else tol):
        raise CalibrationError(
            f"level {level} unreachable: size at c = {lo} is only {p_lo:.4g}"
        )
    if p_hi > level + (2 * se_hi if tol is None else tol):
        raise CalibrationError(
            f"level {level} unreachable: size at c = {hi} is still {p_hi:.4g}"
        )

    c_mid, p_mid, se_mid = lo, p_lo, se_lo
    for _ in range(200):
        c_mid = 0.5 * (lo + hi)
        p_mid, se_mid = size_at(c_mid)
        trace.append({"c": c_mid, "size": p_mid, "se": se_mid})
        if tol is not None:
            if abs(p_mid - level) <= tol:
                break
        else:
            if abs(p_mid - level) <= 2.0 * se_mid and hi - lo < 0.05:
                break
        if p_mid > level:
            lo = c_mid
        else:
            hi = c_mid
        if hi - lo < 1e-12:
            break
    return CalibrationResult(
        alpha=c_to_alpha(c_mid),
        c=c_mid,
        level=level,
        k=k,
        method=method,
        achieved=p_mid,
        achieved_se=se_mid,
        trace=trace,
    )
