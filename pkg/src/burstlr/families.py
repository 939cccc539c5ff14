"""Regular parametric families with full and restricted maximum likelihood.

Four families are supported: Poisson rate, Gaussian mean with known
variance, Gaussian mean-and-variance, and Exponential rate.  Each one
exposes a vectorized log-density, analytic score and Fisher information,
a sampler, and closed-form estimators; a generic Fisher-scoring solver
covers the same ground for cross-checking and for null hypotheses
without a closed form.

Null hypotheses fix a subset of coordinates at given values.  The free
dimension must stay positive except in the one-parameter families, where
a fully-fixed (simple) null is accepted as a documented extension and
flagged in downstream reports.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DegenerateDataError, DomainError, SupportError

Array = np.ndarray

_INT_TOL = 1e-9


@dataclass(frozen=True)
class NullSpec:
    """Coordinate-fixing null hypothesis: theta[i] = value for i in fixed_indices.

    ``r = len(fixed_indices)`` is the number of constraints and the degrees
    of freedom of the limiting chi-squared law.  ``r == d`` (a simple null)
    is only allowed for one-parameter families and is reported as such.
    """

    d: int
    fixed_indices: tuple[int, ...]
    fixed_values: tuple[float, ...]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("model dimension must be >= 1")
        idx = self.fixed_indices
        if len(idx) != len(self.fixed_values):
            raise ValueError("fixed_indices and fixed_values length mismatch")
        if len(set(idx)) != len(idx):
            raise ValueError("fixed_indices must be distinct")
        if any(i < 0 or i >= self.d for i in idx):
            raise ValueError("fixed index out of range")
        r = len(idx)
        if r < 1:
            raise ValueError("a null must fix at least one coordinate")
        if r >= self.d and self.d > 1:
            raise ValueError(
                "null fixes all coordinates (r = d); only supported for d = 1"
            )

    @property
    def r(self) -> int:
        return len(self.fixed_indices)

    @property
    def s(self) -> int:
        return self.d - self.r

    @property
    def is_simple(self) -> bool:
        """True for the d = 1, r = 1 simple-null extension."""
        return self.r == self.d

    @property
    def free_indices(self) -> tuple[int, ...]:
        fixed = set(self.fixed_indices)
        return tuple(i for i in range(self.d) if i not in fixed)

    def embed(self, free_values: Array) -> Array:
        """Assemble a full parameter vector from values of the free coordinates."""
        theta = np.empty(self.d)
        for i, v in zip(self.fixed_indices, self.fixed_values):
            theta[i] = v
        for i, v in zip(self.free_indices, np.atleast_1d(free_values)):
            theta[i] = v
        return theta

    def fixed_first_permutation(self) -> tuple[int, ...]:
        """Coordinate order placing fixed indices first (used by the limit-law oracle)."""
        return tuple(self.fixed_indices) + self.free_indices


class Family(ABC):
    """Interface of a regular parametric family."""

    name: str
    param_names: tuple[str, ...]

    @property
    def d(self) -> int:
        return len(self.param_names)

    @abstractmethod
    def in_domain(self, theta: Array) -> bool: ...

    @abstractmethod
    def support_ok(self, x: Array) -> Array: ...

    @abstractmethod
    def logpdf(self, x: Array, theta: Array) -> Array: ...

    @abstractmethod
    def score(self, x: Array, theta: Array) -> Array: ...

    @abstractmethod
    def fisher_information(self, theta: Array) -> Array: ...

    @abstractmethod
    def sample(self, theta: Array, size: int, rng: np.random.Generator) -> Array: ...

    @abstractmethod
    def mom_estimate(self, data: Array) -> Array: ...

    def mle_closed(self, data: Array) -> Array | None:
        return None

    def restricted_mle_closed(self, null: NullSpec, data: Array) -> Array | None:
        return None

    def check_degenerate(self, data: Array) -> None:
        """Raise DegenerateDataError when the full MLE would leave the domain."""

    # -- validation helpers -------------------------------------------------

    def as_theta(self, theta) -> Array:
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        if arr.shape != (self.d,):
            raise DomainError(
                f"{self.name}: expected {self.d} parameter(s), got shape {arr.shape}"
            )
        if not self.in_domain(arr):
            raise DomainError(f"{self.name}: parameter {arr.tolist()} outside domain")
        return arr

    def as_data(self, x) -> Array:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        ok = self.support_ok(arr)
        if not np.all(ok):
            bad = arr[~ok][:3]
            raise SupportError(f"{self.name}: observations outside support: {bad.tolist()}")
        return arr

    def null(self, **fixed: float) -> NullSpec:
        """Build a NullSpec from parameter names, e.g. ``family.null(mean=0.0)``."""
        indices, values = [], []
        for name, value in fixed.items():
            if name not in self.param_names:
                raise ValueError(f"{self.name}: unknown parameter {name!r}")
            indices.append(self.param_names.index(name))
            values.append(float(value))
        order = np.argsort(indices)
        return NullSpec(
            d=self.d,
            fixed_indices=tuple(int(indices[i]) for i in order),
            fixed_values=tuple(values[i] for i in order),
        )


@dataclass(frozen=True)
class Poisson(Family):
    """Poisson counts with rate parameter."""

    name: str = "poisson"
    param_names: tuple[str, ...] = ("rate",)

    def in_domain(self, theta):
        return bool(theta[0] > 0)

    def support_ok(self, x):
        return (x >= 0) & (np.abs(x - np.round(x)) <= _INT_TOL)

    def logpdf(self, x, theta):
        lam = theta[0]
        return x * np.log(lam) - lam - gammaln(x + 1.0)

    def score(self, x, theta):
        lam = theta[0]
        return (x / lam - 1.0)[:, None]

    def fisher_information(self, theta):
        return np.array([[1.0 / theta[0]]])

    def sample(self, theta, size, rng):
        return rng.poisson(theta[0], size).astype(float)

    def mom_estimate(self, data):
        return np.array([max(float(np.mean(data)), 1e-8)])

    def mle_closed(self, data):
        return np.array([float(np.mean(data))])

    def check_degenerate(self, data):
        if float(np.mean(data)) <= 0.0:
            raise DegenerateDataError("poisson: all observations zero, MLE on boundary")


@dataclass(frozen=True)
class GaussianKnownVariance(Family):
    """Gaussian mean with a fixed, known standard deviation."""

    sigma: float = 1.0
    name: str = "gaussian-known"
    param_names: tuple[str, ...] = ("mean",)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def in_domain(self, theta):
        return bool(np.isfinite(theta[0]))

    def support_ok(self, x):
        return np.isfinite(x)

    def logpdf(self, x, theta):
        z = (x - theta[0]) / self.sigma
        return -0.5 * np.log(2.0 * np.pi * self.sigma**2) - 0.5 * z * z

    def score(self, x, theta):
        return ((x - theta[0]) / self.sigma**2)[:, None]

    def fisher_information(self, theta):
        return np.array([[1.0 / self.sigma**2]])

    def sample(self, theta, size, rng):
        return rng.normal(theta[0], self.sigma, size)

    def mom_estimate(self, data):
        return np.array([float(np.mean(data))])

    def mle_closed(self, data):
        return np.array([float(np.mean(data))])


@dataclass(frozen=True)
class GaussianMeanVariance(Family):
    """Gaussian with unknown mean and variance, theta = (mean, variance)."""

    name: str = "gaussian"
    param_names: tuple[str, ...] = ("mean", "variance")

    def in_domain(self, theta):
        return bool(np.isfinite(theta[0]) and theta[1] > 0)

    def support_ok(self, x):
        return np.isfinite(x)

    def logpdf(self, x, theta):
        mu, var = theta
        return -0.5 * np.log(2.0 * np.pi * var) - 0.5 * (x - mu) ** 2 / var

    def score(self, x, theta):
        mu, var = theta
        dev = x - mu
        return np.stack([dev / var, -0.5 / var + 0.5 * dev**2 / var**2], axis=1)

    def fisher_information(self, theta):
        var = theta[1]
        return np.diag([1.0 / var, 0.5 / var**2])

    def sample(self, theta, size, rng):
        return rng.normal(theta[0], np.sqrt(theta[1]), size)

    def mom_estimate(self, data):
        var = float(np.var(data))
        return np.array([float(np.mean(data)), max(var, 1e-8)])

    def mle_closed(self, data):
        mu = float(np.mean(data))
        var = float(np.mean((data - mu) ** 2))
        return np.array([mu, var])

    def restricted_mle_closed(self, null, data):
        if null.fixed_indices == (0,):
            mu0 = null.fixed_values[0]
            var = float(np.mean((data - mu0) ** 2))
            if var <= 0.0:
                raise DegenerateDataError(
                    "gaussian: zero variance about the fixed mean"
                )
            return np.array([mu0, var])
        if null.fixed_indices == (1,):
            return np.array([float(np.mean(data)), null.fixed_values[0]])
        return None

    def check_degenerate(self, data):
        if float(np.var(data)) <= 0.0:
            raise DegenerateDataError("gaussian: zero sample variance")


@dataclass(frozen=True)
class Exponential(Family):
    """Exponential waiting times with rate parameter."""

    name: str = "exponential"
    param_names: tuple[str, ...] = ("rate",)

    def in_domain(self, theta):
        return bool(theta[0] > 0)

    def support_ok(self, x):
        return x >= 0

    def logpdf(self, x, theta):
        lam = theta[0]
        return np.log(lam) - lam * x

    def score(self, x, theta):
        return (1.0 / theta[0] - x)[:, None]

    def fisher_information(self, theta):
        return np.array([[1.0 / theta[0] ** 2]])

    def sample(self, theta, size, rng):
        return rng.exponential(1.0 / theta[0], size)

    def mom_estimate(self, data):
        m = float(np.mean(data))
        return np.array([1.0 / max(m, 1e-8)])

    def mle_closed(self, data):
        return np.array([1.0 / float(np.mean(data))])

    def check_degenerate(self, data):
        if float(np.mean(data)) <= 0.0:
            raise DegenerateDataError("exponential: zero mean, MLE unbounded")


FAMILIES = {
    "poisson": Poisson,
    "gaussian-known": GaussianKnownVariance,
    "gaussian": GaussianMeanVariance,
    "exponential": Exponential,
}


def make_family(name: str, **kwargs) -> Family:
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}")
    if name != "gaussian-known":
        kwargs.pop("sigma", None)
    return cls(**kwargs)


# -- likelihood operations ---------------------------------------------------


def log_likelihood(model: Family, data, theta) -> float:
    """Sum of log-densities over ``data``; 0.0 for an empty sample."""
    th = model.as_theta(theta)
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return 0.0
    arr = model.as_data(arr)
    value = float(np.sum(model.logpdf(arr, th)))
    if not np.isfinite(value):
        raise DomainError(f"{model.name}: non-finite log-likelihood at {th.tolist()}")
    return value


def score(model: Family, x, theta) -> Array:
    """Gradient of the log-density, one row per observation.

    A scalar observation returns a length-d vector.
    """
    th = model.as_theta(theta)
    scalar = np.ndim(x) == 0
    arr = model.as_data(x)
    s = model.score(arr, th)
    return s[0] if scalar else s


def fisher_information(model: Family, theta) -> Array:
    return model.fisher_information(model.as_theta(theta))


def gradient_tolerance(n: int) -> float:
    return 1e-9 * (1.0 + n)


def _fisher_scoring(model: Family, data: Array, null: NullSpec | None) -> Array:
    """Maximize the log-likelihood by Fisher scoring over the free coordinates.

    Newton direction uses n * I(theta) as the Hessian surrogate, with a
    backtracking line search on the log-likelihood that also keeps the
    iterate inside the domain.
    """
    n = data.size
    gtol = gradient_tolerance(n)

    if null is None:
        free = tuple(range(model.d))
        embed = lambda v: np.asarray(v, dtype=float)
        theta = model.mom_estimate(data)
        free_vals = theta.copy()
    else:
        free = null.free_indices
        embed = null.embed
        if len(free) == 0:
            return embed(np.empty(0))
        init_full = mle_full(model, data)
        free_vals = init_full[list(free)].copy()
        theta = embed(free_vals)
        if not model.in_domain(theta):
            # fall back to method-of-moments for the free block
            free_vals = model.mom_estimate(data)[list(free)]
            theta = embed(free_vals)
    if not model.in_domain(theta):
        raise ConvergenceError(
            f"{model.name}: no admissible starting point", last_iterate=theta
        )

    ll = float(np.sum(model.logpdf(data, theta)))
    for _ in range(200):
        grad = model.score(data, theta).sum(axis=0)[list(free)]
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= gtol:
            return theta
        info = model.fisher_information(theta)[np.ix_(free, free)] * n
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise ConvergenceError(
                f"{model.name}: singular information matrix", last_iterate=theta
            )
        t = 1.0
        while t >= 2.0**-50:
            cand_free = free_vals + t * step
            cand = embed(cand_free)
            if model.in_domain(cand):
                cand_ll = float(np.sum(model.logpdf(data, cand)))
                if cand_ll > ll or (cand_ll == ll and t == 1.0):
                    free_vals, theta, ll = cand_free, cand, cand_ll
                    break
            t *= 0.5
        else:
            # no ascent step left; accept only if the gradient is already tiny
            if gnorm <= 1e3 * gtol:
                return theta
            raise ConvergenceError(
                f"{model.name}: line search stalled (|grad| = {gnorm:.3e})",
                last_iterate=theta,
            )
    raise ConvergenceError(
        f"{model.name}: Fisher scoring did not converge in 200 iterations",
        last_iterate=theta,
    )


def mle_full(model: Family, data, *, method: str = "auto") -> Array:
    """Maximum-likelihood estimate over the full parameter domain."""
    arr = model.as_data(data)
    if arr.size == 0:
        raise ValueError("mle_full: empty data")
    model.check_degenerate(arr)
    if method not in ("auto", "closed", "newton"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "closed"):
        closed = model.mle_closed(arr)
        if closed is not None:
            return closed
        if method == "closed":
            raise ValueError(f"{model.name}: no closed-form MLE")
    return _fisher_scoring(model, arr, null=None)


def mle_restricted(model: Family, null: NullSpec, data, *, method: str = "auto") -> Array:
    """Maximum-likelihood estimate with the null's coordinates pinned."""
    if null.d != model.d:
        raise ValueError("null dimension does not match model")
    arr = model.as_data(data)
    if arr.size == 0:
        raise ValueError("mle_restricted: empty data")
    if null.is_simple:
        theta = null.embed(np.empty(0))
        if not model.in_domain(theta):
            raise DomainError(f"{model.name}: null value outside domain")
        return theta
    if method in ("auto", "closed"):
        closed = model.restricted_mle_closed(null, arr)
        if closed is not None:
            return closed
        if method == "closed":
            raise ValueError(f"{model.name}: no closed-form restricted MLE")
    return _fisher_scoring(model, arr, null=null)


# -- regularity diagnostics ---------------------------------------------------


@dataclass(frozen=True)
class RegularityReport:
    """Monte Carlo diagnostics for the zero-mean score, the information
    identity, and positive-definiteness of the information matrix."""

    family: str
    theta: tuple[float, ...]
    sample_count: int
    seed: int
    valid: bool
    score_mean_norm: float = float("nan")
    score_cov_error: float = float("nan")
    min_information_eigenvalue: float = float("nan")
    hessian_identity_error: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "theta": list(self.theta),
            "sample_count": self.sample_count,
            "seed": self.seed,
            "valid": self.valid,
            "score_mean_norm": self.score_mean_norm,
            "score_cov_error": self.score_cov_error,
            "min_information_eigenvalue": self.min_information_eigenvalue,
            "hessian_identity_error": self.hessian_identity_error,
        }


def _numeric_hessian_mean(model: Family, draws: Array, theta: Array) -> Array:
    """Central-difference Hessian of the mean log-density over ``draws``."""
    d = model.d
    h = 1e-4 * (1.0 + np.abs(theta))

    def g(t):
        return float(np.mean(model.logpdf(draws, t)))

    hess = np.empty((d, d))
    g0 = g(theta)
    for a in range(d):
        ea = np.zeros(d)
        ea[a] = h[a]
        hess[a, a] = (g(theta + ea) - 2.0 * g0 + g(theta - ea)) / h[a] ** 2
        for b in range(a + 1, d):
            eb = np.zeros(d)
            eb[b] = h[b]
            val = (
                g(theta + ea + eb) - g(theta + ea - eb) - g(theta - ea + eb) + g(theta - ea - eb)
            ) / (4.0 * h[a] * h[b])
            hess[a, b] = hess[b, a] = val
    return hess


def check_regularity(model: Family, theta, sample_count: int, seed: int) -> RegularityReport:
    """Numerically verify the regularity conditions at ``theta``.

    Reports the Monte Carlo score mean, the gap between the score
    covariance and I(theta), the smallest information eigenvalue, and the
    gap between the averaged numeric Hessian of the log-density and
    -I(theta).  A zero sample count yields an invalid (empty) report.
    """
    th = model.as_theta(theta)
    base = dict(
        family=model.name,
        theta=tuple(float(v) for v in th),
        sample_count=int(sample_count),
        seed=int(seed),
    )
    if sample_count <= 0:
        return RegularityReport(valid=False, **base)
    from .rng import derive_generator

    rng = derive_generator(seed)
    draws = model.sample(th, int(sample_count), rng)
    scores = model.score(draws, th)
    info = model.fisher_information(th)
    mean_norm = float(np.linalg.norm(scores.mean(axis=0)))
    cov = np.cov(scores, rowvar=False).reshape(model.d, model.d)
    cov_err = float(np.max(np.abs(cov - info)))
    min_eig = float(np.min(np.linalg.eigvalsh(info)))
    hess_err = float(np.max(np.abs(_numeric_hessian_mean(model, draws, th) + info)))
    return RegularityReport(
        valid=True,
        score_mean_norm=mean_norm,
        score_cov_error=cov_err,
        min_information_eigenvalue=min_eig,
        hessian_identity_error=hess_err,
        **base,
    )
