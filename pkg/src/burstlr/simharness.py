"""Synthetic scenarios and desk-scale validation of the limiting laws.

Scenarios draw iid observations per bin under the null parameter, with
an optional burst: observations whose timestamps fall inside a short
interval are drawn from an alternative parameter instead.  On top of the
generators sit three studies:

* ``validate_theorem2`` checks the sliding deviance vector against the
  correlated chi-squared law (per-window KS distance, pairwise
  correlations against rho^2);
* ``validate_theorem1`` checks the scaled windowed MLEs against the
  Gaussian limit (covariance blocks rho_{i,j} * I(theta0)^-1);
* ``power_comparison`` sweeps the origin of time and contrasts the two
  procedures at a shared alpha and at size-calibrated thresholds.

Replication r of a run uses substream r + 1 of the scenario seed, and
threshold calibration runs in its own derived stream family, so reports
are bit reproducible for any worker count.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import chi2 as chi2_dist
from scipy.stats import kstest

from . import decision
from .binning import BinnedDataset, TimedObservation, bin_observations, shift_origin
from .errors import ConvergenceError
from .families import Family, NullSpec, make_family
from .limitlaw import CorrelationMatrix, correlation_matrix
from .lrstats import lambda_new, lambda_standard
from .rng import derive_generator, derive_seed

PROFILES = {
    "desk": {"count_per_bin": 200, "replications": 2000},
    "deep": {"count_per_bin": 1000, "replications": 10_000},
}


@dataclass(frozen=True)
class BurstSpec:
    """Alternative-parameter interval (start, end] with its parameter theta1."""

    start: float
    end: float
    theta1: tuple[float, ...]

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError("burst interval must have positive length")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to generate and analyse one synthetic scenario."""

    family: str
    theta0: tuple[float, ...]
    null: tuple[tuple[str, float], ...]  # (parameter name, fixed value) pairs
    P: int
    G: int
    counts: int | tuple[int, ...] = 200
    k: int = 1
    alpha: float | None = None
    level: float | None = None
    burst: BurstSpec | None = None
    replications: int = 2000
    seed: int = 0
    sigma: float = 1.0  # only used by the known-variance Gaussian family

    def __post_init__(self):
        if self.P < 1 or not 1 <= self.G <= self.P:
            raise ValueError("need P >= 1 and 1 <= G <= P")
        if self.burst is not None:
            if not (0.0 <= self.burst.start < self.burst.end <= self.P):
                raise ValueError("burst interval must lie inside (0, P]")

    def model(self) -> Family:
        return make_family(self.family, sigma=self.sigma)

    def null_spec(self) -> NullSpec:
        return self.model().null(**dict(self.null))

    def counts_vector(self) -> tuple[int, ...]:
        if isinstance(self.counts, int):
            return (self.counts,) * self.P
        if len(self.counts) != self.P:
            raise ValueError("per-bin counts must have length P")
        return tuple(int(v) for v in self.counts)

    @property
    def r(self) -> int:
        return self.null_spec().r

    def correlation(self) -> CorrelationMatrix:
        return correlation_matrix(self.counts_vector(), self.G)


def generate_events(spec: ScenarioSpec, rng: np.random.Generator) -> list[TimedObservation]:
    """Timestamped draws: n_p per bin, uniform times, burst members re-drawn."""
    model = spec.model()
    theta0 = np.asarray(spec.theta0, dtype=float)
    counts = spec.counts_vector()
    # p - random() lands in (p-1, p], exactly the bin's half-open interval
    times = np.concatenate(
        [p - rng.random(n) for p, n in enumerate(counts, start=1)]
    )
    values = model.sample(theta0, times.size, rng)
    if spec.burst is not None:
        member = (times > spec.burst.start) & (times <= spec.burst.end)
        hit = int(member.sum())
        if hit:
            theta1 = np.asarray(spec.burst.theta1, dtype=float)
            values = values.copy()
            values[member] = model.sample(theta1, hit, rng)
    return [TimedObservation(float(t), float(x)) for t, x in zip(times, values)]


def generate_h0(spec: ScenarioSpec, *, rng: np.random.Generator | None = None) -> BinnedDataset:
    """Null-hypothesis dataset: every bin drawn from theta0."""
    if spec.burst is not None:
        raise ValueError("generate_h0 expects a scenario without a burst")
    rng = derive_generator(spec.seed, 1) if rng is None else rng
    return bin_observations(generate_events(spec, rng), spec.P)


def generate_burst(spec: ScenarioSpec, *, rng: np.random.Generator | None = None) -> BinnedDataset:
    """Burst dataset: timestamps inside the burst interval follow theta1."""
    if spec.burst is None:
        raise ValueError("generate_burst expects a scenario with a burst")
    rng = derive_generator(spec.seed, 1) if rng is None else rng
    return bin_observations(generate_events(spec, rng), spec.P)


def _map_replications(fn, replications: int, threads: int) -> list:
    reps = range(replications)
    if threads is None or threads <= 1:
        return [fn(i) for i in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, reps))


def _csv_string(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


@dataclass
class Theorem2Report:
    """Per-window KS distances and pairwise deviance correlations vs theory."""

    replications: int
    used: int
    excluded: int
    seed: int
    M: int
    G: int
    r: int
    ks: tuple[float, ...]
    corr_empirical: np.ndarray
    corr_theory: np.ndarray
    ks_tolerance: float
    band_tolerance: float
    far_tolerance: float
    passed: bool
    max_ks: float
    max_band_error: float
    max_far_error: float

    @property
    def exclusion_rate(self) -> float:
        return self.excluded / self.replications if self.replications else 0.0

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "used": self.used,
            "excluded": self.excluded,
            "exclusion_rate": self.exclusion_rate,
            "seed": self.seed,
            "M": self.M,
            "G": self.G,
            "r": self.r,
            "ks": list(self.ks),
            "corr_empirical": self.corr_empirical.tolist(),
            "corr_theory": self.corr_theory.tolist(),
            "ks_tolerance": self.ks_tolerance,
            "band_tolerance": self.band_tolerance,
            "far_tolerance": self.far_tolerance,
            "max_ks": self.max_ks,
            "max_band_error": self.max_band_error,
            "max_far_error": self.max_far_error,
            "passed": self.passed,
        }

    def ks_csv(self) -> str:
        return _csv_string(
            ["window", "ks", "tolerance"],
            [[i + 1, repr(v), repr(self.ks_tolerance)] for i, v in enumerate(self.ks)],
        )

    def correlation_csv(self) -> str:
        rows = []
        for i in range(self.M):
            for j in range(i + 1, self.M):
                rows.append(
                    [i + 1, j + 1, repr(float(self.corr_empirical[i, j])),
                     repr(float(self.corr_theory[i, j]))]
                )
        return _csv_string(["i", "j", "empirical", "theory"], rows)


@dataclass
class Theorem1Report:
    """Scaled-MLE covariance blocks against rho_{i,j} * I(theta0)^-1."""

    replications: int
    used: int
    excluded: int
    seed: int
    M: int
    d: int
    cov_empirical: np.ndarray  # (M*d, M*d)
    cov_theory: np.ndarray
    block_frobenius: np.ndarray  # (M, M)
    tolerance_3se: np.ndarray  # per entry
    passed: bool
    max_se_ratio: float

    @property
    def exclusion_rate(self) -> float:
        return self.excluded / self.replications if self.replications else 0.0

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "used": self.used,
            "excluded": self.excluded,
            "exclusion_rate": self.exclusion_rate,
            "seed": self.seed,
            "M": self.M,
            "d": self.d,
            "cov_empirical": self.cov_empirical.tolist(),
            "cov_theory": self.cov_theory.tolist(),
            "block_frobenius": self.block_frobenius.tolist(),
            "max_se_ratio": self.max_se_ratio,
            "passed": self.passed,
        }


def _theorem_samples(spec: ScenarioSpec, replications: int, threads: int):
    """Sliding deviances and scaled MLE deviations per surviving replication."""
    model = spec.model()
    null = spec.null_spec()
    counts = spec.counts_vector()
    theta0 = np.asarray(spec.theta0, dtype=float)
    idx_windows = [(i, i + spec.G - 1) for i in range(1, spec.P - spec.G + 2)]
    win_totals = np.array(
        [sum(counts[a - 1 : b]) for a, b in idx_windows], dtype=float
    )

    def one(rep: int):
        rng = derive_generator(spec.seed, rep + 1)
        data = bin_observations(generate_events(spec, rng), spec.P)
        try:
            lr = lambda_new(data, model, null, spec.G)
        except ConvergenceError:
            return None
        if lr.skipped.any():
            return None
        theta_hat = np.stack(lr.theta_full)
        scaled = np.sqrt(win_totals)[:, None] * (theta_hat - theta0[None, :])
        return lr.xi.copy(), scaled.reshape(-1)

    results = _map_replications(one, replications, threads)
    xi_rows = [r[0] for r in results if r is not None]
    mle_rows = [r[1] for r in results if r is not None]
    excluded = sum(1 for r in results if r is None)
    return np.array(xi_rows), np.array(mle_rows), excluded


def validate_theorems(
    spec: ScenarioSpec,
    replications: int | None = None,
    threads: int = 0,
) -> tuple[Theorem2Report, Theorem1Report]:
    """Run both limit-law checks on a single shared replication sweep."""
    if spec.burst is not None:
        raise ValueError("validation runs under the null; remove the burst")
    reps = spec.replications if replications is None else replications
    model = spec.model()
    null = spec.null_spec()
    R = spec.correlation()
    M, G, r = R.M, spec.G, null.r
    d = model.d

    xi_mat, mle_mat, excluded = _theorem_samples(spec, reps, threads)
    used = xi_mat.shape[0]
    max_excl_ok = excluded <= 0.01 * reps

    # -- deviance law ---------------------------------------------------------
    ks = tuple(
        float(kstest(xi_mat[:, i], chi2_dist(r).cdf).statistic) for i in range(M)
    )
    corr_emp = np.atleast_2d(np.corrcoef(xi_mat, rowvar=False)).reshape(M, M)
    corr_theory = R.rho**2
    ks_tol = 1.36 / np.sqrt(used) + 0.01
    band_tol = 0.05
    far_tol = max(3.0 / np.sqrt(used), 1e-6)
    lag = np.abs(np.subtract.outer(np.arange(M), np.arange(M)))
    band = (lag > 0) & (lag < G)
    far = lag >= G
    err = np.abs(corr_emp - corr_theory)
    max_band = float(err[band].max()) if band.any() else 0.0
    max_far = float(err[far].max()) if far.any() else 0.0
    t2 = Theorem2Report(
        replications=reps,
        used=used,
        excluded=excluded,
        seed=spec.seed,
        M=M,
        G=G,
        r=r,
        ks=ks,
        corr_empirical=corr_emp,
        corr_theory=corr_theory,
        ks_tolerance=float(ks_tol),
        band_tolerance=band_tol,
        far_tolerance=float(far_tol),
        max_ks=max(ks),
        max_band_error=max_band,
        max_far_error=max_far,
        passed=bool(
            max_excl_ok
            and max(ks) <= ks_tol
            and max_band <= band_tol
            and max_far <= far_tol
        ),
    )

    # -- MLE law --------------------------------------------------------------
    info_inv = np.linalg.inv(model.fisher_information(np.asarray(spec.theta0)))
    cov_theory = np.kron(R.rho, info_inv)
    cov_emp = np.atleast_2d(np.cov(mle_mat, rowvar=False)).reshape(M * d, M * d)
    diag = np.diag(cov_theory)
    se = np.sqrt((np.outer(diag, diag) + cov_theory**2) / used)
    err_cov = np.abs(cov_emp - cov_theory)
    ratios = err_cov / se
    block_frob = np.array(
        [
            [
                float(
                    np.linalg.norm(
                        cov_emp[i * d : (i + 1) * d, j * d : (j + 1) * d]
                        - cov_theory[i * d : (i + 1) * d, j * d : (j + 1) * d]
                    )
                )
                for j in range(M)
            ]
            for i in range(M)
        ]
    )
    t1 = Theorem1Report(
        replications=reps,
        used=used,
        excluded=excluded,
        seed=spec.seed,
        M=M,
        d=d,
        cov_empirical=cov_emp,
        cov_theory=cov_theory,
        block_frobenius=block_frob,
        tolerance_3se=3.0 * se,
        passed=bool(max_excl_ok and np.all(ratios <= 3.0)),
        max_se_ratio=float(ratios.max()),
    )
    return t2, t1


def validate_theorem2(spec, replications=None, threads: int = 0) -> Theorem2Report:
    return validate_theorems(spec, replications, threads)[0]


def validate_theorem1(spec, replications=None, threads: int = 0) -> Theorem1Report:
    return validate_theorems(spec, replications, threads)[1]


# -- power comparison ----------------------------------------------------------


@dataclass(frozen=True)
class PowerRow:
    offset: float
    procedure: str  # "standard" | "sliding"
    thresholds: str  # "equal_alpha" | "calibrated"
    hypothesis: str  # "h0" | "h1"
    alpha: float
    rejections: int
    replications: int

    @property
    def power(self) -> float:
        return self.rejections / self.replications if self.replications else float("nan")

    @property
    def se(self) -> float:
        if not self.replications:
            return float("nan")
        p = self.power
        return float(np.sqrt(p * (1.0 - p) / self.replications))

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "procedure": self.procedure,
            "thresholds": self.thresholds,
            "hypothesis": self.hypothesis,
            "alpha": self.alpha,
            "rejections": self.rejections,
            "replications": self.replications,
            "power": self.power,
            "se": self.se,
        }


@dataclass
class PowerTable:
    rows: list[PowerRow]
    alpha_equal: float
    alpha_standard: float
    alpha_sliding: float
    level: float | None
    seed: int
    replications: int

    def get(self, offset: float, procedure: str, thresholds: str, hypothesis: str) -> PowerRow:
        for row in self.rows:
            if (
                row.offset == offset
                and row.procedure == procedure
                and row.thresholds == thresholds
                and row.hypothesis == hypothesis
            ):
                return row
        raise KeyError((offset, procedure, thresholds, hypothesis))

    def to_dict(self) -> dict:
        return {
            "alpha_equal": self.alpha_equal,
            "alpha_standard": self.alpha_standard,
            "alpha_sliding": self.alpha_sliding,
            "level": self.level,
            "seed": self.seed,
            "replications": self.replications,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_csv(self) -> str:
        return _csv_string(
            ["offset", "procedure", "thresholds", "hypothesis", "alpha",
             "rejections", "replications", "power", "se"],
            [
                [row.offset, row.procedure, row.thresholds, row.hypothesis,
                 repr(row.alpha), row.rejections, row.replications,
                 repr(row.power), repr(row.se)]
                for row in self.rows
            ],
        )


def power_comparison(
    spec: ScenarioSpec,
    offsets: tuple[float, ...] = (0.0,),
    *,
    replications: int | None = None,
    calibration_count: int = 100_000,
    threads: int = 0,
) -> PowerTable:
    """Estimate rejection rates per origin offset for both procedures.

    Thresholds: ``equal_alpha`` applies one shared alpha to both procedures
    (the scenario's alpha, or the disjoint procedure's calibrated alpha when
    only a level is given); ``calibrated`` applies per-procedure alphas
    solved for the target level, with the sliding procedure calibrated
    against the nominal (offset-zero) counts profile.  Size rows re-run the
    sweep with the burst removed.
    """
    if spec.burst is None:
        raise ValueError("power_comparison expects a scenario with a burst")
    if spec.P % spec.G != 0:
        raise ValueError("power comparison needs G | P for the disjoint procedure")
    reps = spec.replications if replications is None else replications
    model = spec.model()
    null = spec.null_spec()
    r = null.r
    N = spec.P // spec.G
    R = spec.correlation()

    level = spec.level
    if spec.alpha is not None:
        alpha_equal = spec.alpha
        alpha_standard = spec.alpha
        alpha_sliding = spec.alpha
    else:
        if level is None:
            raise ValueError("scenario needs alpha or level")
        cal_std = decision.calibrate_alpha(
            level, spec.k, procedure="standard", N=N, r=r
        )
        cal_sli = decision.calibrate_alpha(
            level,
            spec.k,
            procedure="sliding",
            R=R,
            r=r,
            G=spec.G,
            count=calibration_count,
            seed=derive_seed(spec.seed, 1),  # own stream family, apart from replications
            threads=threads,
        )
        alpha_standard = cal_std.alpha
        alpha_sliding = cal_sli.alpha
        alpha_equal = cal_std.alpha

    combos = [
        ("standard", "equal_alpha", alpha_equal),
        ("sliding", "equal_alpha", alpha_equal),
        ("standard", "calibrated", alpha_standard),
        ("sliding", "calibrated", alpha_sliding),
    ]

    def sweep(burst: BurstSpec | None, hypothesis: str, stream_base: int) -> list[PowerRow]:
        scen = replace(spec, burst=burst)
        rows: list[PowerRow] = []
        for oi, offset in enumerate(offsets):
            def one(rep: int):
                rng = derive_generator(spec.seed, stream_base + oi * reps + rep + 1)
                events = generate_events(scen, rng)
                data = shift_origin(events, offset, spec.P)
                lr_std = lambda_standard(data, model, null, spec.G)
                lr_sli = lambda_new(data, model, null, spec.G)
                out = {}
                for proc, mode, alpha in combos:
                    lr = lr_std if proc == "standard" else lr_sli
                    rep_fn = decision.reject_standard if proc == "standard" else decision.reject_new
                    out[(proc, mode)] = rep_fn(lr, alpha, spec.k).verdict == "reject"
                return out

            outcomes = _map_replications(one, reps, threads)
            for proc, mode, alpha in combos:
                rows.append(
                    PowerRow(
                        offset=offset,
                        procedure=proc,
                        thresholds=mode,
                        hypothesis=hypothesis,
                        alpha=alpha,
                        rejections=sum(o[(proc, mode)] for o in outcomes),
                        replications=reps,
                    )
                )
        return rows

    n_off = len(offsets)
    rows = sweep(spec.burst, "h1", stream_base=0)
    rows += sweep(None, "h0", stream_base=n_off * reps)
    return PowerTable(
        rows=rows,
        alpha_equal=alpha_equal,
        alpha_standard=alpha_standard,
        alpha_sliding=alpha_sliding,
        level=level,
        seed=spec.seed,
        replications=reps,
    )
