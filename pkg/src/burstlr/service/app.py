"""FastAPI application wrapping the core library.

Error mapping: malformed requests fail pydantic validation (422); data
or configuration problems raise 400; numerical failures (solver
non-convergence, factorization breakdown) surface as 500 so clients can
distinguish "fix the input" from "the computation broke".
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import decision, simharness
from ..binning import TimedObservation, shift_origin
from ..errors import (
    BurstLrError,
    CalibrationError,
    ConvergenceError,
    DegenerateDataError,
    DomainError,
    InvariantViolationError,
    NumericalError,
    SingularWindowError,
    SupportError,
)
from ..families import make_family
from ..limitlaw import correlation_matrix
from ..lrstats import LrVector, lambda_new, lambda_standard
from ..rng import derive_seed
from . import schemas

_CONFIG_ERRORS = (
    DomainError,
    SupportError,
    DegenerateDataError,
    SingularWindowError,
    CalibrationError,
    ValueError,
)
_NUMERICAL_ERRORS = (ConvergenceError, NumericalError, InvariantViolationError)


def _window_rows(lr: LrVector) -> list[schemas.WindowRow]:
    rows = []
    for i, (first, last) in enumerate(lr.window_bins, start=1):
        skipped = bool(lr.skipped[i - 1])
        rows.append(
            schemas.WindowRow(
                kind=lr.kind,
                i=i,
                lam=None if skipped else float(lr.lam[i - 1]),
                xi=None if skipped else float(lr.xi[i - 1]),
                bin_start=first,
                bin_end=last,
                skipped=skipped,
            )
        )
    return rows


def _report_model(report: decision.DecisionReport) -> schemas.DecisionReportModel:
    return schemas.DecisionReportModel(**report.to_dict())


def create_app() -> FastAPI:
    app = FastAPI(title="burstlr", version="0.1.0")

    @app.exception_handler(BurstLrError)
    async def _burstlr_error(request, exc: BurstLrError):
        from fastapi.responses import JSONResponse

        status = 500 if isinstance(exc, _NUMERICAL_ERRORS) else 400
        return JSONResponse(
            status_code=status,
            content={"detail": str(exc), "error_type": type(exc).__name__},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/detect", response_model=schemas.DetectResponse)
    def detect(req: schemas.DetectRequest) -> schemas.DetectResponse:
        if not req.events:
            raise HTTPException(status_code=400, detail="no observations")
        model = make_family(req.family, sigma=req.sigma)
        null = model.null(**req.null)
        events = [TimedObservation(e.t, e.x) for e in req.events]
        data = shift_origin(events, req.offset, req.P)
        if data.total == 0:
            raise HTTPException(status_code=400, detail="no observations in (0, P]")

        lr_sliding = lambda_new(data, model, null, req.G)
        lr_standard = None
        if req.P % req.G == 0:
            lr_standard = lambda_standard(data, model, null, req.G)
        N = req.P // req.G
        R = correlation_matrix(data.counts, req.G)

        if req.alpha is not None:
            alpha_std = alpha_sli = req.alpha
        else:
            alpha_std = (
                decision.calibrate_alpha(
                    req.level, req.k, procedure="standard", N=N, r=null.r
                ).alpha
                if lr_standard is not None and req.k <= N
                else None
            )
            alpha_sli = decision.calibrate_alpha(
                req.level,
                req.k,
                procedure="sliding",
                R=R,
                r=null.r,
                G=req.G,
                count=req.mc_count,
                seed=derive_seed(req.seed, 1),
            ).alpha

        sliding_size = decision.type1_new(
            R, null.r, alpha_sli, req.k, req.G, req.mc_count, derive_seed(req.seed, 2)
        )
        sliding_report = decision.reject_new(
            lr_sliding,
            alpha_sli,
            req.k,
            level_estimate=sliding_size.estimate,
            level_se=sliding_size.se,
            provenance="mc",
            simple_null=null.is_simple,
        )
        standard_report = None
        if lr_standard is not None and alpha_std is not None:
            standard_report = decision.reject_standard(
                lr_standard,
                alpha_std,
                req.k,
                level_estimate=decision.type1_standard(N, req.k, alpha_std, null.r)
                if req.k <= N
                else None,
                level_se=0.0 if req.k <= N else None,
                provenance="binomial",
                simple_null=null.is_simple,
            )

        windows = _window_rows(lr_sliding)
        if lr_standard is not None:
            windows = _window_rows(lr_standard) + windows
        return schemas.DetectResponse(
            standard=_report_model(standard_report) if standard_report else None,
            sliding=_report_model(sliding_report),
            windows=windows,
            counts=list(data.counts),
            dropped=data.dropped,
            P=req.P,
            G=req.G,
            k=req.k,
            seed=req.seed,
            offset=req.offset,
        )

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        if req.procedure == "standard":
            result = decision.calibrate_alpha(
                req.level, req.k, procedure="standard", N=req.N, r=req.r
            )
        else:
            R = correlation_matrix(req.counts, req.G)
            result = decision.calibrate_alpha(
                req.level,
                req.k,
                procedure="sliding",
                R=R,
                r=req.r,
                G=req.G,
                count=req.mc_count,
                seed=req.seed,
            )
        return schemas.CalibrateResponse(**result.to_dict())

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        spec = _scenario(req, seed=req.seed)
        rng = simharness.derive_generator(req.seed, 1)
        events = simharness.generate_events(spec, rng)
        return schemas.SimulateResponse(
            events=[schemas.Event(t=e.t, x=e.x) for e in events],
            counts=list(spec.counts_vector()),
            P=req.P,
            seed=req.seed,
        )

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
        if req.burst is not None:
            raise HTTPException(status_code=400, detail="validation runs under the null")
        reps = req.replications
        spec = _scenario(req, seed=req.seed)
        if req.profile is not None:
            profile = simharness.PROFILES[req.profile]
            reps = profile["replications"]
            spec = dataclasses.replace(spec, counts=profile["count_per_bin"])
        t2, t1 = simharness.validate_theorems(spec, reps, threads=req.threads)
        passed = True
        out2 = out1 = None
        if req.theorem in ("2", "both"):
            out2 = t2.to_dict()
            passed = passed and t2.passed
        if req.theorem in ("1", "both"):
            out1 = t1.to_dict()
            passed = passed and t1.passed
        return schemas.ValidateResponse(
            theorem2=out2,
            theorem1=out1,
            passed=passed,
            seed=req.seed,
            replications=reps,
            ks_csv=t2.ks_csv() if out2 else None,
            correlation_csv=t2.correlation_csv() if out2 else None,
        )

    @app.post("/power", response_model=schemas.PowerResponse)
    def power(req: schemas.PowerRequest) -> schemas.PowerResponse:
        spec = _scenario(req, seed=req.seed, alpha=req.alpha, level=req.level)
        table = simharness.power_comparison(
            spec,
            offsets=tuple(req.offsets),
            replications=req.replications,
            calibration_count=req.mc_count,
            threads=req.threads,
        )
        return schemas.PowerResponse(
            rows=[r.to_dict() for r in table.rows],
            alpha_equal=table.alpha_equal,
            alpha_standard=table.alpha_standard,
            alpha_sliding=table.alpha_sliding,
            level=table.level,
            seed=table.seed,
            replications=table.replications,
            csv=table.to_csv(),
        )

    return app


def _scenario(
    req: schemas.ScenarioModel,
    *,
    seed: int,
    alpha: float | None = None,
    level: float | None = None,
) -> simharness.ScenarioSpec:
    burst = None
    if req.burst is not None:
        burst = simharness.BurstSpec(
            start=req.burst.start, end=req.burst.end, theta1=tuple(req.burst.theta1)
        )
    counts = req.counts if isinstance(req.counts, int) else tuple(req.counts)
    return simharness.ScenarioSpec(
        family=req.family,
        sigma=req.sigma,
        theta0=tuple(req.theta0),
        null=tuple(req.null.items()),
        P=req.P,
        G=req.G,
        k=req.k,
        counts=counts,
        alpha=alpha,
        level=level,
        burst=burst,
        seed=seed,
    )


app = create_app()
