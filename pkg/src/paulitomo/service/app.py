"""HTTP facade over the toolkit; the CLI talks to these endpoints."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..channel import affine_basis_qubit, affine_basis_qutrit
from ..design import fisher_matrix, optimal_configs_qubit, search_optimal_configs
from ..errors import NonConvergenceError, ToolkitError, ValidationError
from ..estimate import (
    config_to_dict,
    dataset_to_dict,
    estimate_affine,
    estimate_choi,
    estimate_directions,
    simulate_record,
)
from ..harness import (
    CaseStudySpec,
    metrics_rows_to_dicts,
    robustness_rows_to_dicts,
    robustness_sweep,
    run_case_study,
)
from ..qstate import MeasurementRecord, Mub
from ..serialize import from_pairs, to_pairs
from ..solver import gen_lambda_constraints, qubit_lambda_constraints
from .models import (
    CaseStudyRequest,
    CaseStudyResponse,
    DesignRequest,
    DesignResponse,
    DirectionsRequest,
    DirectionsResponse,
    EstimateRequest,
    EstimateResponse,
    RobustnessRequest,
    RobustnessResponse,
    SimulateRequest,
    SimulateResponse,
)


def _validation_handler(request: Request, exc: ValidationError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


def _nonconvergence_handler(request: Request, exc: NonConvergenceError):
    return JSONResponse(
        status_code=409,
        content={
            "detail": str(exc),
            "iterations": exc.iterations,
            "residuals": exc.residuals,
        },
    )


def create_app() -> FastAPI:
    app = FastAPI(title="paulitomo", version=__version__)
    app.add_exception_handler(ValidationError, _validation_handler)
    app.add_exception_handler(NonConvergenceError, _nonconvergence_handler)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        channel = req.channel.to_channel()
        configs = [c.to_config() for c in req.configs]
        record = simulate_record(channel, configs, req.seed)
        return SimulateResponse(**dataset_to_dict(configs, record))

    @app.post("/estimate", response_model=EstimateResponse, response_model_by_alias=True)
    def estimate(req: EstimateRequest):
        configs = [c.to_config() for c in req.configs]
        if req.freqs is not None:
            data = [np.asarray(f, dtype=float) for f in req.freqs]
        elif req.counts is not None:
            data = MeasurementRecord(
                [np.asarray(c, dtype=np.int64) for c in req.counts]
            )
        else:
            raise ValidationError("estimate needs counts or freqs")
        if req.method == "choi":
            est = estimate_choi(configs, data)
            return EstimateResponse(
                lam=None,
                choi=to_pairs(est.choi.matrix),
                residual=est.residual,
                iterations=est.iterations,
            )
        dim = configs[0].dim
        mub = Mub(from_pairs(req.directions)) if req.directions is not None else None
        if dim == 2:
            basis, ineq = affine_basis_qubit(mub), qubit_lambda_constraints()
        else:
            basis, ineq = affine_basis_qutrit(mub), gen_lambda_constraints(dim)
        est = estimate_affine(basis, ineq, configs, data)
        return EstimateResponse(
            lam=[float(v) for v in est.lam],
            choi=to_pairs(est.choi.matrix),
            residual=est.residual,
            iterations=est.iterations,
        )

    @app.post("/directions", response_model=DirectionsResponse)
    def directions(req: DirectionsRequest):
        channel = req.channel.to_channel()
        if channel.dim != 2:
            raise ValidationError("direction estimation supports qubit channels only")
        result = estimate_directions(
            channel.apply,
            n_shots=req.n_shots,
            cascade_depth=req.cascade_depth,
            tau_scale=req.tau_scale,
            max_steps=req.max_steps,
            rng=req.seed,
            exact=req.exact,
        )
        return DirectionsResponse(
            directions=result.directions.tolist(),
            lambda_first_pass=result.lambda_first_pass.tolist(),
            steps=list(result.steps),
            restarts=result.restarts,
            iterates=[[list(map(float, b)) for b in seq] for seq in result.iterates],
        )

    @app.post("/design", response_model=DesignResponse)
    def design(req: DesignRequest):
        channel = req.channel.to_channel()
        if channel.dim == 2:
            best = optimal_configs_qubit(channel.mub, channel.lam)
            basis = affine_basis_qubit(channel.mub)
            fm = fisher_matrix(basis, channel.lam, list(best.configs))
            return DesignResponse(
                configs=[config_to_dict(c) for c in best.configs],
                objective=float(sum(best.objectives)),
                fisher_matrix=fm.entries.tolist(),
                order=list(best.order),
            )
        result = search_optimal_configs(
            channel, restarts=req.restarts, rng=req.seed, line_searches=req.line_searches
        )
        basis = affine_basis_qutrit(channel.mub)
        fm = fisher_matrix(basis, channel.lam, [result.best_config])
        return DesignResponse(
            configs=[config_to_dict(result.best_config)],
            objective=result.best_objective,
            fisher_matrix=fm.entries.tolist(),
            mub_aligned=[[float(i), float(v)] for i, v in result.mub_aligned],
            mub_attains_max=result.mub_attains_max,
        )

    @app.post("/casestudy", response_model=CaseStudyResponse)
    def casestudy(req: CaseStudyRequest):
        spec = CaseStudySpec(
            channel=req.channel.to_channel(),
            strategy=req.strategy,
            shot_grid=tuple(req.shot_grid),
            trials=req.trials,
            seed=req.seed,
            exact=req.exact,
        )
        result = run_case_study(spec)
        return CaseStudyResponse(
            rows=metrics_rows_to_dicts(result.rows),
            closed_form_rows=metrics_rows_to_dicts(result.closed_form_rows),
        )

    @app.post("/robustness", response_model=RobustnessResponse)
    def robustness(req: RobustnessRequest):
        rows = robustness_sweep(
            req.lam,
            req.axis,
            req.alpha_grid,
            n_shots=req.n_shots,
            trials=req.trials,
            seed=req.seed,
        )
        return RobustnessResponse(rows=robustness_rows_to_dicts(rows))

    @app.exception_handler(ToolkitError)
    def _toolkit_handler(request: Request, exc: ToolkitError):
        # remaining domain errors (bad dimensions, degenerate iterates, ...)
        # are client-input problems
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    return app


app = create_app()
