"""HTTP surface over the handler layer.

One POST endpoint per verb, pydantic-validated bodies in and out.
Library failures (WorkbenchError and friends, plus input ValueErrors)
come back as 400 with {"error": {"type", "message"}}.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import WorkbenchError
from . import handlers, schemas


def create_app() -> FastAPI:
    app = FastAPI(title="sbs-workbench", version=handlers.health()["version"])

    @app.exception_handler(WorkbenchError)
    async def _workbench_error(request: Request, exc: WorkbenchError):
        del request
        return JSONResponse(status_code=400, content={
            "error": {"type": type(exc).__name__, "message": str(exc)}})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        del request
        return JSONResponse(status_code=400, content={
            "error": {"type": type(exc).__name__, "message": str(exc)}})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return handlers.health()

    @app.post("/verify-axioms", response_model=schemas.VerifyAxiomsResponse)
    def verify_axioms(req: schemas.VerifyAxiomsRequest):
        return handlers.verify_axioms_run(schemas.doc(req))

    @app.post("/bs-check", response_model=schemas.BsCheckResponse)
    def bs_check(req: schemas.BsCheckRequest):
        return handlers.bs_check(schemas.doc(req))

    @app.post("/sbs-residual", response_model=schemas.SbsResidualResponse)
    def sbs_residual(req: schemas.SbsResidualRequest):
        return handlers.sbs_residual_run(schemas.doc(req))

    @app.post("/find-sbs", response_model=schemas.FindSbsResponse)
    def find_sbs(req: schemas.FindSbsRequest):
        return handlers.find_sbs_run(schemas.doc(req))

    @app.post("/flow", response_model=schemas.FlowResponse)
    def flow(req: schemas.FlowRequest):
        return handlers.flow_run(schemas.doc(req))

    @app.post("/lift", response_model=schemas.LiftResponse)
    def lift(req: schemas.LiftRequest):
        return handlers.lift_run(schemas.doc(req))

    @app.post("/euler-solve", response_model=schemas.EulerSolveResponse)
    def euler_solve(req: schemas.EulerSolveRequest):
        return handlers.euler_solve_run(schemas.doc(req))

    @app.post("/enumerate-fibers", response_model=schemas.EnumerateFibersResponse)
    def enumerate_fibers(req: schemas.EnumerateFibersRequest):
        return handlers.enumerate_fibers_run(schemas.doc(req))

    @app.post("/export/loop-trace", response_model=schemas.CsvResponse)
    def loop_trace(req: schemas.LoopTraceRequest):
        return handlers.loop_trace_run(schemas.doc(req))

    @app.post("/export/field-scan", response_model=schemas.CsvResponse)
    def field_scan(req: schemas.FieldScanRequest):
        return handlers.field_scan_run(schemas.doc(req))

    return app
