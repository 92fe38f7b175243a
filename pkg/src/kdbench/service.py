"""HTTP facade over the analysis pipeline.

The command-line tool drives this app in-process through an ASGI transport;
the same app can be served standalone (``uvicorn kdbench.service:app``).
Chain documents travel as raw JSON text rather than parsed objects so that
syntax errors keep their line/column diagnostics from the parser.

Error contract: a chain that fails validation yields 400 with
``error="invalid_chain"`` and the parser diagnostics; bad numeric or slice
parameters yield 400 with ``error="invalid_params"``; malformed request
bodies yield FastAPI's standard 422.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import __version__
from .chain import ChainError, parse_chain
from .ik import IKConfig
from .metric import compare_designs, compute_kd, comparison_to_document, generate_grid, report_to_document
from .kinematics import limit_margins
from .plot import PlotError, render_slice


class IKParams(BaseModel):
    position_tolerance: float = 1e-4
    orientation_tolerance: float = 1e-3
    max_iterations: int = 200
    restarts: int = 16
    damping: float = 1e-3
    step_scale: float = 0.5
    seed: int = 0

    def to_config(self) -> IKConfig:
        return IKConfig(
            position_tolerance=self.position_tolerance,
            orientation_tolerance=self.orientation_tolerance,
            max_iterations=self.max_iterations,
            restarts=self.restarts,
            damping=self.damping,
            step_scale=self.step_scale,
            seed=self.seed,
        )


class KDRequest(BaseModel):
    chain: str = Field(description="chain document as raw JSON text")
    side: float = 0.2
    resolution: int = 9
    epsilon: float = 0.01
    limit_margin_fraction: float = 0.02
    workers: int = 1
    ik: IKParams = Field(default_factory=IKParams)
    manifest: dict[str, Any] = Field(default_factory=dict)


class CompareRequest(BaseModel):
    chains: list[str] = Field(description="chain documents as raw JSON text")
    side: float = 0.2
    resolution: int = 9
    epsilon: float = 0.01
    limit_margin_fraction: float = 0.02
    workers: int = 1
    ik: IKParams = Field(default_factory=IKParams)
    manifest: dict[str, Any] = Field(default_factory=dict)


class PlotRequest(BaseModel):
    report: dict[str, Any]
    slice_axis: str
    slice_index: int
    manifest: dict[str, Any] = Field(default_factory=dict)


class ValidateRequest(BaseModel):
    chain: str = Field(description="chain document as raw JSON text")


def _invalid_chain(exc: ChainError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={
            "error": "invalid_chain",
            "diagnostics": [{"field": d.field, "message": d.message} for d in exc.diagnostics],
        },
    )


def _invalid_params(detail: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": "invalid_params", "detail": detail})


def create_app() -> FastAPI:
    app = FastAPI(title="kdbench", version=__version__)

    @app.exception_handler(ChainError)
    async def _chain_error_handler(request: Request, exc: ChainError):
        return _invalid_chain(exc)

    @app.exception_handler(PlotError)
    async def _plot_error_handler(request: Request, exc: PlotError):
        return _invalid_params(str(exc))

    @app.exception_handler(ValueError)
    async def _value_error_handler(request: Request, exc: ValueError):
        return _invalid_params(str(exc))

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/validate")
    async def validate(req: ValidateRequest) -> JSONResponse:
        try:
            chain = parse_chain(req.chain)
        except ChainError as exc:
            return JSONResponse(
                content={
                    "valid": False,
                    "name": None,
                    "dof": None,
                    "diagnostics": [
                        {"field": d.field, "message": d.message} for d in exc.diagnostics
                    ],
                }
            )
        return JSONResponse(
            content={"valid": True, "name": chain.name, "dof": chain.dof, "diagnostics": []}
        )

    @app.post("/kd")
    async def kd(req: KDRequest) -> JSONResponse:
        chain = parse_chain(req.chain)
        grid = generate_grid(req.side, req.resolution)
        config = req.ik.to_config()
        margins = limit_margins(chain, req.limit_margin_fraction)
        report = compute_kd(chain, grid, config, req.epsilon, margins, workers=req.workers)
        document = report_to_document(report)
        document["manifest"] = req.manifest
        return JSONResponse(content=document)

    @app.post("/compare")
    async def compare(req: CompareRequest) -> JSONResponse:
        chains = [parse_chain(text) for text in req.chains]
        grid = generate_grid(req.side, req.resolution)
        config = req.ik.to_config()
        result = compare_designs(
            chains,
            grid,
            config,
            req.epsilon,
            req.limit_margin_fraction,
            workers=req.workers,
        )
        document = comparison_to_document(result)
        document["manifest"] = req.manifest
        return JSONResponse(content=document)

    @app.post("/plot")
    async def plot(req: PlotRequest) -> Response:
        svg = render_slice(req.report, req.slice_axis, req.slice_index, req.manifest)
        return Response(content=svg, media_type="image/svg+xml")

    return app


app = create_app()
