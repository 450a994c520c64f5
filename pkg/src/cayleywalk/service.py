"""FastAPI service wrapping the pipelines.

One POST endpoint per command taking {config, threads} and returning
{command, verdict, summary, csv}.  Domain errors map to structured
  payloads: config problems -> 400/config_error, vertex budget ->
409/resource_budget, a zero transition probability surfacing mid-run ->
400/assumption_violated.  The CLI consumes these codes for its exit
status.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__, pipelines
from .errors import (
    A2ViolatedError,
    BudgetExceededError,
    CayleywalkError,
    ConfigError,
    EnvSpecError,
    InvalidLetterError,
    NoParentError,
    ParameterError,
    PresentationError,
    SpeedConditionError,
    WordError,
)
from .schemas import HealthResponse, RunRequest, RunResponse

_CONFIG_ERRORS = (
    ConfigError,
    EnvSpecError,
    ParameterError,
    PresentationError,
    InvalidLetterError,
    WordError,
    NoParentError,
    SpeedConditionError,
    ValueError,
)

app = FastAPI(
    title="cayleywalk",
    version=__version__,
    description="Random walks in i.i.d. random environments on regular trees: "
    "simulation, transience certificates, speed estimation.",
)


def _run(command: str, request: RunRequest) -> RunResponse:
    try:
        result = pipelines.run_command(command, request.config, request.threads)
    except BudgetExceededError as exc:
        raise HTTPException(
            status_code=409, detail={"code": "resource_budget", "message": str(exc)}
        ) from exc
    except A2ViolatedError as exc:
        raise HTTPException(
            status_code=400, detail={"code": "assumption_violated", "message": str(exc)}
        ) from exc
    except _CONFIG_ERRORS as exc:
        raise HTTPException(
            status_code=400, detail={"code": "config_error", "message": str(exc)}
        ) from exc
    except CayleywalkError as exc:  # anything else from the domain layer
        raise HTTPException(
            status_code=500, detail={"code": "internal", "message": str(exc)}
        ) from exc
    return RunResponse(
        command=result.command,
        verdict=result.verdict,
        summary=result.summary,
        csv=result.csv,
    )


@app.get("/healthz", response_model=HealthResponse)
def healthz() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/simulate", response_model=RunResponse)
def simulate(request: RunRequest) -> RunResponse:
    return _run("simulate", request)


@app.post("/flow", response_model=RunResponse)
def flow(request: RunRequest) -> RunResponse:
    return _run("flow", request)


@app.post("/resistance", response_model=RunResponse)
def resistance(request: RunRequest) -> RunResponse:
    return _run("resistance", request)


@app.post("/speed", response_model=RunResponse)
def speed(request: RunRequest) -> RunResponse:
    return _run("speed", request)


@app.post("/check-assumptions", response_model=RunResponse)
def check_assumptions(request: RunRequest) -> RunResponse:
    return _run("check-assumptions", request)
