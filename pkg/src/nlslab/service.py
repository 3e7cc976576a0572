"""HTTP face of the laboratory.

Every operation the CLI offers is an endpoint taking a pydantic request
body and returning JSON; field data travels base64-encoded inside the
payload so a remote client needs no shared filesystem.  Validation errors
(bad configs, stale caches, window violations) come back as 422 or 409
with the offending detail; solver failures surface as 409 rather than a
bare 500.
"""

import base64
import tempfile
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field as PydanticField

from . import runner
from .config import ExperimentConfig, parse_sigma
from .exponents import check_acceptable, exponent_set
from .ground_state import CollapseToZero, NonConvergence
from .lattice import Field, read_field, write_field
from .model import ModelParams, validate
from .runner import StaleCache

__all__ = ["app"]

app = FastAPI(
    title="nlslab",
    description=(
        "Ground states, membership classification, split-step evolution "
        "with verdicts, amplitude sweeps, exact exponent algebra, and "
        "linear decay fits for the partially confined NLS model."
    ),
)


# ---------------------------------------------------------------------------
# request / response models


class ExponentsRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    d: int
    n: int
    sigma: str


class GroundStateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig


class ClassifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    field_b64: Optional[str] = None
    beta: Optional[float] = None


class EvolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    field_b64: Optional[str] = None


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    param: str = "amplitude"
    start: float = PydanticField(gt=0.0)
    stop: float = PydanticField(gt=0.0)
    steps: int = PydanticField(ge=1)
    bisect: bool = False
    bisect_width: Optional[float] = PydanticField(default=None, gt=0.0)


class LinearDecayRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig


# ---------------------------------------------------------------------------
# field transport


def _decode_field(field_b64: str) -> Field:
    raw = base64.b64decode(field_b64.encode("ascii"))
    with tempfile.NamedTemporaryFile(suffix=".field") as fh:
        fh.write(raw)
        fh.flush()
        return read_field(fh.name)


def _encode_field(f: Field) -> str:
    with tempfile.NamedTemporaryFile(suffix=".field") as fh:
        write_field(f, fh.name)
        fh.seek(0)
        return base64.b64encode(fh.read()).decode("ascii")


def _translate(exc: Exception) -> HTTPException:
    if isinstance(exc, (StaleCache, NonConvergence, CollapseToZero)):
        return HTTPException(status_code=409, detail=f"{type(exc).__name__}: {exc}")
    if isinstance(exc, (ValueError, KeyError, FileNotFoundError)):
        return HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}")
    raise exc


# ---------------------------------------------------------------------------
# endpoints


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/exponents")
def exponents(req: ExponentsRequest) -> dict:
    try:
        sigma = parse_sigma(req.sigma)
        es = exponent_set(req.d, req.n, sigma)
        params = ModelParams(d=req.d, n=req.n, sigma=sigma, lam=-1)
        out = es.as_dict()
        out["acceptable"] = check_acceptable(es.p, es.p_tilde, es.r, req.d, req.n).as_dict()
        out["windows"] = validate(params).as_dict()
        return out
    except Exception as exc:  # noqa: BLE001 - mapped to HTTP status
        raise _translate(exc) from exc


@app.post("/ground-state")
def ground_state(req: GroundStateRequest) -> dict:
    try:
        art = runner.run_ground_state(req.config)
        return {"summary": art.summary, "field_b64": _encode_field(art.Q)}
    except Exception as exc:  # noqa: BLE001
        raise _translate(exc) from exc


@app.post("/classify")
def classify(req: ClassifyRequest) -> dict:
    try:
        field = _decode_field(req.field_b64) if req.field_b64 else None
        if field is not None:
            runner.check_field_matches(field, req.config)
        return runner.run_classify(req.config, field=field, beta=req.beta)
    except Exception as exc:  # noqa: BLE001
        raise _translate(exc) from exc


@app.post("/evolve")
def evolve(req: EvolveRequest) -> dict:
    try:
        field = _decode_field(req.field_b64) if req.field_b64 else None
        if field is not None:
            runner.check_field_matches(field, req.config)
        art = runner.run_evolve(req.config, field=field)
        return {
            "verdict": art.verdict.as_dict(),
            "termination": art.trace.termination,
            "trace_csv": art.trace_csv,
            "plot_csv": art.plot_csv,
        }
    except Exception as exc:  # noqa: BLE001
        raise _translate(exc) from exc


@app.post("/sweep")
def sweep(req: SweepRequest) -> dict:
    try:
        result = runner.run_sweep(
            req.config,
            start=req.start,
            stop=req.stop,
            steps=req.steps,
            param=req.param,
            bisect=req.bisect,
            bisect_width=req.bisect_width,
        )
        return {"result": result, "csv": runner.sweep_csv(result)}
    except Exception as exc:  # noqa: BLE001
        raise _translate(exc) from exc


@app.post("/linear-decay")
def linear_decay(req: LinearDecayRequest) -> dict:
    try:
        return runner.run_linear_decay(req.config)
    except Exception as exc:  # noqa: BLE001
        raise _translate(exc) from exc
