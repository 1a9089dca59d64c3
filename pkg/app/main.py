"""
HTTP service exposing the reduction and the checker.

Environment variables control which routes are enabled:

ENABLE_COMPILE        - POST /api/compile (default: "1")
ENABLE_CHECK          - POST /api/check (default: "1")
CHECK_ISOLATION       - run checks in a resource limited subprocess (default: "0")
CHECK_TIMEOUT_SECONDS - wall clock limit for an isolated check (default: 20)
ALLOWED_ORIGINS       - comma separated CORS origins
"""

import os
import uuid

from fastapi import FastAPI, HTTPException, Request, Response, status
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field
from starlette.middleware.base import BaseHTTPMiddleware

from .checker import CheckConfig, Semantics, check
from .errors import ResourceError, VcgsError
from .formats import dumps_vcgs, loads_icgs, loads_vcgs, looks_like_vcgs
from .isolation import run_isolated
from .logic import Dialect, parse_formula
from .model import ICGS
from .observability import CONTENT_TYPE_LATEST, correlation_id_ctx, generate_metrics, logger
from .reduction import ReductionConfig, SizeReport, compile_icgs, size_report
from .vcgs import UNFOLD_STATE_BOUND, explore


# ---------------------------------------------------------------------------
# Feature flags
# ---------------------------------------------------------------------------

def _get_flag(name: str, default: str = "0") -> bool:
    """Return boolean value from env var (`"0"`/`"1"`) with validation."""
    value = os.getenv(name, default)
    if value not in {"0", "1"}:
        raise ValueError(f"{name} must be '0' or '1', got {value!r}")
    return value == "1"


ENABLE_COMPILE = _get_flag("ENABLE_COMPILE", "1")
ENABLE_CHECK = _get_flag("ENABLE_CHECK", "1")
CHECK_ISOLATION = _get_flag("CHECK_ISOLATION")

CHECK_TIMEOUT_SECONDS = int(os.getenv("CHECK_TIMEOUT_SECONDS", "20"))
if CHECK_TIMEOUT_SECONDS <= 0:
    raise RuntimeError("CHECK_TIMEOUT_SECONDS must be positive")

ALLOWED_ORIGINS = [
    o.strip()
    for o in os.getenv("ALLOWED_ORIGINS", "http://localhost:3000").split(",")
    if o.strip()
]

app = FastAPI(title="vCGS Reduction Toolkit")


class ObservabilityMiddleware(BaseHTTPMiddleware):
    async def dispatch(self, request: Request, call_next):
        correlation_id = request.headers.get("X-Correlation-ID", str(uuid.uuid4()))
        correlation_id_ctx.set(correlation_id)
        response = await call_next(request)
        response.headers["X-Correlation-ID"] = correlation_id
        logger.info(
            "request",
            extra={
                "method": request.method,
                "path": str(request.url.path),
                "status_code": response.status_code,
            },
        )
        return response


app.add_middleware(ObservabilityMiddleware)

app.add_middleware(
    CORSMiddleware,
    allow_origins=ALLOWED_ORIGINS,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)


@app.middleware("http")
async def add_security_headers(request: Request, call_next):
    """Inject common security headers into every response."""
    response = await call_next(request)
    response.headers["X-Content-Type-Options"] = "nosniff"
    response.headers["X-Frame-Options"] = "DENY"
    response.headers["Referrer-Policy"] = "same-origin"
    response.headers[
        "Strict-Transport-Security"
    ] = "max-age=63072000; includeSubDomains; preload"
    return response


def _to_http(exc: VcgsError) -> HTTPException:
    if isinstance(exc, ResourceError):
        return HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(exc))
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))


def _load_model(text: str, bound: int) -> ICGS:
    if looks_like_vcgs("", text):
        return explore(loads_vcgs(text), bound).icgs
    return loads_icgs(text)


# ---------------------------------------------------------------------------
# Health check and metrics
# ---------------------------------------------------------------------------

@app.get("/api/health-status/public")
def health_status_public():
    """Public endpoint exposing minimal liveness information."""
    return {"status": "alive"}


@app.get("/metrics")
def metrics():
    """Expose Prometheus metrics."""
    return Response(generate_metrics(), media_type=CONTENT_TYPE_LATEST)


@app.get("/internal/active-modules", include_in_schema=False)
def list_active_modules():
    return {
        "compile": ENABLE_COMPILE,
        "check": ENABLE_CHECK,
        "isolation": CHECK_ISOLATION,
    }


# ---------------------------------------------------------------------------
# Optional: compile
# ---------------------------------------------------------------------------
if ENABLE_COMPILE:

    class CompileRequest(BaseModel):
        model: str
        config: ReductionConfig = ReductionConfig()

    class CompileResponse(BaseModel):
        vcgs: str
        size: SizeReport

    @app.post("/api/compile", response_model=CompileResponse)
    def compile_model(data: CompileRequest):
        try:
            v = compile_icgs(loads_icgs(data.model), data.config)
        except VcgsError as exc:
            raise _to_http(exc) from exc
        return CompileResponse(vcgs=dumps_vcgs(v), size=size_report(v))


# ---------------------------------------------------------------------------
# Optional: check
# ---------------------------------------------------------------------------
if ENABLE_CHECK:

    class CheckRequest(BaseModel):
        model: str
        formula: str
        dialect: Dialect = Dialect.ATL
        semantics: Semantics = Semantics.OBJECTIVE
        states: list[str] | None = None
        identity: bool = False
        bound: int = Field(UNFOLD_STATE_BOUND, ge=1, le=UNFOLD_STATE_BOUND)

    class CheckResponse(BaseModel):
        verdict: bool
        states: dict[str, bool]
        witness: str | None = None

    def _run_check(data: CheckRequest) -> CheckResponse:
        m = _load_model(data.model, data.bound)
        if data.identity:
            m = m.with_identity_indist()
        f = parse_formula(data.formula, data.dialect)
        cfg = CheckConfig(semantics=data.semantics, dialect=data.dialect)
        verdict, per_state, witness = check(m, f, cfg, data.states)
        return CheckResponse(
            verdict=verdict,
            states=per_state,
            witness=None if witness is None else str(witness),
        )

    @app.post("/api/check", response_model=CheckResponse)
    def check_formula(data: CheckRequest):
        try:
            if CHECK_ISOLATION:
                return run_isolated(lambda: _run_check(data), timeout=CHECK_TIMEOUT_SECONDS)
            return _run_check(data)
        except VcgsError as exc:
            raise _to_http(exc) from exc
        except TimeoutError as exc:
            raise HTTPException(status_code=status.HTTP_504_GATEWAY_TIMEOUT, detail="Check timed out") from exc
