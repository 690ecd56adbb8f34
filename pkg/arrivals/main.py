from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from contextlib import asynccontextmanager
from typing import Optional
import logging
from pydantic import BaseModel, Field, ValidationError
from arrivals import __version__
from arrivals.config import settings
from arrivals.exceptions import ArrivalsError, DomainError
from arrivals.models import GrowthLimits, Interval, JointQuery, MonitorState, RatePair
from arrivals.services.confidence import univariate_interval
from arrivals.services.core import growth_rate_equality, growth_rate_gaussian, log_e_process
from arrivals.services.monitor import report

# Configure logging
logging.basicConfig(
    level=logging.DEBUG if settings.DEBUG_MODE else settings.LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Log the configured defaults once at startup."""
    logger.info(f"Starting with phi={settings.DEFAULT_PHI}, alpha={settings.DEFAULT_ALPHA}")
    yield
    logger.info("Application shutting down...")


app = FastAPI(
    title="Arrivals",
    description="Anytime-valid confidence intervals and e-values for Poisson arrival counts",
    version=__version__,
    lifespan=lifespan
)

# Dashboards call from other origins
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class ReportRequest(BaseModel):
    n_a: int = Field(ge=0)
    n_b: int = Field(ge=0)
    phi: Optional[float] = None
    alpha: Optional[float] = None
    t: Optional[float] = Field(None, ge=0)


class IntervalRequest(BaseModel):
    n: int = Field(ge=0)
    phi: Optional[float] = None
    alpha: Optional[float] = None


def _raise_http(e: Exception) -> None:
    if isinstance(e, (DomainError, ValidationError)):
        logger.warning(f"Rejected request: {str(e)}")
        raise HTTPException(status_code=422, detail=str(e))
    logger.error(f"Numerical failure: {str(e)}")
    raise HTTPException(status_code=500, detail=str(e))


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "Arrivals sequential inference API",
        "version": __version__,
        "status": "running"
    }


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "phi": settings.DEFAULT_PHI,
        "alpha": settings.DEFAULT_ALPHA,
    }


@app.post("/report")
def post_report(body: ReportRequest):
    """
    Report for arm counts (n_a, n_b): both arm intervals, the difference
    interval, ln E, the sequential p-value and whether E(t) >= 1/alpha.

    The service keeps no history, so ``rejected`` reflects the current
    counts only; streaming monitors track the running peak.
    """
    try:
        q = JointQuery(
            n_a=body.n_a,
            n_b=body.n_b,
            phi=settings.DEFAULT_PHI if body.phi is None else body.phi,
            alpha=settings.DEFAULT_ALPHA if body.alpha is None else body.alpha,
        )
        log_e = log_e_process(q.n_a, q.n_b, q.phi)
        state = MonitorState(
            n_a=q.n_a, n_b=q.n_b, phi=q.phi, alpha=q.alpha,
            log_e=log_e, log_e_peak=max(0.0, log_e),
            last_ts=0.0 if body.t is None else body.t,
        )
        return report(state, body.t).model_dump()
    except (ArrivalsError, ValidationError) as e:
        _raise_http(e)


@app.post("/interval", response_model=Interval)
def post_interval(body: IntervalRequest):
    """Single-arm confidence interval for Lambda(t) given N(t) = n."""
    try:
        return univariate_interval(
            body.n,
            settings.DEFAULT_PHI if body.phi is None else body.phi,
            settings.DEFAULT_ALPHA if body.alpha is None else body.alpha,
        )
    except (ArrivalsError, ValidationError) as e:
        _raise_http(e)


@app.post("/growth", response_model=GrowthLimits)
def post_growth(rates: RatePair):
    """Theoretical growth rates of the three equality tests."""
    try:
        equality = growth_rate_equality(rates)
        return GrowthLimits(equality=equality, bernoulli=equality, gaussian=growth_rate_gaussian(rates))
    except ArrivalsError as e:
        _raise_http(e)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "arrivals.main:app",
        host=settings.APP_HOST,
        port=settings.APP_PORT,
        reload=settings.DEBUG_MODE
    )
