"""
Domain types for sequential inference on Poisson arrival processes.

All types are pydantic models so they validate on construction and
serialise to the wire formats used by the CLI and the HTTP surface.
"""
import math
from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator


class Arm(str, Enum):
    """Experiment arm an event belongs to"""
    A = "A"
    B = "B"


class MixtureParams(BaseModel):
    """Precision of the logGamma(phi, phi) mixture over the log rate ratio"""
    model_config = ConfigDict(frozen=True)

    phi: float = Field(1.0, gt=0, allow_inf_nan=False)


class LogValue(BaseModel):
    """Natural log of a nonnegative statistic; -inf encodes zero"""
    model_config = ConfigDict(frozen=True)

    log_v: float

    @field_validator("log_v")
    @classmethod
    def _not_nan(cls, v: float) -> float:
        if math.isnan(v):
            raise ValueError("log value must not be NaN")
        return v

    @property
    def value(self) -> float:
        return math.exp(self.log_v) if self.log_v < 709.0 else math.inf

    @property
    def p_value(self) -> float:
        """min(1, 1/value), never below the smallest positive double"""
        if self.log_v <= 0:
            return 1.0
        return max(math.exp(-self.log_v), math.ulp(0.0))


class RatePair(BaseModel):
    """Long-run average arrival rates of arms A and B (events per unit time)"""
    model_config = ConfigDict(frozen=True)

    lambda_a: float = Field(ge=0, allow_inf_nan=False)
    lambda_b: float = Field(ge=0, allow_inf_nan=False)

    @property
    def lambda_m(self) -> float:
        return 0.5 * (self.lambda_a + self.lambda_b)


class Interval(BaseModel):
    """Closed interval [lower, upper] on the nonnegative half-line"""
    model_config = ConfigDict(frozen=True)

    lower: float = Field(ge=0)
    upper: float = Field(ge=0)

    @model_validator(mode="after")
    def _ordered(self) -> "Interval":
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        return self

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper

    def covers(self, other: "Interval") -> bool:
        """True when ``other`` lies inside this interval"""
        return self.lower <= other.lower and other.upper <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


class SignedInterval(Interval):
    """Closed interval on the whole real line (differences of measures)"""
    lower: float
    upper: float


class JointQuery(BaseModel):
    """Counts and parameters defining the joint confidence set at one instant"""
    model_config = ConfigDict(frozen=True)

    n_a: int = Field(ge=0)
    n_b: int = Field(ge=0)
    phi: float = Field(1.0, gt=0, allow_inf_nan=False)
    alpha: float = Field(0.05, gt=0, lt=1)


# --- Intensity specifications -------------------------------------------------

class ConstantIntensity(BaseModel):
    """lambda(t) = rate"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant"] = "constant"
    rate: float = Field(ge=0, allow_inf_nan=False)


class LogSinusoidIntensity(BaseModel):
    """lambda(t) = exp(amplitude * sin(2 pi t / period))"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["log_sinusoid"] = "log_sinusoid"
    amplitude: float = Field(allow_inf_nan=False)
    period: float = Field(gt=0, allow_inf_nan=False)


class SinusoidIntensity(BaseModel):
    """lambda(t) = baseline + amplitude * sin(2 pi t / period)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["sinusoid"] = "sinusoid"
    baseline: float = Field(ge=0, allow_inf_nan=False)
    amplitude: float = Field(allow_inf_nan=False)
    period: float = Field(gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _nonnegative(self) -> "SinusoidIntensity":
        if abs(self.amplitude) > self.baseline:
            raise ValueError("|amplitude| must not exceed baseline or the intensity turns negative")
        return self


class PiecewiseConstantIntensity(BaseModel):
    """
    rates[0] on [0, breakpoints[0]), rates[i] on [breakpoints[i-1], breakpoints[i]),
    rates[-1] from the last breakpoint on.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["piecewise_constant"] = "piecewise_constant"
    breakpoints: List[float]
    rates: List[float]

    @model_validator(mode="after")
    def _consistent(self) -> "PiecewiseConstantIntensity":
        if len(self.rates) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more rate than breakpoints")
        if any(not math.isfinite(r) or r < 0 for r in self.rates):
            raise ValueError("rates must be finite and nonnegative")
        if any(not math.isfinite(b) or b <= 0 for b in self.breakpoints):
            raise ValueError("breakpoints must be finite and positive")
        if any(b1 >= b2 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        return self


class ScaledIntensity(BaseModel):
    """lambda(t) = factor * base(t)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["scaled"] = "scaled"
    base: "IntensitySpec"
    factor: float = Field(ge=0, allow_inf_nan=False)


IntensitySpec = Annotated[
    Union[
        ConstantIntensity,
        LogSinusoidIntensity,
        SinusoidIntensity,
        PiecewiseConstantIntensity,
        ScaledIntensity,
    ],
    Field(discriminator="kind"),
]

ScaledIntensity.model_rebuild()

INTENSITY_ADAPTER: TypeAdapter = TypeAdapter(IntensitySpec)


class Realization(BaseModel):
    """Sorted event times of one arm observed on [0, horizon]"""
    model_config = ConfigDict(frozen=True)

    timestamps: List[float]
    horizon: float = Field(gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _sorted_in_window(self) -> "Realization":
        ts = self.timestamps
        if any(t2 < t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("timestamps must be nondecreasing")
        if ts and (ts[0] < 0 or ts[-1] > self.horizon):
            raise ValueError(f"timestamps must lie in [0, {self.horizon}]")
        return self

    @property
    def count(self) -> int:
        return len(self.timestamps)


class EventRecord(BaseModel):
    """One arrival on the wire: timestamp and arm"""
    model_config = ConfigDict(frozen=True)

    ts: float = Field(ge=0, allow_inf_nan=False)
    arm: Arm


# --- Monitoring ---------------------------------------------------------------

class MonitorState(BaseModel):
    """Streaming counters for the two-arm equality monitor"""
    model_config = ConfigDict(frozen=True)

    n_a: int = Field(0, ge=0)
    n_b: int = Field(0, ge=0)
    last_ts: float = Field(0.0, ge=0)
    phi: float = Field(1.0, gt=0, allow_inf_nan=False)
    alpha: float = Field(0.05, gt=0, lt=1)
    log_e: float = 0.0
    log_e_peak: float = 0.0
    rejected_at: Optional[float] = None


# Column order of report rows; frozen within a major version.
REPORT_FIELDS: List[str] = [
    "t", "n_a", "n_b",
    "lo_a", "hi_a", "lo_b", "hi_b", "lo_diff", "hi_diff",
    "log_e", "p", "rejected",
]


class MonitorReport(BaseModel):
    """Snapshot of every anytime-valid output at time t"""
    model_config = ConfigDict(frozen=True)

    t: float
    n_a: int
    n_b: int
    interval_a: Interval
    interval_b: Interval
    interval_diff: SignedInterval
    log_e: float
    p: float = Field(gt=0, le=1)
    rejected: bool

    def to_row(self) -> Dict[str, Union[float, int, bool]]:
        return {
            "t": self.t,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "lo_a": self.interval_a.lower,
            "hi_a": self.interval_a.upper,
            "lo_b": self.interval_b.lower,
            "hi_b": self.interval_b.upper,
            "lo_diff": self.interval_diff.lower,
            "hi_diff": self.interval_diff.upper,
            "log_e": self.log_e,
            "p": self.p,
            "rejected": self.rejected,
        }


SINGLE_ARM_FIELDS: List[str] = ["t", "n", "lower", "upper", "log_m", "p", "rejected"]


class SingleArmReport(BaseModel):
    """Univariate confidence process for one stream, plus the optional null test"""
    model_config = ConfigDict(frozen=True)

    t: float
    n: int
    interval: Interval
    log_m: Optional[float] = None
    p: Optional[float] = None
    rejected: bool = False

    def to_row(self) -> Dict[str, Union[float, int, bool, None]]:
        return {
            "t": self.t,
            "n": self.n,
            "lower": self.interval.lower,
            "upper": self.interval.upper,
            "log_m": self.log_m,
            "p": self.p,
            "rejected": self.rejected,
        }


class RunConfig(BaseModel):
    """Parameters shared by the CLI commands"""
    phi: float = Field(1.0, gt=0, allow_inf_nan=False)
    alpha: float = Field(0.05, gt=0, lt=1)
    seed: int = 0
    horizon: Optional[float] = Field(None, gt=0, allow_inf_nan=False)
    reps: int = Field(200, gt=0)
    grid_step: float = Field(1.0, gt=0, allow_inf_nan=False)
    workers: int = Field(1, gt=0)


class GrowthLimits(BaseModel):
    """Almost-sure limits of log E(t)/t for the three equality tests"""
    equality: float
    bernoulli: float
    gaussian: float


class CoverageSummary(BaseModel):
    """Outcome of a Monte Carlo time-uniform coverage run"""
    reps: int
    misses: int
    miscoverage: float
    std_error: float
    bound: float


class RejectionSummary(BaseModel):
    """Fraction of simulated runs in which a sequential test ever rejected"""
    reps: int
    rejections: int
    rate: float
    std_error: float


class PowerSummary(BaseModel):
    """Single-arm mixture test of a null intensity against simulated data"""
    reps: int
    crossings: int
    rate: float
    mean_log_m_rate: float
    std_error: float
