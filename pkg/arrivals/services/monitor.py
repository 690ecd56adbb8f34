"""
Streaming monitors for arrival processes.

The two-arm monitor tracks the equality e-process, which depends on the
counts only and is therefore constant between events: checking at event
times catches every threshold crossing. The single-arm monitor exposes the
univariate confidence process and, given a null intensity, the mixture test
against it.
"""
import logging
import math
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Tuple, Union

from arrivals.exceptions import DomainError, OutOfOrderError
from arrivals.models import (
    Arm,
    EventRecord,
    Interval,
    IntensitySpec,
    JointQuery,
    MonitorReport,
    MonitorState,
    SignedInterval,
    SingleArmReport,
)
from arrivals.services.confidence import (
    arm_interval,
    difference_interval,
    p_value_from_log,
    sequential_p,
    univariate_interval,
)
from arrivals.services.core import log_e_process, log_mixture_m
from arrivals.services.simulate import cumulative

logger = logging.getLogger(__name__)

AnyReport = Union[MonitorReport, SingleArmReport]


def new_state(phi: float = 1.0, alpha: float = 0.05) -> MonitorState:
    """Monitor state before any event"""
    return MonitorState(phi=phi, alpha=alpha)


def ingest(state: MonitorState, arm: Arm, ts: float) -> MonitorState:
    """Count one event and update the running peak and first rejection time"""
    ts = float(ts)
    if not math.isfinite(ts) or ts < 0:
        raise DomainError(f"timestamp must be finite and nonnegative, got {ts}")
    if ts < state.last_ts:
        raise OutOfOrderError(
            f"event at {ts} arrives after an event at {state.last_ts}",
            record={"ts": ts, "arm": Arm(arm).value},
        )
    arm = Arm(arm)
    n_a = state.n_a + (arm == Arm.A)
    n_b = state.n_b + (arm == Arm.B)
    log_e = log_e_process(n_a, n_b, state.phi)
    rejected_at = state.rejected_at
    if rejected_at is None and log_e >= -math.log(state.alpha):
        rejected_at = ts
        logger.info(f"equality rejected at t={ts} (n_a={n_a}, n_b={n_b}, log_e={log_e:.4f})")
    return state.model_copy(update={
        "n_a": n_a,
        "n_b": n_b,
        "last_ts": ts,
        "log_e": log_e,
        "log_e_peak": max(state.log_e_peak, log_e),
        "rejected_at": rejected_at,
    })


@lru_cache(maxsize=4096)
def _intervals(n_a: int, n_b: int, phi: float, alpha: float) -> Tuple[Interval, Interval, SignedInterval]:
    q = JointQuery(n_a=n_a, n_b=n_b, phi=phi, alpha=alpha)
    return arm_interval(q, Arm.A), arm_interval(q, Arm.B), difference_interval(q)


def report(state: MonitorState, t: Optional[float] = None) -> MonitorReport:
    """Simultaneous intervals, e-value, p-value and stop decision at time t"""
    t = state.last_ts if t is None else float(t)
    if t < state.last_ts:
        raise DomainError(f"report time {t} precedes the last event at {state.last_ts}")
    interval_a, interval_b, interval_diff = _intervals(state.n_a, state.n_b, state.phi, state.alpha)
    return MonitorReport(
        t=t,
        n_a=state.n_a,
        n_b=state.n_b,
        interval_a=interval_a,
        interval_b=interval_b,
        interval_diff=interval_diff,
        log_e=state.log_e,
        p=sequential_p(state.n_a, state.n_b, state.phi),
        rejected=state.log_e_peak >= -math.log(state.alpha),
    )


def _ticks(grid_step: Optional[float]) -> Iterator[float]:
    k = 0
    while grid_step:
        yield k * grid_step
        k += 1


class _StreamRunner:
    """Interleaves event rows and grid-tick rows in time order"""

    def _ingest_record(self, record: EventRecord) -> None:
        raise NotImplementedError

    def _report_at(self, t: float) -> AnyReport:
        raise NotImplementedError

    def run(
        self,
        events: Iterable[EventRecord],
        grid_step: Optional[float] = None,
        horizon: Optional[float] = None,
    ) -> Iterator[AnyReport]:
        """
        Yield one report per event and one per grid tick k * grid_step.
        Ticks run to the horizon, or to the last event when no horizon is set.
        An event on a tick is reported before the tick.
        """
        ticks = _ticks(grid_step)
        next_tick = next(ticks, None)
        last_ts = 0.0
        skipped = 0
        for record in events:
            if horizon is not None and record.ts > horizon:
                skipped += 1
                continue
            while next_tick is not None and next_tick < record.ts:
                yield self._report_at(next_tick)
                next_tick = next(ticks, None)
            self._ingest_record(record)
            last_ts = record.ts
            yield self._report_at(record.ts)
        if skipped:
            logger.warning(f"ignored {skipped} events after the horizon {horizon}")
        end = horizon if horizon is not None else last_ts
        while next_tick is not None and next_tick <= end:
            yield self._report_at(next_tick)
            next_tick = next(ticks, None)


class SequentialMonitor(_StreamRunner):
    """Single-writer wrapper around MonitorState for two-arm streams"""

    def __init__(self, phi: float = 1.0, alpha: float = 0.05):
        self.state = new_state(phi, alpha)

    def ingest(self, arm: Arm, ts: float) -> MonitorState:
        self.state = ingest(self.state, arm, ts)
        return self.state

    def report(self, t: Optional[float] = None) -> MonitorReport:
        return report(self.state, t)

    def snapshot(self) -> MonitorState:
        """Immutable copy safe to hand to another thread"""
        return self.state

    @property
    def rejected(self) -> bool:
        return self.state.rejected_at is not None

    def _ingest_record(self, record: EventRecord) -> None:
        self.ingest(record.arm, record.ts)

    def _report_at(self, t: float) -> MonitorReport:
        return self.report(max(t, self.state.last_ts))


class SingleArmMonitor(_StreamRunner):
    """
    Univariate confidence process for one stream. With a null intensity the
    monitor also runs the mixture test of that null; its statistic keeps
    moving between events as Lambda_0 grows, so every report time and the
    left limit at every event are folded into the running peak.
    """

    def __init__(self, phi: float = 1.0, alpha: float = 0.05, null_spec: Optional[IntensitySpec] = None):
        if not 0 < alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        self.phi = phi
        self.alpha = alpha
        self.null_spec = null_spec
        self.n = 0
        self.last_ts = 0.0
        self.log_m_peak = -math.inf
        self.rejected_at: Optional[float] = None

    def _observe(self, t: float) -> Optional[float]:
        if self.null_spec is None:
            return None
        log_m = log_mixture_m(self.n, cumulative(self.null_spec, t), self.phi)
        self.log_m_peak = max(self.log_m_peak, log_m)
        if self.rejected_at is None and log_m >= -math.log(self.alpha):
            self.rejected_at = t
            logger.info(f"null intensity rejected at t={t} (n={self.n}, log_m={log_m:.4f})")
        return log_m

    def ingest(self, ts: float) -> None:
        ts = float(ts)
        if ts < self.last_ts:
            raise OutOfOrderError(f"event at {ts} arrives after an event at {self.last_ts}", record={"ts": ts})
        self._observe(ts)  # left limit, before the count jumps
        self.n += 1
        self.last_ts = ts
        self._observe(ts)

    def report(self, t: Optional[float] = None) -> SingleArmReport:
        t = self.last_ts if t is None else float(t)
        if t < self.last_ts:
            raise DomainError(f"report time {t} precedes the last event at {self.last_ts}")
        log_m = self._observe(t)
        return SingleArmReport(
            t=t,
            n=self.n,
            interval=univariate_interval(self.n, self.phi, self.alpha),
            log_m=log_m,
            p=None if log_m is None else p_value_from_log(log_m),
            rejected=self.rejected_at is not None,
        )

    def _ingest_record(self, record: EventRecord) -> None:
        self.ingest(record.ts)

    def _report_at(self, t: float) -> SingleArmReport:
        return self.report(max(t, self.last_ts))
