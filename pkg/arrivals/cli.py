"""
Command-line surface: simulate event streams, monitor them, compare the
equality tests' growth and check time-uniform coverage.

Exit codes: 0 completed without rejection, 2 rejected, 1 error.
"""
import argparse
import contextlib
import json
import logging
import sys
from typing import Iterator, List, Optional, TextIO

from pydantic import ValidationError

from arrivals import __version__
from arrivals.config import settings
from arrivals.exceptions import ArrivalsError, DomainError
from arrivals.models import (
    REPORT_FIELDS,
    SINGLE_ARM_FIELDS,
    ConstantIntensity,
    IntensitySpec,
    JointQuery,
    MonitorState,
    RunConfig,
)
from arrivals.services.confidence import sum_interval
from arrivals.services.core import log_e_process
from arrivals.services.experiments import GROWTH_FIELDS, coverage_run, growth_limits, growth_trajectories
from arrivals.services.monitor import SequentialMonitor, SingleArmMonitor, report
from arrivals.services.simulate import load_spec, sample_pair
from arrivals.utils import read_events, write_rows

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECTED = 2

# lambda^A(t) = exp(3 sin(2 pi t / 20)), lambda^B(t) = exp(2 sin(2 pi t / 20))
DEFAULT_SPEC_A = {"kind": "log_sinusoid", "amplitude": 3.0, "period": 20.0}
DEFAULT_SPEC_B = {"kind": "log_sinusoid", "amplitude": 2.0, "period": 20.0}
LIMIT_FIELDS = ["limit_equality", "limit_bernoulli", "limit_gaussian"]


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        phi=args.phi,
        alpha=args.alpha,
        seed=args.seed,
        horizon=getattr(args, "horizon", None),
        reps=getattr(args, "reps", settings.DEFAULT_REPS),
        grid_step=getattr(args, "grid_step", None) or settings.DEFAULT_GRID_STEP,
        workers=getattr(args, "workers", settings.MAX_WORKERS),
    )


def _arm_spec(spec: Optional[str], rate: Optional[float], default: dict, arm: str) -> IntensitySpec:
    if spec is not None and rate is not None:
        raise DomainError(f"give either --spec-{arm} or --rate-{arm}, not both")
    if rate is not None:
        return ConstantIntensity(rate=rate)
    return load_spec(default if spec is None else spec)


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        yield handle
    logger.info(f"wrote {path}")


@contextlib.contextmanager
def _input(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdin
        return
    with open(path, "r", encoding="utf-8", newline="") as handle:
        yield handle


# --- Commands -----------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    """Merged two-arm event stream on [0, horizon]"""
    config = _run_config(args)
    spec_a = _arm_spec(args.spec_a, args.rate_a, DEFAULT_SPEC_A, "a")
    spec_b = _arm_spec(args.spec_b, args.rate_b, DEFAULT_SPEC_B, "b")
    events = sample_pair(spec_a, spec_b, config.horizon or 40.0, config.seed)
    rows = ({"ts": e.ts, "arm": e.arm.value} for e in events)
    with _output(args.output) as out:
        write_rows(rows, ["ts", "arm"], out, args.format)
    return EXIT_OK


def cmd_monitor(args: argparse.Namespace) -> int:
    """Report stream for an event stream; exits 2 when the test rejected"""
    config = _run_config(args)
    if args.single_arm:
        null_spec = load_spec(args.null_spec) if args.null_spec else None
        monitor = SingleArmMonitor(config.phi, config.alpha, null_spec)
        fields = SINGLE_ARM_FIELDS
    else:
        if args.null_spec:
            raise DomainError("--null-spec requires --single-arm")
        monitor = SequentialMonitor(config.phi, config.alpha)
        fields = REPORT_FIELDS
    with _input(args.input) as source, _output(args.output) as out:
        reports = monitor.run(read_events(source, args.input_format or args.format),
                              grid_step=config.grid_step, horizon=config.horizon)
        write_rows((r.to_row() for r in reports), fields, out, args.format)
    rejected = monitor.rejected_at is not None if args.single_arm else monitor.rejected
    if rejected:
        logger.info("null rejected within the monitored window")
        return EXIT_REJECTED
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    """Growth-rate trajectories of the three equality tests with their limits"""
    config = _run_config(args)
    spec_a = _arm_spec(args.spec_a, args.rate_a, {"kind": "constant", "rate": 0.5}, "a")
    spec_b = _arm_spec(args.spec_b, args.rate_b, {"kind": "constant", "rate": 5.0}, "b")
    limits = growth_limits(spec_a, spec_b)
    logger.info(f"theoretical limits: {limits.model_dump()}")
    table = growth_trajectories(
        spec_a, spec_b, config.horizon or 2000.0, config.reps, config.seed,
        grid_step=config.grid_step, phi=config.phi, workers=config.workers,
    )
    table["limit_equality"] = limits.equality
    table["limit_bernoulli"] = limits.bernoulli
    table["limit_gaussian"] = limits.gaussian
    with _output(args.output) as out:
        write_rows(table.to_dict(orient="records"), GROWTH_FIELDS + LIMIT_FIELDS, out, args.format)
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace) -> int:
    """Monte Carlo miscoverage of the univariate confidence process"""
    config = _run_config(args)
    spec = load_spec(args.spec) if args.spec else ConstantIntensity(rate=1.0)
    summary = coverage_run(
        spec, config.horizon or 200.0, config.reps, config.seed,
        phi=config.phi, alpha=config.alpha, grid_step=config.grid_step, workers=config.workers,
    )
    with _output(args.output) as out:
        out.write(json.dumps(summary.model_dump()) + "\n")
    return EXIT_OK


def cmd_interval(args: argparse.Namespace) -> int:
    """Intervals, e-value and p-value for fixed counts"""
    q = JointQuery(n_a=args.n_a, n_b=args.n_b, phi=args.phi, alpha=args.alpha)
    log_e = log_e_process(q.n_a, q.n_b, q.phi)
    state = MonitorState(n_a=q.n_a, n_b=q.n_b, phi=q.phi, alpha=q.alpha, log_e=log_e, log_e_peak=max(0.0, log_e))
    row = report(state).to_row()
    total = sum_interval(q)
    row.update({"lo_sum": total.lower, "hi_sum": total.upper})
    with _output(args.output) as out:
        out.write(json.dumps(row) + "\n")
    return EXIT_REJECTED if row["rejected"] else EXIT_OK


# --- Parser -------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--phi", type=float, default=settings.DEFAULT_PHI, help="mixture precision (default %(default)s)")
    parser.add_argument("--alpha", type=float, default=settings.DEFAULT_ALPHA, help="error level (default %(default)s)")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="RNG seed (env ARRIVALS_SEED)")
    parser.add_argument("--format", choices=["ndjson", "csv"], default=settings.DEFAULT_FORMAT)
    parser.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")


def _two_arms(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec-a", default=None, help="intensity spec of arm A: JSON file or inline JSON")
    parser.add_argument("--spec-b", default=None, help="intensity spec of arm B: JSON file or inline JSON")
    parser.add_argument("--rate-a", type=float, default=None, help="constant rate of arm A")
    parser.add_argument("--rate-b", type=float, default=None, help="constant rate of arm B")


def _replications(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--reps", type=int, default=settings.DEFAULT_REPS)
    parser.add_argument("--workers", type=int, default=settings.MAX_WORKERS, help="process-pool size for replications")
    parser.add_argument("--grid-step", type=float, default=settings.DEFAULT_GRID_STEP)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arrivals", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="sample a merged two-arm event stream")
    _common(simulate)
    _two_arms(simulate)
    simulate.add_argument("--horizon", type=float, default=40.0)
    simulate.set_defaults(func=cmd_simulate)

    monitor = commands.add_parser("monitor", help="anytime-valid reports for an event stream")
    _common(monitor)
    monitor.add_argument("input", nargs="?", default="-", help="event stream (default stdin)")
    monitor.add_argument("--input-format", choices=["ndjson", "csv"], default=None,
                         help="format of the input stream (default --format)")
    monitor.add_argument("--horizon", type=float, default=None)
    monitor.add_argument("--grid-step", type=float, default=settings.DEFAULT_GRID_STEP)
    monitor.add_argument("--single-arm", action="store_true", help="treat the stream as one arm")
    monitor.add_argument("--null-spec", default=None, help="null intensity for the single-arm test")
    monitor.set_defaults(func=cmd_monitor)

    compare = commands.add_parser("compare", help="growth trajectories of the equality tests")
    _common(compare)
    _two_arms(compare)
    _replications(compare)
    compare.add_argument("--horizon", type=float, default=2000.0)
    compare.set_defaults(func=cmd_compare)

    coverage = commands.add_parser("coverage", help="time-uniform coverage of the confidence process")
    _common(coverage)
    _replications(coverage)
    coverage.add_argument("--spec", default=None, help="true intensity (default constant rate 1)")
    coverage.add_argument("--horizon", type=float, default=200.0)
    coverage.set_defaults(func=cmd_coverage)

    interval = commands.add_parser("interval", help="intervals and e-value for fixed counts")
    _common(interval)
    interval.add_argument("--n-a", type=int, required=True)
    interval.add_argument("--n-b", type=int, required=True)
    interval.set_defaults(func=cmd_interval)
    return parser


def _configure_logging(level: Optional[str]) -> None:
    if settings.DEBUG_MODE:
        level = "DEBUG"
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    try:
        return args.func(args)
    except (ArrivalsError, ValidationError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
