"""
Acceptance checks of a sweep against cos^2(theta/2): rms residual, endpoints,
Unsettled rate, monotonic trend and mirror symmetry.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List

from simulation.ensemble import SweepResult

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.07
ENDPOINT_UP_MIN = 0.97
ENDPOINT_DOWN_MAX = 0.03
UNSETTLED_RATE_MAX = 0.02
MAX_ADJACENT_INCREASE = 0.10
MIRROR_SIGMAS = 3.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _fmt(value) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def check_rms(result: SweepResult, threshold: float) -> CheckResult:
    rms = result.rms_residual
    passed = rms is not None and rms < threshold
    return CheckResult("rms_residual", passed, f"rms residual {_fmt(rms)} (must be below {threshold})")


def check_endpoints(result: SweepResult) -> List[CheckResult]:
    first, last = result.stats[0], result.stats[-1]
    up_ok = first.fraction_up is not None and first.fraction_up >= ENDPOINT_UP_MIN
    down_ok = last.fraction_up is not None and last.fraction_up <= ENDPOINT_DOWN_MAX
    return [
        CheckResult("endpoint_up", up_ok, f"fraction_up at theta=0 is {_fmt(first.fraction_up)} (>= {ENDPOINT_UP_MIN})"),
        CheckResult("endpoint_down", down_ok, f"fraction_up at theta=pi is {_fmt(last.fraction_up)} (<= {ENDPOINT_DOWN_MAX})"),
    ]


def check_unsettled(result: SweepResult) -> CheckResult:
    rate = result.unsettled_rate
    return CheckResult(
        "unsettled_rate",
        rate <= UNSETTLED_RATE_MAX,
        f"{result.n_unsettled} unsettled trial(s), rate {rate:.4f} (<= {UNSETTLED_RATE_MAX})",
    )


def check_monotonic(result: SweepResult) -> CheckResult:
    if len(result.stats) < 3:
        return CheckResult("monotonic", True, "vacuous on a two-angle grid")
    worst = 0.0
    worst_at = None
    defined = [s for s in result.stats if s.fraction_up is not None]
    for prev, cur in zip(defined, defined[1:]):
        rise = cur.fraction_up - prev.fraction_up
        if rise > worst:
            worst, worst_at = rise, cur.mean_theta
    detail = f"largest adjacent increase {worst:.4f} (<= {MAX_ADJACENT_INCREASE})"
    if worst_at is not None:
        detail += f" at theta={worst_at:.4f}"
    return CheckResult("monotonic", worst <= MAX_ADJACENT_INCREASE, detail)


def check_mirror(result: SweepResult) -> CheckResult:
    """fraction_up(theta) + fraction_up(pi - theta) = 1 within 3 binomial sigmas plus one count"""
    stats = result.stats
    if len(stats) < 3:
        return CheckResult("mirror_symmetry", True, "vacuous on a two-angle grid")
    failures = []
    pairs = 0
    for m in range(len(stats) // 2):
        a, b = stats[m], stats[-1 - m]
        if a.fraction_up is None or b.fraction_up is None:
            continue
        pairs += 1
        sigma = math.sqrt(
            a.fraction_up * (1 - a.fraction_up) / a.n_settled + b.fraction_up * (1 - b.fraction_up) / b.n_settled
        )
        slack = MIRROR_SIGMAS * sigma + 1.0 / min(a.n_settled, b.n_settled)
        gap = abs(a.fraction_up + b.fraction_up - 1.0)
        if gap > slack:
            failures.append(f"theta={a.mean_theta:.4f}: gap {gap:.4f} > {slack:.4f}")
    if failures:
        return CheckResult("mirror_symmetry", False, "; ".join(failures))
    return CheckResult("mirror_symmetry", True, f"{pairs} mirrored pair(s) within tolerance")


def run_checks(result: SweepResult, threshold: float = DEFAULT_THRESHOLD) -> List[CheckResult]:
    checks = [check_rms(result, threshold), *check_endpoints(result), check_unsettled(result),
              check_monotonic(result), check_mirror(result)]
    for check in checks:
        if not check.passed:
            logger.warning(f"Check {check.name} failed: {check.detail}")
    return checks


def render_report(result: SweepResult, checks: List[CheckResult]) -> str:
    sweep, params = result.sweep, result.params
    passed = all(c.passed for c in checks)
    lines = [
        "Collapse statistics validation",
        f"  {params.ordering} lattice {params.rows}x{params.cols}, a={params.spring_a}, k={params.spring_k}, "
        f"mu={params.mu}, B={params.field_b}, I={params.inertia}, b={params.dissipation_b}",
        f"  {sweep.n_angles} angles x {sweep.trials_per_angle} trials, base seed {sweep.base_seed}, "
        f"noise +-{result.run.noise_amp} rad, t_diss={result.run.t_diss}",
        "",
    ]
    for check in checks:
        lines.append(f"  [{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")
    lines += ["", f"Result: {'PASS' if passed else 'FAIL'}"]
    return "\n".join(lines) + "\n"
