"""
Adaptive Dormand-Prince 5(4) Runge-Kutta integration of y' = f(t, y).

The 5th-order solution is propagated (local extrapolation) and the embedded
4th-order solution only feeds the error estimate. The last stage of an accepted
step is the first stage of the next one (FSAL).
"""
import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from spin_types.errors import NonFiniteStateError, StepSizeUnderflowError
from spin_types.types import IntegratorConfig

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]
Observer = Callable[[float, np.ndarray], None]
StopPredicate = Callable[[float, np.ndarray], bool]
Magnitude = Callable[[np.ndarray], np.ndarray]
Switches = Callable[[np.ndarray], np.ndarray]

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

# step-change limits per attempt
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepResult(NamedTuple):
    y_next: np.ndarray
    error_estimate: float
    f_next: np.ndarray


@dataclass(frozen=True)
class StepStats:
    accepted_steps: int
    rejected_steps: int
    rhs_evaluations: int
    final_time: float
    h_next: float


def _check_finite(values: np.ndarray, what: str, t: float) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteStateError(f"non-finite {what} at t={t!r}")


def dp45_step(
    rhs: Rhs,
    t: float,
    y: np.ndarray,
    h: float,
    config: IntegratorConfig,
    f0: Optional[np.ndarray] = None,
    magnitude: Optional[Magnitude] = None,
) -> StepResult:
    """
    One Dormand-Prince step of size h.

    error_estimate is the RMS over components of (y5 - y4) scaled by
    abs_tol + rel_tol * max(|y|, |y_next|); a step is acceptable when it is <= 1.
    magnitude(y) replaces |y| as the per-component size for the relative part.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h!r}")
    y = np.asarray(y, dtype=float)
    _check_finite(y, "state", t)

    k = np.empty((7, y.size))
    k[0] = rhs(t, y) if f0 is None else f0
    _check_finite(k[0], "derivative", t)
    for stage in range(1, 6):
        k[stage] = rhs(t + C[stage] * h, y + h * (A[stage, :stage] @ k[:stage]))
    y_next = y + h * (B5[:6] @ k[:6])
    _check_finite(y_next, "state", t + h)
    k[6] = rhs(t + h, y_next)
    _check_finite(k[6], "derivative", t + h)

    size = np.abs if magnitude is None else magnitude
    scale = config.abs_tol + config.rel_tol * np.maximum(size(y), size(y_next))
    err = h * (E @ k) / scale
    error_estimate = float(np.sqrt(np.mean(err ** 2))) if err.size else 0.0
    return StepResult(y_next, error_estimate, k[6])


def _step_factor(error_estimate: float, safety: float) -> float:
    if error_estimate == 0.0:
        return MAX_FACTOR
    return min(MAX_FACTOR, max(MIN_FACTOR, safety * error_estimate ** -0.2))


def integrate(
    rhs: Rhs,
    t0: float,
    y0: np.ndarray,
    t_end: float,
    config: IntegratorConfig,
    observer: Optional[Observer] = None,
    stop: Optional[StopPredicate] = None,
    magnitude: Optional[Magnitude] = None,
    switches: Optional[Switches] = None,
) -> Tuple[np.ndarray, StepStats]:
    """
    Adaptive integration from t0 to exactly t_end.

    observer(t, y) sees every accepted step; stop(t, y) returning True ends the
    run right after that step. Raises StepSizeUnderflowError when a step at h_min
    is still rejected.

    For a piecewise-smooth rhs, switches(y) labels the smooth piece y lies in.
    A step that changes the label is retried at half the bracket to the crossing
    until it is h_min long; that last step is taken without error control.
    """
    if t_end < t0:
        raise ValueError(f"t_end ({t_end!r}) must not precede t0 ({t0!r})")

    t = float(t0)
    y = np.array(y0, dtype=float)
    h = min(max(config.h_init, config.h_min), config.h_max)
    accepted = rejected = 0
    n_eval = 0
    crossings = 0
    f = None
    piece = None if switches is None else switches(y)
    # end of the shortest step known to leave the current piece
    bracket: Optional[float] = None

    while t < t_end:
        if bracket is not None:
            h = min(h, max(0.5 * (bracket - t), config.h_min))
        remaining = t_end - t
        landing = h >= remaining
        h_step = remaining if landing else h

        if f is None:
            f = rhs(t, y)
            n_eval += 1
        step = dp45_step(rhs, t, y, h_step, config, f, magnitude)
        n_eval += 6

        crossing = False
        if piece is not None:
            next_piece = switches(step.y_next)
            crossing = not np.array_equal(next_piece, piece)
            if crossing and h_step > config.h_min:
                rejected += 1
                bracket = t + h_step
                continue

        factor = _step_factor(step.error_estimate, config.safety)
        if crossing or step.error_estimate <= 1.0:
            t = t_end if landing else t + h_step
            y = step.y_next
            f = step.f_next
            accepted += 1
            if crossing:
                piece, bracket = next_piece, None
                crossings += 1
            elif bracket is not None and t >= bracket:
                bracket = None
            # a truncated landing step says nothing about the step the flow allows
            h_proposed = h_step * factor
            if h_step < h:
                h_proposed = max(h, h_proposed)
            h = min(max(h_proposed, config.h_min), config.h_max)
            if observer is not None:
                observer(t, y)
            if stop is not None and stop(t, y):
                break
        else:
            rejected += 1
            if h_step <= config.h_min:
                raise StepSizeUnderflowError(
                    f"step size underflow at t={t!r}: h={h_step!r} still gives "
                    f"error estimate {step.error_estimate:.3e}",
                    t=t,
                    h=h_step,
                )
            h = min(max(h_step * factor, config.h_min), config.h_max)

    stats = StepStats(accepted, rejected, n_eval, t, h)
    logger.debug(
        f"integrated to t={t}: {accepted} accepted, {rejected} rejected, "
        f"{crossings} switch crossing(s), {n_eval} rhs evaluations"
    )
    return y, stats
