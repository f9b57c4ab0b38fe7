"""
A single collapse experiment: noisy start around a mean angle, free chaotic
evolution until t_diss, then damped evolution until every component settles
at 0 or pi, classified Up or Down by the net moment along the field.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from integrator.dormand_prince import integrate
from spin_model.lattice import LatticeState
from spin_model.model import LatticeDynamics
from spin_types.types import IntegratorConfig, ModelParams, RunConfig

logger = logging.getLogger(__name__)

# |sum cos theta| per site below this is treated as no net moment
MOMENT_TOL = 1e-9


class Outcome(str, enum.Enum):
    UP = "Up"
    DOWN = "Down"
    UNSETTLED = "Unsettled"


@dataclass(frozen=True, eq=False)
class TrajectorySample:
    t: float
    theta: np.ndarray
    omega: np.ndarray
    energy: float


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    samples: Tuple[TrajectorySample, ...]
    outcome: Outcome
    settle_time: Optional[float]
    final_time: float
    final_state: LatticeState


def segment_ends(start: float, stop: float, dt: float) -> List[float]:
    """Grid points start + k*dt strictly inside (start, stop), then stop itself"""
    if stop <= start:
        return []
    count = max(1, int(math.ceil((stop - start) / dt - 1e-9)))
    return [start + k * dt for k in range(1, count)] + [stop]


def init_state(mean_theta: float, noise_amp: float, seed: int, params: ModelParams) -> LatticeState:
    """theta_i = mean + U(-noise_amp, noise_amp) from a Philox stream keyed by seed; omega = 0"""
    if not 0.0 <= mean_theta <= math.pi:
        raise ValueError(f"mean_theta must lie in [0, pi], got {mean_theta!r}")
    if noise_amp < 0:
        raise ValueError(f"noise_amp must be nonnegative, got {noise_amp!r}")
    rng = np.random.Generator(np.random.Philox(seed))
    theta = mean_theta + rng.uniform(-noise_amp, noise_amp, size=params.n_sites)
    return LatticeState(theta, np.zeros(params.n_sites))


def net_moment(state: LatticeState) -> float:
    """Moment along the field, sum cos theta_i"""
    return float(np.sum(np.cos(state.theta)))


def classify(state: LatticeState) -> Outcome:
    moment = net_moment(state)
    tol = MOMENT_TOL * state.n_sites
    if moment > tol:
        return Outcome.UP
    if moment < -tol:
        return Outcome.DOWN
    return Outcome.UNSETTLED


def _settled(theta: np.ndarray, omega: np.ndarray, run: RunConfig) -> bool:
    if omega.size and np.max(np.abs(omega)) >= run.omega_tol:
        return False
    # distance to the nearest multiple of pi, i.e. to 0 or pi mod 2 pi
    rest = np.remainder(theta, np.pi)
    distance = np.minimum(rest, np.pi - rest)
    return bool(np.all(distance <= run.theta_tol))


def is_settled(state: LatticeState, run: RunConfig) -> bool:
    """Every |omega| below omega_tol and every angle within theta_tol of 0 or pi"""
    return _settled(state.theta, state.omega, run)


def evolve(
    initial: LatticeState,
    params: ModelParams,
    run: RunConfig,
    record_samples: bool = False,
    integrator: Optional[IntegratorConfig] = None,
) -> TrajectoryRecord:
    """
    Run the dissipation schedule from an explicit initial state.

    Integration always proceeds in sample_dt segments, so the trajectory does not
    depend on whether samples are kept. Settling is checked at t_diss and after
    every accepted step of the damped phase.
    """
    integrator = integrator or IntegratorConfig()
    dynamics = LatticeDynamics(params)
    n = dynamics.n_sites
    if initial.n_sites != n:
        raise ValueError(f"initial state has {initial.n_sites} sites, lattice has {n}")

    samples: List[TrajectorySample] = []

    def record(t: float, y: np.ndarray) -> None:
        if record_samples:
            theta, omega = y[:n].copy(), y[n:].copy()
            samples.append(TrajectorySample(t, theta, omega, dynamics.energy(theta, omega)))

    def settled(t: float, y: np.ndarray) -> bool:
        return _settled(y[:n], y[n:], run)

    t = 0.0
    h = integrator.h_init
    y = initial.to_vector()
    record(t, y)
    switches = dynamics.winding if dynamics.has_kinks else None

    free = dynamics.rhs(dissipation_on=False)
    for t_next in segment_ends(0.0, run.t_diss, run.sample_dt):
        y, stats = integrate(free, t, y, t_next, integrator.model_copy(update={"h_init": h}),
                             magnitude=dynamics.magnitude, switches=switches)
        t, h = stats.final_time, stats.h_next
        record(t, y)

    settle_time = t if settled(t, y) else None
    if settle_time is None:
        damped = dynamics.rhs(dissipation_on=True)
        for t_next in segment_ends(run.t_diss, run.t_end, run.sample_dt):
            y, stats = integrate(
                damped, t, y, t_next, integrator.model_copy(update={"h_init": h}), stop=settled,
                magnitude=dynamics.magnitude, switches=switches,
            )
            t, h = stats.final_time, stats.h_next
            record(t, y)
            if settled(t, y):
                settle_time = t
                break

    final_state = LatticeState.from_vector(y)
    if settle_time is None:
        outcome = Outcome.UNSETTLED
        logger.debug(f"run reached t_end={t} without settling")
    else:
        outcome = classify(final_state)
        logger.debug(f"settled at t={settle_time} as {outcome.value}")
    return TrajectoryRecord(tuple(samples), outcome, settle_time, t, final_state)


def simulate(
    mean_theta: float,
    seed: int,
    params: ModelParams,
    run: RunConfig,
    record_samples: bool = False,
    integrator: Optional[IntegratorConfig] = None,
) -> TrajectoryRecord:
    """One collapse experiment around mean_theta; (mean_theta, seed, configs) fix the result"""
    initial = init_state(mean_theta, run.noise_amp, seed, params)
    return evolve(initial, params, run, record_samples, integrator)
