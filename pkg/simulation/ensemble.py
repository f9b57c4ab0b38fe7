"""
Monte Carlo collapse statistics: a uniform grid of mean angles on [0, pi],
many noisy trials per angle, fraction Up compared against cos^2(theta/2).
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict

from simulation.trajectory import Outcome, simulate
from spin_types.errors import EmptySweepError, SpinSimError, TrialFailure
from spin_types.types import IntegratorConfig, ModelParams, RunConfig, SweepConfig

logger = logging.getLogger(__name__)


class AngleStat(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_theta: float
    n_up: int
    n_down: int
    n_unsettled: int
    fraction_up: Optional[float]  # None when every trial was Unsettled
    predicted: float
    residual: Optional[float]

    @property
    def n_trials(self) -> int:
        return self.n_up + self.n_down + self.n_unsettled

    @property
    def n_settled(self) -> int:
        return self.n_up + self.n_down

    @property
    def fraction_down(self) -> Optional[float]:
        return None if self.fraction_up is None else self.n_down / self.n_settled

    @property
    def predicted_down(self) -> float:
        return predicted_down(self.mean_theta)


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    stats: List[AngleStat]
    rms_residual: Optional[float]
    sweep: SweepConfig
    params: ModelParams
    run: RunConfig
    wall_time: float

    @property
    def n_unsettled(self) -> int:
        return sum(s.n_unsettled for s in self.stats)

    @property
    def unsettled_rate(self) -> float:
        total = sum(s.n_trials for s in self.stats)
        return self.n_unsettled / total if total else 0.0


@dataclass(frozen=True)
class TrialResult:
    angle_index: int
    trial_index: int
    outcome: Optional[Outcome]
    error: Optional[str] = None


def derive_trial_seed(base_seed: int, angle_index: int, trial_index: int) -> int:
    """Independent 64-bit seed per (angle, trial), via SeedSequence spawn keys"""
    if angle_index < 0 or trial_index < 0:
        raise ValueError(f"indices must be nonnegative, got ({angle_index}, {trial_index})")
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=(angle_index, trial_index))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def predicted_up(mean_theta: float) -> float:
    """Spin-up probability cos^2(theta / 2)"""
    return math.cos(mean_theta / 2.0) ** 2


def predicted_down(mean_theta: float) -> float:
    """Spin-down probability sin^2(theta / 2)"""
    return math.sin(mean_theta / 2.0) ** 2


def _rms_over(stats: Sequence[AngleStat]) -> Optional[float]:
    residuals = [s.residual for s in stats if s.residual is not None]
    if not residuals:
        return None
    return math.sqrt(sum(r * r for r in residuals) / len(residuals))


def rms_residual(result: SweepResult) -> float:
    """Root-mean-square of fraction_up - predicted over angles with a defined fraction"""
    value = _rms_over(result.stats)
    if value is None:
        raise EmptySweepError("every trial of the sweep ended Unsettled; no fraction is defined")
    return value


def _run_trial(
    angle_index: int,
    trial_index: int,
    mean_theta: float,
    seed: int,
    params: ModelParams,
    run: RunConfig,
    integrator: IntegratorConfig,
) -> TrialResult:
    # failures travel back as data so worker processes never pickle exceptions
    try:
        record = simulate(mean_theta, seed, params, run, record_samples=False, integrator=integrator)
    except SpinSimError as e:
        return TrialResult(angle_index, trial_index, None, f"{type(e).__name__}: {e}")
    return TrialResult(angle_index, trial_index, record.outcome)


def build_angle_stat(mean_theta: float, n_up: int, n_down: int, n_unsettled: int) -> AngleStat:
    predicted = predicted_up(mean_theta)
    settled = n_up + n_down
    fraction = n_up / settled if settled else None
    return AngleStat(
        mean_theta=mean_theta,
        n_up=n_up,
        n_down=n_down,
        n_unsettled=n_unsettled,
        fraction_up=fraction,
        predicted=predicted,
        residual=None if fraction is None else fraction - predicted,
    )


def run_sweep(
    sweep: SweepConfig,
    params: ModelParams,
    run: RunConfig,
    integrator: Optional[IntegratorConfig] = None,
) -> SweepResult:
    """
    Simulate trials_per_angle noisy runs at every grid angle and tally outcomes.

    Each trial gets its own derived seed, so the result does not depend on
    parallelism or scheduling. Unsettled trials are counted, not fatal.
    """
    integrator = integrator or IntegratorConfig()
    angles = sweep.angle_grid()
    n_angles, n_trials = sweep.n_angles, sweep.trials_per_angle
    logger.info(
        f"Sweep: {n_angles} angles x {n_trials} trials = {n_angles * n_trials} simulations on "
        f"{sweep.parallelism} worker(s), {params.rows}x{params.cols} {params.ordering} lattice"
    )
    started = time.perf_counter()

    results = Parallel(n_jobs=sweep.parallelism)(
        delayed(_run_trial)(
            m, r, float(angles[m]), derive_trial_seed(sweep.base_seed, m, r), params, run, integrator
        )
        for m in range(n_angles)
        for r in range(n_trials)
    )

    counts = np.zeros((n_angles, 3), dtype=np.int64)
    column = {Outcome.UP: 0, Outcome.DOWN: 1, Outcome.UNSETTLED: 2}
    for res in results:
        if res.error is not None:
            raise TrialFailure(res.error, res.angle_index, res.trial_index, float(angles[res.angle_index]))
        counts[res.angle_index, column[res.outcome]] += 1

    stats = []
    for m in range(n_angles):
        n_up, n_down, n_unsettled = (int(c) for c in counts[m])
        stat = build_angle_stat(float(angles[m]), n_up, n_down, n_unsettled)
        if n_unsettled:
            logger.warning(f"{n_unsettled} of {n_trials} trials unsettled at mean_theta={stat.mean_theta:.6f}")
        logger.info(f"mean_theta={stat.mean_theta:.6f} up={n_up} down={n_down} unsettled={n_unsettled}")
        stats.append(stat)

    wall_time = time.perf_counter() - started
    rms = _rms_over(stats)
    logger.info(f"Sweep finished in {wall_time:.1f}s, rms residual {'n/a' if rms is None else f'{rms:.4f}'}")
    return SweepResult(
        stats=stats,
        rms_residual=rms,
        sweep=sweep,
        params=params,
        run=run,
        wall_time=wall_time,
    )
