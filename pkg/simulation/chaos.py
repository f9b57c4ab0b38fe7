"""
Sensitivity to initial conditions: two nearby trajectories integrated side by
side, ln|dZ(t)| sampled on a grid, and the largest Lyapunov exponent fitted as
the slope of ln|dZ| against t before the separation saturates.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from integrator.dormand_prince import integrate
from simulation.trajectory import init_state, segment_ends
from spin_model.lattice import LatticeState
from spin_model.model import LatticeDynamics, wrap_angle
from spin_types.errors import DegenerateSeparationError, FitWindowError
from spin_types.types import DivergenceConfig, IntegratorConfig, ModelParams, RunConfig

logger = logging.getLogger(__name__)

# divergence runs integrate with tolerances at most this times delta0
TOLERANCE_PER_DELTA0 = 1e-4
# and never below this
TOLERANCE_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class DivergenceSeries:
    times: np.ndarray
    ln_separation: np.ndarray
    # renormalized series hold accumulated growth, so they never saturate
    renormalized: bool = False

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    exponent: float
    r_squared: float
    series: DivergenceSeries
    saturated_at: Optional[float]
    fit_window: Tuple[float, float]
    fit_points: int


def _difference(ya: np.ndarray, yb: np.ndarray, n: int) -> np.ndarray:
    return np.concatenate((wrap_angle(ya[:n] - yb[:n]), ya[n:] - yb[n:]))


def phase_separation(a: LatticeState, b: LatticeState) -> float:
    """Euclidean norm of the (theta, omega) difference with angle differences wrapped"""
    if a.n_sites != b.n_sites:
        raise ValueError(f"states differ in size: {a.n_sites} vs {b.n_sites}")
    return float(np.linalg.norm(_difference(a.to_vector(), b.to_vector(), a.n_sites)))


def divergence_tolerances(integrator: IntegratorConfig, delta0: float) -> IntegratorConfig:
    """Tighten abs_tol and rel_tol so integration error stays small against the separation"""
    cap = max(TOLERANCE_FLOOR, TOLERANCE_PER_DELTA0 * delta0)
    tightened = integrator.model_copy(update={
        "abs_tol": min(integrator.abs_tol, cap),
        "rel_tol": min(integrator.rel_tol, cap),
    })
    if tightened != integrator:
        logger.debug(f"divergence run tolerances tightened to {tightened.abs_tol:g}/{tightened.rel_tol:g}")
    return tightened


def divergence_series(
    mean_theta: float,
    seed: int,
    params: ModelParams,
    cfg: DivergenceConfig,
    run: RunConfig,
    integrator: Optional[IntegratorConfig] = None,
) -> DivergenceSeries:
    """
    Sample ln|dZ| every sample_dt up to t_max for a reference run and a companion
    displaced by delta0 in the angle of site 0.

    Both copies are advanced as one joint system so they share every step size,
    with tolerances tied to delta0 (see divergence_tolerances). Damping stays
    off unless cfg.dissipative.
    """
    if not cfg.delta0 > 0:
        raise DegenerateSeparationError(f"delta0 must be positive, got {cfg.delta0!r}")
    integrator = divergence_tolerances(integrator or IntegratorConfig(), cfg.delta0)
    dynamics = LatticeDynamics(params)
    n = dynamics.n_sites
    m = 2 * n

    def magnitude(y: np.ndarray) -> np.ndarray:
        return np.concatenate((dynamics.magnitude(y[:m]), dynamics.magnitude(y[m:])))

    def winding(y: np.ndarray) -> np.ndarray:
        return np.concatenate((dynamics.winding(y[:m]), dynamics.winding(y[m:])))

    switches = winding if dynamics.has_kinks else None

    reference = init_state(mean_theta, run.noise_amp, seed, params)
    companion_theta = reference.theta.copy()
    companion_theta[0] += cfg.delta0

    f = dynamics.rhs(dissipation_on=cfg.dissipative)

    def joint(t: float, y: np.ndarray) -> np.ndarray:
        return np.concatenate((f(t, y[:m]), f(t, y[m:])))

    y = np.concatenate((reference.to_vector(), companion_theta, reference.omega))
    separation = float(np.linalg.norm(_difference(y[:m], y[m:], n)))
    if separation == 0.0:
        raise DegenerateSeparationError("initial separation is zero; ln|dZ| would be -inf")

    times = [0.0]
    values = [math.log(cfg.delta0) if cfg.renormalize else math.log(separation)]
    growth = 0.0
    t, h = 0.0, integrator.h_init

    for t_next in segment_ends(0.0, cfg.t_max, cfg.sample_dt):
        y, stats = integrate(joint, t, y, t_next, integrator.model_copy(update={"h_init": h}),
                             magnitude=magnitude, switches=switches)
        t, h = stats.final_time, stats.h_next
        diff = _difference(y[:m], y[m:], n)
        separation = float(np.linalg.norm(diff))
        if separation == 0.0:
            raise DegenerateSeparationError(f"trajectories coincide at t={t!r}; ln|dZ| would be -inf")
        if cfg.renormalize:
            growth += math.log(separation / cfg.delta0)
            y[m:] = y[:m] + diff * (cfg.delta0 / separation)
            values.append(math.log(cfg.delta0) + growth)
        else:
            values.append(math.log(separation))
        times.append(t)

    logger.debug(f"divergence series: {len(times)} samples up to t={t}")
    return DivergenceSeries(np.array(times), np.array(values), renormalized=cfg.renormalize)


def saturation_time(series: DivergenceSeries, cap: float) -> Optional[float]:
    """First sample time at which the separation exceeds cap"""
    if series.renormalized:
        return None
    over = np.nonzero(series.ln_separation > math.log(cap))[0]
    return float(series.times[over[0]]) if over.size else None


def fit_lyapunov(series: DivergenceSeries, cfg: DivergenceConfig) -> LyapunovEstimate:
    """Least-squares slope of ln|dZ| vs t over the fit window, stopping at saturation"""
    t, v = series.times, series.ln_separation
    saturated_at = saturation_time(series, cfg.saturation_cap)

    in_window = (t >= cfg.fit_t_start) & (t <= cfg.fit_t_end)
    usable = in_window.copy()
    if saturated_at is not None:
        usable &= t < saturated_at
    n_points = int(np.count_nonzero(usable))
    if n_points < 3:
        if np.count_nonzero(in_window) >= 3:
            raise FitWindowError(
                f"separation saturates at t={saturated_at!r}, leaving {n_points} "
                f"sample(s) in [{cfg.fit_t_start}, {cfg.fit_t_end}]"
            )
        raise FitWindowError(
            f"fit window [{cfg.fit_t_start}, {cfg.fit_t_end}] holds {n_points} sample(s), need at least 3"
        )

    tt, vv = t[usable], v[usable]
    slope, intercept = np.polyfit(tt, vv, 1)
    ss_res = float(np.sum((vv - (slope * tt + intercept)) ** 2))
    ss_tot = float(np.sum((vv - np.mean(vv)) ** 2))
    # a flat series is fitted perfectly by a flat line
    if ss_tot <= np.finfo(float).eps * max(1.0, float(np.sum(vv ** 2))):
        r_squared = 1.0
    else:
        r_squared = max(0.0, 1.0 - ss_res / ss_tot)

    if saturated_at is not None:
        logger.warning(f"separation saturated at t={saturated_at}; fit stops there")
    return LyapunovEstimate(
        exponent=float(slope),
        r_squared=r_squared,
        series=series,
        saturated_at=saturated_at,
        fit_window=(cfg.fit_t_start, cfg.fit_t_end),
        fit_points=n_points,
    )


def measure_lyapunov(
    mean_theta: float,
    seed: int,
    params: ModelParams,
    cfg: DivergenceConfig,
    run: RunConfig,
    integrator: Optional[IntegratorConfig] = None,
) -> LyapunovEstimate:
    return fit_lyapunov(divergence_series(mean_theta, seed, params, cfg, run, integrator), cfg)
