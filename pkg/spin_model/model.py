"""
Torques, equations of motion and energy of the planar multi-body spin.

Sign convention: a positive torque increases theta (rotation about +y carries
+z toward +x). Every spin lives in the x-z plane, n_i = (sin theta_i, 0, cos theta_i).
"""
import logging
from typing import Callable, Iterable, Optional, Union

import numpy as np

from spin_model.lattice import LatticeState, NeighborTable, build_neighbor_table
from spin_types.errors import ConfigError, DegenerateChordError
from spin_types.types import ModelParams

logger = logging.getLogger(__name__)

# below this chord the oracle refuses to pick a spring direction
ORACLE_MIN_CHORD = 1e-12

Angle = Union[float, np.ndarray]
Rhs = Callable[[float, np.ndarray], np.ndarray]


def wrap_angle(x: Angle) -> Angle:
    """Map angles onto [-pi, pi)"""
    return np.remainder(np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def _sin_double_angle(theta: Angle) -> np.ndarray:
    # sin(2 theta) reduced by quadrant, so multiples of pi/2 give exactly 0
    quadrant, rest = np.divmod(np.asarray(theta, dtype=float), np.pi / 2.0)
    sign = np.where(np.fmod(quadrant, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(2.0 * rest)


def _cos_double_angle(theta: Angle) -> np.ndarray:
    quadrant, rest = np.divmod(np.asarray(theta, dtype=float), np.pi / 2.0)
    sign = np.where(np.fmod(quadrant, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.cos(2.0 * rest)


def _as_output(value: np.ndarray, like: Angle) -> Angle:
    return float(value) if np.ndim(like) == 0 else value


def _field_torque(theta: np.ndarray, mu_b: float) -> np.ndarray:
    return -mu_b * _sin_double_angle(theta)


def _pair_torque(theta_j: np.ndarray, theta_i: np.ndarray, mu: float, k: float, a: float) -> np.ndarray:
    # |mu| k (d - a) sin(delta) / d with sin(delta) / d = sign(s) cos(delta / 2),
    # s = sin(delta / 2); sign(0) = 0 gives the coincident-spin convention for free
    half = 0.5 * wrap_angle(theta_i - theta_j)
    s = np.sin(half)
    chord = 2.0 * np.abs(s)
    return mu * k * (chord - a) * np.sign(s) * np.cos(half)


def torque_sc(theta: Angle, params: ModelParams) -> Angle:
    """Semi-classical field torque -mu B sin(2 theta): stable at 0 and pi, unstable at pi/2"""
    return _as_output(_field_torque(np.asarray(theta, dtype=float), params.mu * params.field_b), theta)


def pair_coupling_torque(theta_j: Angle, theta_i: Angle, params: ModelParams) -> Angle:
    """Torque on spin j from the spring to neighbor i, zero when the two coincide"""
    tau = _pair_torque(
        np.asarray(theta_j, dtype=float),
        np.asarray(theta_i, dtype=float),
        params.mu,
        params.spring_k,
        params.spring_a,
    )
    if np.ndim(theta_j) == 0 and np.ndim(theta_i) == 0:
        return float(tau)
    return tau


def torque_nn_vector_oracle(theta_j: float, neighbor_thetas: Iterable[float], params: ModelParams) -> float:
    """
    Nearest-neighbor torque evaluated literally in 3-D Cartesian form:
    |mu| n_j x sum_i k (|n_i - n_j| - a) (n_i - n_j) / |n_i - n_j|, y-component.
    Only meant for cross-checking the closed angle form.
    """
    n_j = np.array([np.sin(theta_j), 0.0, np.cos(theta_j)])
    force = np.zeros(3)
    for theta_i in neighbor_thetas:
        n_i = np.array([np.sin(theta_i), 0.0, np.cos(theta_i)])
        diff = n_i - n_j
        chord = np.linalg.norm(diff)
        if chord < ORACLE_MIN_CHORD:
            raise DegenerateChordError(
                f"neighbor at theta={theta_i!r} coincides with theta_j={theta_j!r} "
                f"(chord {chord:.3e}); spring direction undefined"
            )
        force += params.spring_k * (chord - params.spring_a) * diff / chord
    torque = params.mu * np.cross(n_j, force)
    return float(torque[1])


class LatticeDynamics:
    """Equations of motion of one lattice, with the edge arrays precomputed for speed"""

    def __init__(self, params: ModelParams, table: Optional[NeighborTable] = None):
        self.params = params
        self.table = table if table is not None else build_neighbor_table(params.rows, params.cols)
        if self.table.n_sites != params.n_sites:
            raise ConfigError(
                f"neighbor table has {self.table.n_sites} sites, params describe {params.n_sites}"
            )
        self.n_sites = params.n_sites
        self._mu_b = params.mu * params.field_b
        self._bonds = self.table.bonds()

    def net_torque(self, theta: np.ndarray, omega: np.ndarray, dissipation_on: bool) -> np.ndarray:
        p = self.params
        targets, sources = self.table.targets, self.table.sources
        edge_torque = _pair_torque(theta[targets], theta[sources], p.mu, p.spring_k, p.spring_a)
        torque = _field_torque(theta, self._mu_b) + np.bincount(
            targets, weights=edge_torque, minlength=self.n_sites
        )
        if dissipation_on:
            torque = torque - p.dissipation_b * omega
        return torque

    def derivative(self, y: np.ndarray, dissipation_on: bool) -> np.ndarray:
        n = self.n_sites
        theta, omega = y[:n], y[n:]
        return np.concatenate((omega, self.net_torque(theta, omega, dissipation_on) / self.params.inertia))

    def rhs(self, dissipation_on: bool) -> Rhs:
        """Integrator-ready f(t, y) over the flat vector [theta..., omega...]"""
        def f(t: float, y: np.ndarray) -> np.ndarray:
            return self.derivative(y, dissipation_on)
        return f

    def magnitude(self, y: np.ndarray) -> np.ndarray:
        """
        Per-component size for the integrator's relative tolerance. Angles count
        as one radian whatever their winding; rates count as |omega|. Both are
        unchanged by theta -> pi - theta, omega -> -omega.
        """
        n = self.n_sites
        return np.concatenate((np.ones(n), np.abs(y[n:])))

    @property
    def has_kinks(self) -> bool:
        """The spring torque jumps by 2|mu|k a where two neighbors coincide"""
        p = self.params
        return bool(self._bonds.size) and p.spring_k > 0 and p.spring_a > 0

    def winding(self, y: np.ndarray) -> np.ndarray:
        """floor((theta_i - theta_j) / 2 pi) per bond; the rhs is smooth while it holds"""
        theta = y[:self.n_sites]
        i, j = self._bonds[:, 0], self._bonds[:, 1]
        return np.floor_divide(theta[i] - theta[j], 2.0 * np.pi)

    def energy(self, theta: np.ndarray, omega: np.ndarray) -> float:
        p = self.params
        kinetic = 0.5 * p.inertia * np.sum(omega ** 2)
        field_energy = -0.5 * self._mu_b * np.sum(_cos_double_angle(theta))
        if self._bonds.size:
            i, j = self._bonds[:, 0], self._bonds[:, 1]
            chord = 2.0 * np.abs(np.sin(0.5 * wrap_angle(theta[i] - theta[j])))
            spring_energy = 0.5 * p.mu * p.spring_k * np.sum((chord - p.spring_a) ** 2)
        else:
            spring_energy = 0.0
        return float(kinetic + field_energy + spring_energy)


def eom_rhs(
    state: LatticeState,
    params: ModelParams,
    table: NeighborTable,
    dissipation_on: bool,
) -> LatticeState:
    """Time derivative of a state: theta' = omega, omega' = I^-1 (field + springs - b omega)"""
    if state.n_sites != params.n_sites:
        raise ConfigError(f"state has {state.n_sites} sites, params describe {params.n_sites}")
    dynamics = LatticeDynamics(params, table)
    torque = dynamics.net_torque(state.theta, state.omega, dissipation_on)
    return LatticeState(state.omega.copy(), torque / params.inertia)


def total_energy(state: LatticeState, params: ModelParams, table: NeighborTable) -> float:
    """
    Kinetic + field + spring energy:
    sum 1/2 I w^2 - (mu B / 2) cos(2 theta) + sum over bonds 1/2 |mu| k (chord - a)^2.
    Conserved exactly by the flow when damping is off.
    """
    return LatticeDynamics(params, table).energy(state.theta, state.omega)
