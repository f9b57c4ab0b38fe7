"""
Lattice topology and the phase-space state of the multi-body spin.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from spin_types.errors import ConfigError


@dataclass(frozen=True)
class NeighborTable:
    """4-connected open-boundary grid adjacency, row-major site indexing"""
    rows: int
    cols: int
    adjacency: Tuple[Tuple[int, ...], ...]
    # directed edge list (target j, source i), one entry per (j, i in adj(j))
    targets: np.ndarray = field(repr=False, compare=False)
    sources: np.ndarray = field(repr=False, compare=False)

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def neighbors(self, site: int) -> Tuple[int, ...]:
        return self.adjacency[site]

    def bonds(self) -> np.ndarray:
        """Undirected bonds as an (n_bonds, 2) array with i < j"""
        mask = self.sources < self.targets
        return np.column_stack((self.sources[mask], self.targets[mask]))


def build_neighbor_table(rows: int, cols: int) -> NeighborTable:
    """Open grid, no wrap-around: (r, c) touches (r +- 1, c) and (r, c +- 1) when in bounds"""
    if rows < 1 or cols < 1:
        raise ConfigError(f"lattice needs rows >= 1 and cols >= 1, got {rows}x{cols}")

    adjacency = []
    for r in range(rows):
        for c in range(cols):
            site_neighbors = []
            for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    site_neighbors.append(rr * cols + cc)
            adjacency.append(tuple(site_neighbors))

    targets = np.array([j for j, adj in enumerate(adjacency) for _ in adj], dtype=np.intp)
    sources = np.array([i for adj in adjacency for i in adj], dtype=np.intp)
    return NeighborTable(rows, cols, tuple(adjacency), targets, sources)


@dataclass(frozen=True, eq=False)
class LatticeState:
    """Angles from +z in the x-z plane and angular velocities, one entry per site"""
    theta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        omega = np.array(self.omega, dtype=float)
        if theta.ndim != 1 or theta.shape != omega.shape:
            raise ValueError(f"theta and omega must be 1-D of equal length, got {theta.shape} and {omega.shape}")
        theta.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)

    @property
    def n_sites(self) -> int:
        return self.theta.size

    def to_vector(self) -> np.ndarray:
        """Flat integrator vector [theta..., omega...]"""
        return np.concatenate((self.theta, self.omega))

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "LatticeState":
        n = y.size // 2
        return cls(y[:n], y[n:])
