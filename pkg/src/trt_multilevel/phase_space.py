"""Discrete phase space: slab mesh, double Gauss-Legendre angles, photon
energy grids and the time grid."""

from dataclasses import dataclass, field

import numpy as np

from .physics import DomainError


@dataclass(frozen=True)
class SpatialMesh:
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise DomainError("mesh edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def n_cells(self):
        return self.edges.size - 1

    @property
    def length(self):
        return self.edges[-1] - self.edges[0]


@dataclass(frozen=True)
class AngularQuadrature:
    """Directions sorted by cosine: the first half has mu < 0, the second mu > 0."""

    mu: np.ndarray
    weights: np.ndarray

    @property
    def n_half(self):
        return self.mu.size // 2

    @property
    def neg(self):
        return slice(0, self.n_half)

    @property
    def pos(self):
        return slice(self.n_half, 2 * self.n_half)

    @property
    def mirror(self):
        """Index of -mu_m for every direction m."""
        return np.arange(self.mu.size)[::-1]


def build_double_gauss(n_half):
    """Gauss-Legendre rule of ``n_half`` points mapped onto [-1,0] and [0,1]."""
    if int(n_half) != n_half or n_half < 1:
        raise DomainError("need at least one direction per half-range")
    x, w = np.polynomial.legendre.leggauss(int(n_half))
    half_mu = 0.5 * (x + 1.0)
    half_w = 0.5 * w
    # ascending order; the mirror of index m is M-1-m
    mu = np.concatenate([-half_mu[::-1], half_mu])
    weights = np.concatenate([half_w[::-1], half_w])
    return AngularQuadrature(mu, weights)


@dataclass(frozen=True)
class EnergyGrid:
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or edges[0] < 0 or np.any(np.diff(edges) <= 0):
            raise DomainError("energy grid edges must be nonnegative and strictly increasing")
        object.__setattr__(self, "edges", edges)

    @property
    def n_groups(self):
        return self.edges.size - 1

    @property
    def coarse_edges(self):
        return self.edges[[0, -1]]

    def coarse(self):
        return EnergyGrid(self.coarse_edges)


def build_fc_energy_grid(n_groups, hnu_a, hnu_b, hnu_max):
    """[0, a], log-uniform groups on [a, b], then [b, hnu_max]."""
    if n_groups < 3:
        raise DomainError("need at least three groups")
    if not 0 < hnu_a < hnu_b < hnu_max:
        raise DomainError("require 0 < hnu_a < hnu_b < hnu_max")
    interior = np.geomspace(hnu_a, hnu_b, n_groups - 1)
    return EnergyGrid(np.concatenate([[0.0], interior, [hnu_max]]))


def build_uniform_mesh(length, n_cells):
    if not length > 0 or n_cells < 1:
        raise DomainError("need positive length and at least one cell")
    edges = np.linspace(0.0, length, int(n_cells) + 1)
    edges[-1] = length
    return SpatialMesh(edges)


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    t_end: float
    times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.dt > 0 or self.t_end < 0:
            raise DomainError("need dt > 0 and t_end >= 0")
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(self.t_end, self.dt):
            raise DomainError(f"dt={self.dt} does not tile [0, {self.t_end}]")
        object.__setattr__(self, "times", self.dt * np.arange(n + 1))

    @property
    def n_steps(self):
        return self.times.size - 1
