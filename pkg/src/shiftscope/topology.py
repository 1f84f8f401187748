"""Vietoris-Rips persistence diagrams (H0, H1) and sliced Wasserstein distance."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _rips
from .distances import pairwise_matrix
from .embedio import EmbeddingSet
from .errors import ConfigError, InfiniteBarError
from .sampling import RngSeed

DEFAULT_SLICES = 50


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) pairs for one homology dimension."""

    dimension: int
    births: np.ndarray
    deaths: np.ndarray

    def __post_init__(self):
        births = np.ascontiguousarray(self.births, dtype=np.float64)
        deaths = np.ascontiguousarray(self.deaths, dtype=np.float64)
        if births.shape != deaths.shape or births.ndim != 1:
            raise ConfigError("births and deaths must be 1-D arrays of equal length")
        if np.any(deaths < births):
            raise ConfigError("every death must be >= its birth")
        births.setflags(write=False)
        deaths.setflags(write=False)
        object.__setattr__(self, "births", births)
        object.__setattr__(self, "deaths", deaths)

    def __len__(self) -> int:
        return self.births.shape[0]

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.births, self.deaths])

    @property
    def has_essential(self) -> bool:
        return bool(np.any(np.isinf(self.deaths)))


@dataclass(frozen=True)
class RipsConfig:
    """Tunables of the Rips filtration.

    max_edge_length None means the enclosing radius (the smallest over points
    of the largest distance to any other point), beyond which no H1 class can
    persist. Point clouds larger than h1_point_cap are subsampled (seeded)
    before the H1 reduction; H0 always uses the full cloud.
    """

    max_dimension: int = 1
    max_edge_length: float | None = None
    h1_point_cap: int = 400
    cap_seed: int = 0

    def __post_init__(self):
        if self.max_dimension not in (0, 1):
            raise ConfigError("max_dimension must be 0 or 1")
        if self.max_edge_length is not None and not self.max_edge_length > 0:
            raise ConfigError("max_edge_length must be positive when explicit")
        if self.h1_point_cap < 3:
            raise ConfigError("h1_point_cap must be >= 3")


def enclosing_radius(D: np.ndarray) -> float:
    return float(np.min(np.max(D, axis=1)))


def h0_diagram_from_matrix(D: np.ndarray) -> PersistenceDiagram:
    """H0 bars (0, w) for MST edge weights w in merge order, plus (0, inf)."""
    n = D.shape[0]
    if n == 1:
        merge = np.empty(0)
    else:
        merge = np.sort(_rips.prim_mst_weights(D))
    births = np.zeros(n)
    deaths = np.append(merge, np.inf)
    return PersistenceDiagram(0, births, deaths)


def rips_h0(points: EmbeddingSet) -> PersistenceDiagram:
    """Connected-component persistence of the full Rips filtration."""
    return h0_diagram_from_matrix(pairwise_matrix(points.data, points.data))


def h1_diagram_from_matrix(D: np.ndarray, max_edge_length: float | None = None) -> PersistenceDiagram:
    """H1 persistence of the Rips filtration truncated at max_edge_length."""
    n = D.shape[0]
    r = enclosing_radius(D) if max_edge_length is None else float(max_edge_length)
    ne = _rips.count_edges(D, r)
    ei = np.empty(ne, np.int32)
    ej = np.empty(ne, np.int32)
    ew = np.empty(ne, np.float64)
    _rips.fill_edges(D, r, ei, ej, ew)
    order = np.lexsort((ej, ei, ew))
    ei, ej, ew = ei[order].copy(), ej[order].copy(), ew[order].copy()
    erank = np.full((n, n), -1, np.int64)
    erank[ei, ej] = np.arange(ne)
    erank[ej, ei] = erank[ei, ej]
    is_tree = _rips.mark_tree_edges(ei, ej, n)
    births, deaths, essential = _rips.h1_pairs(ei, ej, ew, erank, is_tree, n)
    if essential.size:
        births = np.append(births, essential)
        deaths = np.append(deaths, np.full(essential.size, np.inf))
    order = np.lexsort((deaths, births))
    return PersistenceDiagram(1, births[order], deaths[order])


def rips_h1(points: EmbeddingSet, cfg: RipsConfig = RipsConfig()) -> PersistenceDiagram:
    """Loop persistence; clouds above cfg.h1_point_cap are subsampled first."""
    if points.n < 3:
        raise ConfigError("rips_h1 needs at least 3 points")
    data = points.data
    if points.n > cfg.h1_point_cap:
        idx = RngSeed(cfg.cap_seed).generator().choice(
            points.n, size=cfg.h1_point_cap, replace=False
        )
        data = data[np.sort(idx)]
    D = pairwise_matrix(data, data)
    return h1_diagram_from_matrix(D, cfg.max_edge_length)


def drop_essential(diag: PersistenceDiagram) -> PersistenceDiagram:
    """Remove points with infinite death."""
    finite = np.isfinite(diag.deaths)
    return PersistenceDiagram(diag.dimension, diag.births[finite], diag.deaths[finite])


def sliced_wasserstein(
    a: PersistenceDiagram,
    b: PersistenceDiagram,
    slices: int = DEFAULT_SLICES,
) -> float:
    """Average over projection directions of the 1-D L1 distance.

    Each diagram is augmented with the diagonal projections of the other's
    points so the projected multisets have equal cardinality; directions sit
    at bin midpoints of [-pi/2, pi/2).
    """
    if slices < 1:
        raise ConfigError("slices must be >= 1")
    if a.has_essential or b.has_essential:
        raise InfiniteBarError("drop essential bars before sliced_wasserstein")
    pa = a.points
    pb = b.points
    if pa.shape[0] == 0 and pb.shape[0] == 0:
        return 0.0
    diag_a = np.repeat((pa.sum(axis=1) / 2.0)[:, None], 2, axis=1)
    diag_b = np.repeat((pb.sum(axis=1) / 2.0)[:, None], 2, axis=1)
    A = np.vstack([pa, diag_b])
    B = np.vstack([pb, diag_a])
    thetas = -np.pi / 2.0 + (np.arange(slices) + 0.5) * np.pi / slices
    dirs = np.vstack([np.cos(thetas), np.sin(thetas)])
    proj_a = np.sort(A @ dirs, axis=0)
    proj_b = np.sort(B @ dirs, axis=0)
    return float(np.abs(proj_a - proj_b).sum(axis=0).mean())


def swp_distance(
    x: EmbeddingSet,
    y: EmbeddingSet,
    cfg: RipsConfig = RipsConfig(),
    slices: int = DEFAULT_SLICES,
) -> float:
    """Sum over homology dimensions of the sliced Wasserstein diagram distance."""
    total = sliced_wasserstein(drop_essential(rips_h0(x)), drop_essential(rips_h0(y)), slices)
    if cfg.max_dimension >= 1:
        total += sliced_wasserstein(
            drop_essential(rips_h1(x, cfg)), drop_essential(rips_h1(y, cfg)), slices
        )
    return total


def diagrams_to_csv(path, diagrams) -> None:
    """Debug export: rows of dimension,birth,death with INF for essential bars."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dimension", "birth", "death"])
        for diag in diagrams:
            for b, d in zip(diag.births, diag.deaths):
                writer.writerow(
                    [diag.dimension, repr(float(b)), "INF" if np.isinf(d) else repr(float(d))]
                )
