"""Empirical periodic measures, partition entropies and equidistribution.

Grid cells are half-open ``[a, b)`` on every axis.  Coordinates that sit
within ``BOUNDARY_SNAP`` cell widths below a grid line are treated as lying
on it, so rounding in iterated or closed-form points cannot move a point
that belongs on a boundary into the neighbouring cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import systems as S
from .errors import DomainError, EscapeError, PreconditionError
from .growth import max_local_count
from .periodic import Orbit, PerSet
from .serialize import csv_text, dumps

BOUNDARY_SNAP = 1e-9


@dataclass(eq=False)
class EmpiricalMeasure:
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.support) == 0 or len(self.support) != len(self.weights):
            raise ValueError("support and weights must be nonempty and of equal length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")

    @property
    def dimension(self) -> int:
        return 1 if self.support.ndim == 1 else 2

    def to_json(self) -> str:
        return dumps({"support": self.support.tolist(), "weights": self.weights.tolist()})


def _points(per_n) -> np.ndarray:
    if isinstance(per_n, PerSet):
        return per_n.points()
    if len(per_n) and isinstance(per_n[0], Orbit):
        return np.concatenate([o.points for o in per_n])
    return np.asarray(per_n, dtype=float)


def empirical_measure(per_n) -> EmpiricalMeasure:
    """Uniform probability on the listed points (orbits are flattened)."""
    pts = _points(per_n)
    if len(pts) == 0:
        raise ValueError("cannot build a measure on an empty set")
    return EmpiricalMeasure(pts, np.full(len(pts), 1.0 / len(pts)))


# -- partitions -------------------------------------------------------------------


@dataclass(frozen=True)
class GridPartition:
    dimension: int
    cells_per_axis: int
    lower: float = 0.0
    upper: float = 1.0
    periodic: bool = False

    @classmethod
    def for_system(cls, sys: S.SystemSpec, cells_per_axis: int) -> "GridPartition":
        return cls(sys.dimension, cells_per_axis, sys.lower, sys.upper, sys.periodic_metric)

    @property
    def size(self) -> int:
        return self.cells_per_axis**self.dimension

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.cells_per_axis

    def cell_diameter(self, sys: S.SystemSpec) -> float:
        """Supremum of domain distances between two points of one cell."""
        if sys.domain == "planar-box":
            return self.width * math.sqrt(2)
        return self.width

    def labels(self, pts) -> np.ndarray:
        """Cell index of each point (row-major over axes)."""
        pts = np.asarray(pts, dtype=float)
        k = self.cells_per_axis
        idx = np.floor((pts - self.lower) / self.width + BOUNDARY_SNAP).astype(np.int64)
        idx = np.mod(idx, k) if self.periodic else np.clip(idx, 0, k - 1)
        if self.dimension == 1:
            return idx
        return idx[..., 0] * k + idx[..., 1]


def _entropy_of_labels(weights, labels) -> float:
    if labels.ndim > 1:
        _, inv = np.unique(labels, axis=0, return_inverse=True)
    else:
        _, inv = np.unique(labels, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=weights)
    mass = mass[mass > 0]
    return float(-(mass * np.log(mass)).sum())


def shannon_entropy(m: EmpiricalMeasure, P: GridPartition) -> float:
    """-sum m(A) log m(A) over the cells of P, in nats."""
    return _entropy_of_labels(m.weights, P.labels(m.support))


def conditional_entropy(m: EmpiricalMeasure, P: GridPartition, Q: GridPartition) -> float:
    """H_m(P | Q) = H_m(P v Q) - H_m(Q)."""
    joint = np.stack([P.labels(m.support), Q.labels(m.support)], axis=1)
    return _entropy_of_labels(m.weights, joint) - shannon_entropy(m, Q)


def itineraries(sys: S.SystemSpec, m: EmpiricalMeasure, P: GridPartition, l: int) -> np.ndarray:
    """Cell index of f^k x for k < l, one row per support point."""
    if l < 1:
        raise DomainError("itinerary length must be at least 1")
    cur = m.support
    out = np.empty((len(cur), l), dtype=np.int64)
    for k in range(l):
        bad = ~S.in_domain(sys, cur)
        if bad.any():
            raise EscapeError(k)
        out[:, k] = P.labels(cur)
        cur = S.step(sys, cur)
    return out


def iterated_partition_entropy(sys: S.SystemSpec, m: EmpiricalMeasure, P: GridPartition,
                               l: int) -> float:
    """H_m(P^l) / l where P^l is the partition into length-l itineraries."""
    return _entropy_of_labels(m.weights, itineraries(sys, m, P, l)) / l


class CruGap(NamedTuple):
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 1e-9


def lemma_cru_gap(sys: S.SystemSpec, per_n, n: int, P: GridPartition, eps: float,
                  l: int) -> CruGap:
    """Compare (1/l) H(P^l) for the uniform measure on Per_n with
    (1/n) (log #Per_n - log max local count at scale eps).

    The first must dominate the second whenever the cells of P are smaller
    than eps.
    """
    if P.cell_diameter(sys) >= eps:
        raise PreconditionError("partition cells must have diameter below eps")
    if not 1 <= l <= n:
        raise PreconditionError("need 1 <= l <= n")
    m = empirical_measure(per_n)
    lhs = iterated_partition_entropy(sys, m, P, l)
    count = len(m.support)
    rhs = (math.log(count) - math.log(max_local_count(sys, per_n, n, eps))) / n
    return CruGap(lhs, rhs)


# -- reference measures and discrepancy ------------------------------------------------


@dataclass(frozen=True)
class ReferenceMeasure:
    id: str

    def __post_init__(self):
        if self.id not in S.REFERENCE_IDS:
            raise ValueError(f"unknown reference measure {self.id!r}")

    @property
    def dimension(self) -> int:
        return 2 if self.id == "lebesgue-torus" else 1

    def cdf(self, x):
        if self.dimension != 1:
            raise DomainError("CDF is only defined for interval references")
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.id == "arcsine":
            return 2 / np.pi * np.arcsin(np.sqrt(x))
        return x

    def cell_masses(self, k: int) -> np.ndarray:
        """Masses of the k (or k*k) grid cells of the unit interval (square)."""
        if self.dimension == 2:
            return np.full(k * k, 1.0 / (k * k))
        return np.diff(self.cdf(np.linspace(0.0, 1.0, k + 1)))


class Discrepancy(NamedTuple):
    sup_cell: float
    ks: Optional[float]


def discrepancy(m: EmpiricalMeasure, ref: ReferenceMeasure, k: int) -> Discrepancy:
    """Largest cell-mass difference on a k (or k x k) grid, plus the KS
    distance of the distribution functions in 1D."""
    if k < 2:
        raise DomainError("grid must have at least 2 cells per axis")
    if m.dimension != ref.dimension:
        raise DomainError("measure and reference live in different dimensions")
    P = GridPartition(m.dimension, k, periodic=ref.id == "lebesgue-torus")
    mass = np.bincount(P.labels(m.support), weights=m.weights, minlength=P.size)
    sup_cell = float(np.abs(mass - ref.cell_masses(k)).max())
    if m.dimension == 2:
        return Discrepancy(sup_cell, None)
    order = np.argsort(m.support, kind="stable")
    x, w = m.support[order], m.weights[order]
    right = np.cumsum(w)
    left = right - w
    F = ref.cdf(x)
    ks = float(max(np.abs(right - F).max(), np.abs(left - F).max()))
    return Discrepancy(sup_cell, ks)


DISCREPANCY_HEADER = ("n", "k", "sup_cell", "ks")


def discrepancy_csv(rows) -> str:
    """rows: iterable of (n, k, Discrepancy)."""
    return csv_text(DISCREPANCY_HEADER, [(n, k, d.sup_cell, d.ks) for n, k, d in rows])
