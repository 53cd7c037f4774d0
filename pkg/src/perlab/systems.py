"""Catalog of concrete maps: evaluation, tangent maps and domain metrics.

Points are floats for one-dimensional systems and length-2 sequences for
planar ones.  The vectorized helpers :func:`step` and :func:`jacobians`
operate on arrays of shape ``(N,)`` or ``(N, 2)`` and are what the rest of
the package uses internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, EscapeError

CAT_MATRIX = ((2, 1), (1, 1))
CAT_EXPANSION = (3 + math.sqrt(5)) / 2
HENON_BOX = 3.0

DOMAINS = ("torus2", "unit-interval", "planar-box")
REFERENCE_IDS = ("lebesgue-torus", "lebesgue-interval", "arcsine")


@dataclass(frozen=True)
class ExactMeta:
    """Known answers for a system (entropy, maximal measure, periodic count)."""

    htop: Optional[float] = None
    mme: Optional[str] = None
    periodic_count: Optional[Callable[[int], int]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.mme is not None and self.mme not in REFERENCE_IDS:
            raise ValueError(f"unknown reference measure {self.mme!r}")


@dataclass(frozen=True)
class SystemSpec:
    id: str
    dimension: int
    params: tuple = ()
    domain: str = "unit-interval"
    invertible: bool = False
    exact: Optional[ExactMeta] = None
    # planar-box only: the square [-bound, bound]^2
    bound: Optional[float] = None
    # one-dimensional maps of the circle use the wrapped metric
    wrap: bool = False

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        expected = 1 if self.domain == "unit-interval" else 2
        if self.dimension != expected:
            raise ValueError(f"domain {self.domain} needs dimension {expected}")
        if self.domain == "planar-box" and not self.bound:
            raise ValueError("planar-box systems need a bound")

    @property
    def periodic_metric(self) -> bool:
        """True when every coordinate is taken modulo 1."""
        return self.domain == "torus2" or self.wrap

    @property
    def lower(self) -> float:
        return -self.bound if self.domain == "planar-box" else 0.0

    @property
    def upper(self) -> float:
        return self.bound if self.domain == "planar-box" else 1.0

    @property
    def diameter(self) -> float:
        if self.periodic_metric:
            return 0.5
        if self.domain == "unit-interval":
            return 1.0
        return 2 * self.bound * math.sqrt(2)


def _int_matpow(m, n):
    (a, b), (c, d) = m
    r = ((1, 0), (0, 1))
    base = ((a, b), (c, d))
    while n:
        if n & 1:
            r = _int_matmul(r, base)
        base = _int_matmul(base, base)
        n >>= 1
    return r


def _int_matmul(p, q):
    return (
        (p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]),
        (p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]),
    )


def cat_power(n: int):
    """Integer matrix A**n for the cat map."""
    return _int_matpow(CAT_MATRIX, n)


def _cat_count(n: int) -> int:
    (a, b), (c, d) = cat_power(n)
    return abs((a - 1) * (d - 1) - b * c)


def catmap() -> SystemSpec:
    return SystemSpec(
        "catmap", 2, (), "torus2", True,
        ExactMeta(math.log(CAT_EXPANSION), "lebesgue-torus", _cat_count),
    )


def doubling() -> SystemSpec:
    return SystemSpec(
        "doubling", 1, (), "unit-interval", False,
        ExactMeta(math.log(2), "lebesgue-interval", lambda n: 2**n - 1),
        wrap=True,
    )


def logistic(lam: float = 4.0) -> SystemSpec:
    if not 0 < lam <= 4:
        raise DomainError("logistic parameter must lie in (0, 4]")
    exact = None
    if lam == 4:
        exact = ExactMeta(math.log(2), "arcsine", lambda n: 2**n)
    return SystemSpec("logistic", 1, (float(lam),), "unit-interval", False, exact)


def tent() -> SystemSpec:
    return SystemSpec(
        "tent", 1, (), "unit-interval", False,
        ExactMeta(math.log(2), "lebesgue-interval", lambda n: 2**n),
    )


def henon(a: float = 1.4, b: float = 0.3) -> SystemSpec:
    if b == 0:
        raise DomainError("Henon map with b=0 is not invertible")
    return SystemSpec("henon", 2, (float(a), float(b)), "planar-box", True, bound=HENON_BOX)


CATALOG = {
    "catmap": catmap,
    "doubling": doubling,
    "logistic": logistic,
    "tent": tent,
    "henon": henon,
}


def get_system(name: str, params: Sequence[float] | None = None) -> SystemSpec:
    """Build a catalog system by id; ``params`` override the defaults."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(*(params or ()))


# -- vectorized kernels -------------------------------------------------------


def _mod1(x):
    r = np.mod(x, 1.0)
    # np.mod maps tiny negatives to exactly 1.0
    return np.where(r >= 1.0, 0.0, r)


def step(sys: SystemSpec, pts: np.ndarray) -> np.ndarray:
    """Apply the map to an array of points without domain checks."""
    pts = np.asarray(pts, dtype=float)
    if sys.id == "catmap":
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([_mod1(2 * x + y), _mod1(x + y)], axis=-1)
    if sys.id == "doubling":
        return _mod1(2 * pts)
    if sys.id == "logistic":
        return sys.params[0] * pts * (1 - pts)
    if sys.id == "tent":
        return 1 - np.abs(1 - 2 * pts)
    if sys.id == "henon":
        a, b = sys.params
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([1 + y - a * x * x, b * x], axis=-1)
    raise KeyError(sys.id)


def inverse_step(sys: SystemSpec, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if sys.id == "catmap":
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([_mod1(x - y), _mod1(2 * y - x)], axis=-1)
    if sys.id == "henon":
        a, b = sys.params
        x, y = pts[..., 0], pts[..., 1]
        u = y / b
        return np.stack([u, x - 1 + a * u * u], axis=-1)
    raise DomainError(f"{sys.id} is not invertible")


def jacobians(sys: SystemSpec, pts: np.ndarray) -> np.ndarray:
    """Derivatives at an array of points: shape (N,) in 1D, (N, 2, 2) in 2D."""
    pts = np.asarray(pts, dtype=float)
    if sys.id == "catmap":
        out = np.empty(pts.shape[:-1] + (2, 2))
        out[...] = np.array(CAT_MATRIX, dtype=float)
        return out
    if sys.id == "doubling":
        return np.full(pts.shape, 2.0)
    if sys.id == "logistic":
        return sys.params[0] * (1 - 2 * pts)
    if sys.id == "tent":
        # one-sided derivative from the right at the kink
        return np.where(pts < 0.5, 2.0, -2.0)
    if sys.id == "henon":
        a, b = sys.params
        x = pts[..., 0]
        out = np.empty(pts.shape[:-1] + (2, 2))
        out[..., 0, 0] = -2 * a * x
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = b
        out[..., 1, 1] = 0.0
        return out
    raise KeyError(sys.id)


def in_domain(sys: SystemSpec, pts: np.ndarray) -> np.ndarray:
    """Boolean mask of points lying in the phase space."""
    pts = np.asarray(pts, dtype=float)
    if sys.domain == "planar-box":
        ok = np.abs(pts) <= sys.bound  # NaN compares False
    else:
        ok = (pts >= 0) & (pts <= 1)
    return ok.all(axis=-1) if sys.dimension == 2 else ok


def distance(sys: SystemSpec, p, q) -> np.ndarray:
    """Domain metric; broadcasts over leading axes.

    Torus and circle use the max over coordinates of the wrapped difference,
    the interval uses |p - q| and the planar box is Euclidean.
    """
    d = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    if sys.periodic_metric:
        d = np.minimum(d, 1 - d)
        return d.max(axis=-1) if sys.dimension == 2 else d
    if sys.dimension == 1:
        return d
    return np.sqrt((d * d).sum(axis=-1))


def wrapped_difference(sys: SystemSpec, p, q) -> np.ndarray:
    """p - q, reduced to [-1/2, 1/2) on periodic coordinates."""
    d = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    if sys.periodic_metric:
        d = d - np.floor(d + 0.5)
    return d


# -- public single-point API ---------------------------------------------------


def _as_point(sys: SystemSpec, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (() if sys.dimension == 1 else (2,)):
        raise DomainError(f"{sys.id} expects a point of dimension {sys.dimension}")
    return arr


def _out(sys, arr):
    return float(arr) if sys.dimension == 1 else (float(arr[0]), float(arr[1]))


def evaluate(sys: SystemSpec, x):
    """Image of ``x``; torus coordinates are reduced modulo 1."""
    arr = _as_point(sys, x)
    if not in_domain(sys, arr):
        raise DomainError(f"point {x!r} is outside the domain of {sys.id}")
    return _out(sys, step(sys, arr))


def inverse_evaluate(sys: SystemSpec, x):
    arr = _as_point(sys, x)
    if not sys.invertible:
        raise DomainError(f"{sys.id} is not invertible")
    if not in_domain(sys, arr):
        raise DomainError(f"point {x!r} is outside the domain of {sys.id}")
    return _out(sys, inverse_step(sys, arr))


def jacobian(sys: SystemSpec, x):
    """Analytic derivative of one step at ``x`` (float in 1D, 2x2 array in 2D)."""
    arr = _as_point(sys, x)
    if not in_domain(sys, arr):
        raise DomainError(f"point {x!r} is outside the domain of {sys.id}")
    j = jacobians(sys, arr)
    return float(j) if sys.dimension == 1 else np.array(j)


def orbit_array(sys: SystemSpec, x, n: int) -> np.ndarray:
    """Points x, f(x), ..., f^{n-1}(x) as an array; raises EscapeError."""
    if n < 1:
        raise DomainError("orbit length must be at least 1")
    cur = _as_point(sys, x)
    out = np.empty((n,) + cur.shape)
    for k in range(n):
        if not in_domain(sys, cur):
            raise EscapeError(k, _out(sys, cur) if np.all(np.isfinite(cur)) else None)
        out[k] = cur
        cur = step(sys, cur)
    return out


def orbit_segment(sys: SystemSpec, x, n: int) -> list:
    return [_out(sys, p) for p in orbit_array(sys, x, n)]


def norm_conorm(J) -> tuple[float, float]:
    """Largest and smallest singular values of a 2x2 matrix."""
    s = np.linalg.svd(np.asarray(J, dtype=float), compute_uv=False)
    return float(s[0]), float(s[-1])
