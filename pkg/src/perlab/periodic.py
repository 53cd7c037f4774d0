"""Periodic orbits: exact enumeration, Newton search, classification.

``Per_n`` is the set of points with f^n(x) = x.  It is stored as a list of
:class:`Orbit` objects of minimal period dividing ``n``, each orbit
contributing ``minimal_period`` points.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import systems as S
from .errors import CapabilityError, DomainError, NumericError, SchemaError
from .serialize import dumps

CLASSES = ("saddle", "source", "sink", "repelling", "attracting", "nonhyperbolic")
NONHYPERBOLIC_FLOOR = 1e-8


@dataclass(frozen=True)
class NewtonConfig:
    grid_per_axis: int = 64
    tol_residual: float = 1e-11
    tol_dedupe: float = 1e-7
    max_iter: int = 50
    singular_floor: float = 1e-10

    def __post_init__(self):
        if self.grid_per_axis < 1 or self.max_iter < 1:
            raise ValueError("grid_per_axis and max_iter must be positive")
        if min(self.tol_residual, self.tol_dedupe, self.singular_floor) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(eq=False)
class Orbit:
    """A periodic orbit listed from its lexicographically smallest point."""

    points: np.ndarray  # (period,) in 1D, (period, 2) in 2D
    residual: float = 0.0
    exponents: tuple = ()
    classification: Optional[str] = None

    @property
    def minimal_period(self) -> int:
        return len(self.points)

    @property
    def base(self):
        p = self.points[0]
        return float(p) if p.ndim == 0 else tuple(float(v) for v in p)

    @property
    def dimension(self) -> int:
        return 1 if self.points.ndim == 1 else 2

    def to_dict(self) -> dict:
        return {
            "period": self.minimal_period,
            "points": self.points.tolist(),
            "exponents": list(self.exponents),
            "class": self.classification,
            "residual": float(self.residual),
        }


@dataclass
class PerSet:
    """Per_n grouped by minimal period, with the method that produced each group."""

    system: str
    n: int
    by_period: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_orbits(cls, system: str, n: int, orbits, provenance: str) -> "PerSet":
        by_period = {}
        for o in orbits:
            if n % o.minimal_period:
                raise ValueError(f"orbit of period {o.minimal_period} is not in Per_{n}")
            by_period.setdefault(o.minimal_period, []).append(o)
        by_period = dict(sorted(by_period.items()))
        return cls(system, n, by_period, {d: provenance for d in by_period})

    @property
    def orbits(self) -> list:
        return [o for d in sorted(self.by_period) for o in self.by_period[d]]

    def count(self) -> int:
        return sum(d * len(v) for d, v in self.by_period.items())

    def points(self) -> np.ndarray:
        orbits = self.orbits
        if not orbits:
            return np.empty((0,))
        return np.concatenate([o.points for o in orbits])


# -- exact enumeration ---------------------------------------------------------


def _cycles(succ: np.ndarray) -> list:
    """Cycles of a permutation given as successor indices.

    When indices are sorted by point, each cycle starts at its smallest point.
    """
    n = len(succ)
    seen = np.zeros(n, dtype=bool)
    out = []
    succ = succ.tolist()
    for i in range(n):
        if seen[i]:
            continue
        cyc = [i]
        seen[i] = True
        j = succ[i]
        while j != i:
            cyc.append(j)
            seen[j] = True
            j = succ[j]
        out.append(cyc)
    return out


def _succ_indices(keys: np.ndarray, images: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(keys, images)
    if np.any(idx >= len(keys)) or np.any(keys[np.minimum(idx, len(keys) - 1)] != images):
        raise NumericError("periodic set is not invariant")
    return idx


def _cat_numerators(n: int):
    """Numerators y in Z_D^2 with (A^n - I) y = 0 mod D, D = |det(A^n - I)|."""
    (a, b), (c, d) = S.cat_power(n)
    m = ((a - 1, b), (c, d - 1))
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    D = abs(det)
    # solutions are adj(M) z / det mod 1 for integer z: generated by adj columns
    g1 = np.array([m[1][1], -m[1][0]], dtype=np.int64) % D
    g2 = np.array([-m[0][1], m[0][0]], dtype=np.int64) % D
    o1 = D // math.gcd(D, int(g1[0]), int(g1[1]))
    h1 = (np.arange(o1, dtype=np.int64)[:, None] * g1) % D
    h1_keys = set((h1[:, 0] * D + h1[:, 1]).tolist())
    t = 1
    while True:
        v = (t * g2) % D
        if int(v[0] * D + v[1]) in h1_keys:
            break
        t += 1
    pts = (h1[:, None, :] + (np.arange(t, dtype=np.int64)[:, None] * g2)[None, :, :]) % D
    pts = pts.reshape(-1, 2)
    keys = np.unique(pts[:, 0] * D + pts[:, 1])
    if len(keys) != D:
        raise NumericError("cat map lattice enumeration is inconsistent")
    return D, keys


def _exact_catmap(n: int):
    D, keys = _cat_numerators(n)
    x, y = keys // D, keys % D
    images = ((2 * x + y) % D) * D + (x + y) % D
    succ = _succ_indices(keys, images)
    pts = np.stack([x / D, y / D], axis=1)
    return pts, succ


def _exact_doubling(n: int):
    q = 2**n - 1
    keys = np.arange(q, dtype=np.int64)
    succ = (2 * keys) % q
    return keys / q, succ


def _exact_tent(n: int):
    # branch solutions k/(2^n - 1) (k even) and (k+1)/(2^n + 1) (k odd),
    # written over the common denominator L = 4^n - 1
    L = 4**n - 1
    lo, hi = 2**n - 1, 2**n + 1
    nums = sorted(
        {k * hi for k in range(0, 2**n, 2)} | {(k + 1) * lo for k in range(1, 2**n, 2)}
    )
    keys = np.array(nums, dtype=np.int64)
    images = np.where(2 * keys < L, 2 * keys, 2 * L - 2 * keys)
    return keys / L, _succ_indices(keys, images)


def _exact_logistic4(n: int):
    # x = sin^2(pi t) conjugates f to the folded doubling t -> min(2t, 1-2t) mod 1
    # on [0, 1/2]; periodic angles are k/(2^n - 1) and k/(2^n + 1)
    lo, hi = 2**n - 1, 2**n + 1
    L = lo * hi
    nums = sorted(
        {k * hi for k in range(0, 2 ** (n - 1))} | {k * lo for k in range(1, 2 ** (n - 1) + 1)}
    )
    keys = np.array(nums, dtype=np.int64)
    images = (2 * keys) % L
    images = np.where(2 * images > L, L - images, images)
    return np.sin(np.pi * keys / L) ** 2, _succ_indices(keys, images)


EXACT_SUPPORT = ("catmap", "doubling", "logistic", "tent")


def supports_exact(sys: S.SystemSpec) -> bool:
    if sys.id == "logistic":
        return sys.params[0] == 4.0
    return sys.id in EXACT_SUPPORT


def enumerate_exact(sys: S.SystemSpec, n: int) -> list:
    """All points with f^n(x) = x, grouped into orbits, from closed forms."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if not supports_exact(sys):
        raise CapabilityError(f"no exact periodic enumeration for {sys.id} {sys.params}")
    pts, succ = {
        "catmap": _exact_catmap,
        "doubling": _exact_doubling,
        "tent": _exact_tent,
        "logistic": _exact_logistic4,
    }[sys.id](n)
    orbits = [Orbit(points=pts[cyc]) for cyc in _cycles(succ)]
    _fill_residuals(sys, orbits)
    return orbits


# -- residuals and Newton search ----------------------------------------------


def _iterate(sys, pts, k):
    for _ in range(k):
        pts = S.step(sys, pts)
    return pts


def _fill_residuals(sys, orbits):
    by_period = {}
    for o in orbits:
        by_period.setdefault(o.minimal_period, []).append(o)
    for d, group in by_period.items():
        pts = np.stack([o.points for o in group])
        err = S.distance(sys, _iterate(sys, pts, d), pts)
        err = err.reshape(len(group), -1).max(axis=1)
        for o, r in zip(group, err):
            o.residual = float(r)


def _power_with_derivative(sys, x, n):
    """f^n(x) and D(f^n)(x) for an array of points."""
    if sys.dimension == 1:
        der = np.ones_like(x)
        for _ in range(n):
            der = der * S.jacobians(sys, x)
            x = S.step(sys, x)
        return x, der
    der = np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()
    for _ in range(n):
        der = S.jacobians(sys, x) @ der
        x = S.step(sys, x)
    return x, der


def _newton(sys, x, n, cfg, max_iter):
    """Vectorized Newton on G(x) = f^n(x) - x. Returns (points, converged mask)."""
    x = np.array(x, dtype=float)
    alive = np.ones(len(x), dtype=bool)
    done = np.zeros(len(x), dtype=bool)
    limit = 10 * max(abs(sys.lower), abs(sys.upper))
    for _ in range(max_iter + 1):
        act = alive & ~done
        if not act.any():
            break
        xa = x[act]
        with np.errstate(all="ignore"):
            fx, der = _power_with_derivative(sys, xa, n)
            g = S.wrapped_difference(sys, fx, xa)
        res = np.abs(g) if sys.dimension == 1 else np.abs(g).max(axis=-1)
        ok = np.isfinite(res)
        conv = ok & (res <= cfg.tol_residual)
        idx = np.flatnonzero(act)
        done[idx[conv]] = True
        alive[idx[~ok]] = False
        move = ok & ~conv
        if not move.any():
            continue
        xm, gm, dm = xa[move], g[move], der[move]
        with np.errstate(all="ignore"):
            if sys.dimension == 1:
                dg = dm - 1.0
                singular = ~(np.abs(dg) >= cfg.singular_floor)
                dx = gm / np.where(singular, 1.0, dg)
            else:
                dg = dm - np.eye(2)
                singular = ~(np.linalg.cond(dg) <= 1.0 / cfg.singular_floor)
                dg[singular] = np.eye(2)
                dx = np.linalg.solve(dg, gm[..., None])[..., 0]
            xn = xm - dx
        if sys.periodic_metric:
            xn = S._mod1(xn)
        inside = np.abs(xn) <= limit  # NaN compares False
        bad = singular | ~(inside.all(axis=-1) if sys.dimension == 2 else inside)
        midx = idx[move]
        alive[midx[bad]] = False
        x[midx[~bad]] = xn[~bad]
    return x, done & alive


def _seed_grid(sys, g):
    lo, hi = sys.lower, sys.upper
    if sys.dimension == 1:
        m = g * g
        return lo + (np.arange(m) + 0.5) * (hi - lo) / m
    t = lo + (np.arange(g) + 0.5) * (hi - lo) / g
    xx, yy = np.meshgrid(t, t, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def _lexsort(pts):
    if pts.ndim == 1:
        return np.argsort(pts, kind="stable")
    return np.lexsort((pts[:, 1], pts[:, 0]))


class _PointIndex:
    """Incremental spatial hash answering 'is there a stored point within tol'."""

    def __init__(self, sys, tol):
        self.sys, self.tol = sys, tol
        self.cells = {}
        # on periodic coordinates use cells of width 1/floor(1/tol) >= tol,
        # which tile [0, 1) exactly
        self.period = max(1, math.floor(1 / tol)) if sys.periodic_metric else None

    def _key(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.period:
            return tuple(int(v) % self.period for v in np.floor(p * self.period))
        return tuple(int(v) for v in np.floor(p / self.tol))

    def _neighbours(self, key):
        offsets = (-1, 0, 1)
        combos = [(i,) for i in offsets] if len(key) == 1 else [(i, j) for i in offsets for j in offsets]
        for off in combos:
            k = tuple(a + b for a, b in zip(key, off))
            yield tuple(v % self.period for v in k) if self.period else k

    def near(self, p) -> bool:
        for k in set(self._neighbours(self._key(p))):
            for q in self.cells.get(k, ()):
                if S.distance(self.sys, p, q) < self.tol:
                    return True
        return False

    def add(self, p):
        self.cells.setdefault(self._key(p), []).append(np.asarray(p))


def _minimal_period(sys, x, n, tol):
    for d in sorted(k for k in range(1, n + 1) if n % k == 0):
        if S.distance(sys, _iterate(sys, x, d), x) < tol:
            return d
    return n


def _assemble(sys, n, pts, cfg):
    orbits = []
    index = _PointIndex(sys, cfg.tol_dedupe)
    for x in pts:
        if index.near(x):
            continue
        d = _minimal_period(sys, x, n, cfg.tol_dedupe)
        cyc = [x]
        for _ in range(d - 1):
            cyc.append(S.step(sys, cyc[-1]))
        cyc = np.array(cyc)
        # polish every point of the cycle on f^d
        cyc, ok = _newton(sys, cyc, d, cfg, 3)
        if not ok.all() or not S.in_domain(sys, cyc).all():
            continue
        start = _lexsort(cyc)[0]
        cyc = np.roll(cyc, -start, axis=0)
        if any(index.near(p) for p in cyc):
            continue
        for p in cyc:
            index.add(p)
        orbits.append(Orbit(points=cyc))
    _fill_residuals(sys, orbits)
    orbits = [o for o in orbits if o.residual <= cfg.tol_residual]
    orbits.sort(key=lambda o: tuple(np.atleast_1d(o.points[0])))
    return orbits


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("PERLAB_THREADS", "1")))
    except ValueError:
        return 1


def find_periodic_newton(sys: S.SystemSpec, n: int, cfg: NewtonConfig = NewtonConfig(),
                         threads: Optional[int] = None) -> list:
    """Multi-start Newton search for Per_n from a uniform seed grid.

    In 1D the grid has ``grid_per_axis**2`` points so that both dimensions
    get the same seed budget.  Seeds are split across threads; the merged
    solutions are sorted before deduplication, so the result does not depend
    on the schedule.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    seeds = _seed_grid(sys, cfg.grid_per_axis)
    threads = threads or thread_count()
    chunks = np.array_split(seeds, threads) if threads > 1 else [seeds]
    if len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda c: _newton(sys, c, n, cfg, cfg.max_iter), chunks))
    else:
        results = [_newton(sys, seeds, n, cfg, cfg.max_iter)]
    pts = np.concatenate([x[ok] for x, ok in results])
    if not sys.periodic_metric:
        # roots on the boundary (x = 0 for the logistic map) converge from outside
        lo, hi = sys.lower, sys.upper
        near = (pts >= lo - cfg.tol_dedupe) & (pts <= hi + cfg.tol_dedupe)
        pts = np.where(near, np.clip(pts, lo, hi), pts)
    pts = pts[S.in_domain(sys, pts)]
    if len(pts) == 0:
        return []
    pts = pts[_lexsort(pts)]
    return _assemble(sys, n, pts, cfg)


# -- exponents and classification ---------------------------------------------


def _exponents_batch(sys, pts):
    """Lyapunov exponents for K orbits of common period d; pts has shape (K, d[, 2])."""
    K, d = pts.shape[:2]
    if sys.dimension == 1:
        with np.errstate(divide="ignore"):
            ex = np.log(np.abs(S.jacobians(sys, pts))).sum(axis=1) / d
        return ex[:, None]
    prod = np.broadcast_to(np.eye(2), (K, 2, 2)).copy()
    log_scale = np.zeros(K)
    log_det = np.zeros(K)
    for k in range(d):
        j = S.jacobians(sys, pts[:, k])
        with np.errstate(divide="ignore"):
            log_det += np.log(np.abs(np.linalg.det(j)))
        prod = j @ prod
        s = np.abs(prod).max(axis=(1, 2))
        if not np.all(np.isfinite(s)) or np.any(s == 0):
            raise NumericError("monodromy product degenerated")
        prod /= s[:, None, None]
        log_scale += np.log(s)
    ev = np.abs(np.linalg.eigvals(prod))
    big = (np.log(ev.max(axis=1)) + log_scale) / d
    small = log_det / d - big
    return np.stack([np.minimum(small, big), np.maximum(small, big)], axis=1)


def classify_exponents(exponents, floor: float = NONHYPERBOLIC_FLOOR) -> str:
    ex = sorted(exponents)
    if any(abs(e) < floor for e in ex):
        return "nonhyperbolic"
    if len(ex) == 1:
        return "repelling" if ex[0] > 0 else "attracting"
    if ex[0] < 0 < ex[1]:
        return "saddle"
    return "source" if ex[0] > 0 else "sink"


def classify_orbits(sys: S.SystemSpec, orbits, floor: float = NONHYPERBOLIC_FLOOR) -> list:
    """Classified copies of ``orbits``, batched by period."""
    out = list(orbits)
    groups = {}
    for i, o in enumerate(orbits):
        groups.setdefault(o.minimal_period, []).append(i)
    for d, idx in groups.items():
        ex = _exponents_batch(sys, np.stack([orbits[i].points for i in idx]))
        for i, e in zip(idx, ex):
            e = tuple(float(v) for v in e)
            out[i] = replace(orbits[i], exponents=e, classification=classify_exponents(e, floor))
    return out


def classify_orbit(sys: S.SystemSpec, orbit: Orbit, floor: float = NONHYPERBOLIC_FLOOR) -> Orbit:
    return classify_orbits(sys, [orbit], floor)[0]


def filter_delta(orbits, delta: float) -> list:
    """Orbits belonging to Per^delta: saddles (2D) or repelling orbits (1D)
    whose exponents are all at least ``delta`` in absolute value."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    kept = []
    for o in orbits:
        if o.classification is None:
            raise ValueError("orbit must be classified before filtering")
        if o.classification not in ("saddle", "repelling"):
            continue
        if min(abs(e) for e in o.exponents) >= delta:
            kept.append(o)
    return kept


def per_set(sys: S.SystemSpec, n: int, method: str = "auto",
            cfg: NewtonConfig = NewtonConfig()) -> PerSet:
    """Classified Per_n computed exactly when possible (method='auto')."""
    if method == "auto":
        method = "exact" if supports_exact(sys) else "newton"
    if method == "exact":
        orbits = enumerate_exact(sys, n)
    elif method == "newton":
        orbits = find_periodic_newton(sys, n, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PerSet.from_orbits(sys.id, n, classify_orbits(sys, orbits), method)


# -- bounded distortion intervals ---------------------------------------------


@dataclass(frozen=True)
class DistortionInterval:
    lo: float
    hi: float
    resolved: bool = True

    def __contains__(self, x) -> bool:
        return self.lo <= x < self.hi or (self.hi == 1.0 and x == 1.0)


def derivative_power(sys: S.SystemSpec, x, n: int) -> np.ndarray:
    """(f^n)'(x) for an array of points of a one-dimensional system."""
    return _power_with_derivative(sys, np.asarray(x, dtype=float), n)[1]


def distortion_intervals(sys: S.SystemSpec, n: int, samples: int = 33,
                         min_width: float = 1e-12) -> list:
    """Bisect [0, 1] into maximal dyadic intervals of bounded distortion.

    An interval is accepted when the oscillation of (f^n)' over ``samples``
    interior points (midpoints of equal sub-cells) is at most a third of the
    largest sampled |(f^n)'|.  Pieces narrower than ``min_width`` that still
    fail are returned with ``resolved=False``; they shrink onto the critical
    set of f^n.
    """
    if sys.dimension != 1:
        raise CapabilityError("distortion intervals need a one-dimensional system")
    if n < 1:
        raise DomainError("n must be at least 1")
    frac = (np.arange(samples) + 0.5) / samples
    pending = np.array([[0.0, 1.0]])
    out = []
    while len(pending):
        lo, hi = pending[:, :1], pending[:, 1:]
        der = derivative_power(sys, lo + (hi - lo) * frac, n)
        sup = np.abs(der).max(axis=1)
        osc = der.max(axis=1) - der.min(axis=1)
        ok = osc <= sup / 3
        out.extend(DistortionInterval(a, b, True) for a, b in pending[ok].tolist())
        fail = pending[~ok]
        narrow = (fail[:, 1] - fail[:, 0]) / 2 < min_width
        out.extend(DistortionInterval(a, b, False) for a, b in fail[narrow].tolist())
        fail = fail[~narrow]
        mid = (fail[:, 0] + fail[:, 1]) / 2
        pending = np.concatenate([
            np.stack([fail[:, 0], mid], axis=1),
            np.stack([mid, fail[:, 1]], axis=1),
        ])
    out.sort(key=lambda j: j.lo)
    return out


# -- serialization ---------------------------------------------------------------


def orbits_to_json(system: str, n: int, orbits) -> str:
    return dumps({"system": system, "n": n, "orbits": [o.to_dict() for o in orbits]})


def orbits_from_dict(doc: dict) -> tuple:
    """Inverse of :func:`orbits_to_json` (after json.loads)."""
    try:
        system, n = doc["system"], int(doc["n"])
        orbits = []
        for i, rec in enumerate(doc["orbits"]):
            pts = np.array(rec["points"], dtype=float)
            if len(pts) != rec["period"]:
                raise SchemaError("period does not match number of points", f"orbits[{i}]")
            orbits.append(Orbit(points=pts, residual=float(rec["residual"]),
                                exponents=tuple(rec["exponents"]),
                                classification=rec["class"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed orbit document ({exc})") from exc
    return system, n, orbits
