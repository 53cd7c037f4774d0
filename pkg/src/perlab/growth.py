"""Global and local periodic growth, Bowen balls and cocycle statistics.

Bowen balls are open: ``y`` lies in B(x, n, eps) iff
max_{0<=k<n} d(f^k x, f^k y) < eps.  Local counts restrict the center of
the ball to the periodic set itself, which keeps everything finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import systems as S
from .errors import DomainError, InsufficientDataError
from .periodic import NewtonConfig, Orbit, PerSet, filter_delta, per_set
from .serialize import csv_text, dumps

DEFAULT_EPSILONS = tuple(0.2 * 2.0**-k for k in range(6))


@dataclass(frozen=True)
class GrowthRow:
    n: int
    count_all: int
    count_delta: int

    @property
    def rate_all(self) -> Optional[float]:
        return math.log(self.count_all) / self.n if self.count_all >= 1 else None

    @property
    def rate_delta(self) -> Optional[float]:
        return math.log(self.count_delta) / self.n if self.count_delta >= 1 else None


@dataclass
class GrowthTable:
    delta: float
    rows: list = field(default_factory=list)

    HEADER = ("n", "count_all", "count_delta", "rate_all", "rate_delta")

    def to_csv(self) -> str:
        return csv_text(self.HEADER, [
            (r.n, r.count_all, r.count_delta, r.rate_all, r.rate_delta) for r in self.rows
        ])

    def to_json(self) -> str:
        return dumps({"delta": self.delta, "rows": [
            dict(zip(self.HEADER, (r.n, r.count_all, r.count_delta, r.rate_all, r.rate_delta)))
            for r in self.rows
        ]})


@dataclass(frozen=True)
class LocalRow:
    n: int
    eps: float
    max_cluster: int

    @property
    def local_rate(self) -> Optional[float]:
        return math.log(self.max_cluster) / self.n if self.max_cluster >= 1 else None


@dataclass
class LocalGrowthCurve:
    """Largest number of points of Per_n sharing one (n, eps)-ball.

    Ball centers range over Per_n only, not over the whole phase space.
    """

    epsilons: tuple
    rows: list = field(default_factory=list)

    HEADER = ("n", "eps", "max_cluster", "local_rate")

    def to_csv(self) -> str:
        return csv_text(self.HEADER, [(r.n, r.eps, r.max_cluster, r.local_rate) for r in self.rows])

    def to_json(self) -> str:
        return dumps({"epsilons": list(self.epsilons), "centers": "periodic", "rows": [
            dict(zip(self.HEADER, (r.n, r.eps, r.max_cluster, r.local_rate))) for r in self.rows
        ]})


# -- Bowen distances -------------------------------------------------------------


def bowen_distance(sys: S.SystemSpec, x, y, n: int) -> float:
    """max over 0 <= k < n of d(f^k x, f^k y)."""
    ox = S.orbit_array(sys, x, n)
    oy = S.orbit_array(sys, y, n)
    return float(np.max(S.distance(sys, ox, oy)))


def trajectories(sys: S.SystemSpec, per_n, n: int) -> np.ndarray:
    """First ``n`` iterates of every point of ``per_n``: shape (N, n[, 2]).

    ``per_n`` may be a PerSet or list of orbits, in which case iterates are
    read off the cycles (no rounding drift), or a plain array of points.
    """
    if isinstance(per_n, PerSet):
        per_n = per_n.orbits
    if len(per_n) and isinstance(per_n[0], Orbit):
        blocks = []
        for o in per_n:
            d = o.minimal_period
            idx = (np.arange(d)[:, None] + np.arange(n)[None, :]) % d
            blocks.append(o.points[idx])
        return np.concatenate(blocks)
    pts = np.asarray(per_n, dtype=float)
    out = np.empty((len(pts), n) + pts.shape[1:])
    cur = pts
    for k in range(n):
        out[:, k] = cur
        cur = S.step(sys, cur)
    return out


def _flat(traj):
    return traj.reshape(len(traj), -1)


def ball_counts(sys: S.SystemSpec, per_n, n: int, eps: float, centers=None) -> np.ndarray:
    """#(per_n ∩ B(c, n, eps)) for each center (default: every point of per_n)."""
    traj = trajectories(sys, per_n, n)
    if len(traj) == 0:
        return np.zeros(0, dtype=int)
    ctraj = traj if centers is None else trajectories(sys, centers, n)
    r = np.nextafter(eps, 0)
    if sys.domain != "planar-box":
        # wrapped or absolute coordinates: the Bowen metric is the sup norm of
        # the concatenated trajectory
        tree = cKDTree(_flat(traj), boxsize=1.0 if sys.periodic_metric else None)
        return np.asarray(tree.query_ball_point(_flat(ctraj), r, p=np.inf, return_length=True))
    counts = np.empty(len(ctraj), dtype=int)
    chunk = max(1, 2_000_000 // max(1, len(traj) * n))
    for s in range(0, len(ctraj), chunk):
        c = ctraj[s:s + chunk]
        d = S.distance(sys, c[:, None], traj[None, :]).max(axis=-1)
        counts[s:s + chunk] = (d < eps).sum(axis=1)
    return counts


def max_local_count(sys: S.SystemSpec, per_n, n: int, eps: float) -> int:
    """max over p in per_n of #{q in per_n : bowen_distance(p, q, n) < eps}."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    counts = ball_counts(sys, per_n, n, eps)
    return int(counts.max()) if len(counts) else 0


def pk_functional(sys: S.SystemSpec, orbit: Orbit, per_n, eps: float, rate: bool = False) -> float:
    """Average of log #(Per_n ∩ B(x, n, eps)) over the n points x of an orbit.

    With ``rate=True`` the average is further divided by n, which turns it
    into a growth rate comparable with log(max cluster)/n.
    """
    n = orbit.minimal_period
    counts = ball_counts(sys, per_n, n, eps, centers=[orbit])
    if np.any(counts < 1):
        raise ValueError("orbit points must belong to per_n")
    value = float(np.log(counts).mean())
    return value / n if rate else value


# -- growth tables -----------------------------------------------------------------


def growth_table(sys: S.SystemSpec, ns: Sequence[int], delta: float, method: str = "auto",
                 cfg: NewtonConfig = NewtonConfig()) -> GrowthTable:
    table = GrowthTable(delta)
    for n in ns:
        ps = per_set(sys, n, method, cfg)
        kept = filter_delta(ps.orbits, delta)
        table.rows.append(GrowthRow(n, ps.count(), sum(o.minimal_period for o in kept)))
    return table


def local_growth_curve(sys: S.SystemSpec, ns: Sequence[int], epsilons=DEFAULT_EPSILONS,
                       delta: Optional[float] = None, method: str = "auto",
                       cfg: NewtonConfig = NewtonConfig()) -> LocalGrowthCurve:
    """Local counts on Per_n (or Per_n^delta when ``delta`` is given)."""
    epsilons = tuple(sorted(epsilons, reverse=True))
    curve = LocalGrowthCurve(epsilons)
    for n in ns:
        orbits = per_set(sys, n, method, cfg).orbits
        if delta is not None:
            orbits = filter_delta(orbits, delta)
        for eps in epsilons:
            curve.rows.append(LocalRow(n, eps, max_local_count(sys, orbits, n, eps)))
    return curve


def estimate_growth_rate(table: GrowthTable, column: str = "all") -> tuple:
    """Least-squares slope of log(count) against n over the larger-n half.

    Returns ``(slope, rates)`` where ``rates`` holds log(count)/n per row.
    """
    attr = {"all": "count_all", "delta": "count_delta"}[column]
    rows = sorted((r for r in table.rows if getattr(r, attr) >= 1), key=lambda r: r.n)
    if len(rows) < 3:
        raise InsufficientDataError("need at least 3 rows with positive counts")
    rates = [math.log(getattr(r, attr)) / r.n for r in rows]
    tail = rows[len(rows) - max(2, math.ceil(len(rows) / 2)):]
    n = np.array([r.n for r in tail], dtype=float)
    y = np.array([math.log(getattr(r, attr)) for r in tail])
    slope = float(np.polyfit(n, y, 1)[0])
    return slope, rates


# -- combinatorics ---------------------------------------------------------------


def entropy_defect_H(t: float) -> float:
    """-(1/t)log(1/t) - (1 - 1/t)log(1 - 1/t) for t >= 1, with 0 log 0 = 0."""
    if not t >= 1:
        raise DomainError("H is defined for t >= 1")
    s = 1.0 / t
    out = s * math.log(t)
    if s < 1:
        out -= (1 - s) * math.log1p(-s)
    return out


def count_bounded_sum_sequences(m: int, total) -> tuple:
    """Number of positive integer tuples (k_0..k_m) with sum <= total.

    Returns ``(exact, bound)`` with bound = exp(total * H(total/(m+1))); the
    bound is None when total < m + 1 (no tuples, H undefined).
    """
    if m < 0:
        raise DomainError("m must be nonnegative")
    top = math.floor(total)
    length = m + 1
    if top < length:
        return 0, None
    # ways[s]: tuples of the current length with sum exactly s
    ways = [0] * (top + 1)
    ways[0] = 1
    for _ in range(length):
        new = [0] * (top + 1)
        acc = 0
        for s in range(1, top + 1):
            acc += ways[s - 1]
            new[s] = acc
        ways = new
    exact = sum(ways)
    try:
        bound = math.exp(total * entropy_defect_H(total / length))
    except OverflowError:
        bound = math.inf
    if exact > bound * (1 + 1e-12):
        raise AssertionError(f"count {exact} exceeds bound {bound}")
    return exact, bound


# -- cocycle statistics --------------------------------------------------------------


def _log_norm_conorm(mats):
    """log of norm and conorm of the ordered product mats[-1] @ ... @ mats[0]."""
    prod = np.eye(2)
    log_scale = 0.0
    log_det = 0.0
    for j in mats:
        log_det += math.log(abs(np.linalg.det(j)))
        prod = j @ prod
        s = np.abs(prod).max()
        prod /= s
        log_scale += math.log(s)
    log_norm = math.log(np.linalg.svd(prod, compute_uv=False)[0]) + log_scale
    return log_norm, log_det - log_norm


def cocycle_stats(sys: S.SystemSpec, x, n: int, p: int) -> tuple:
    """Block averages of the tangent cocycle along the orbit of ``x``.

    Returns ``(lambda_plus, lambda, r_n)``: the mean of log+ ||T f^p|| and of
    log(||T f^p|| / m(T f^p)) over the floor(n/p) consecutive blocks, and
    (1/n) log+ ||T_x f^n||.
    """
    if sys.dimension != 2:
        raise DomainError("cocycle statistics need a planar system")
    if p < 1 or n < p:
        raise DomainError("need 1 <= p <= n")
    orbit = S.orbit_array(sys, x, n)
    jac = S.jacobians(sys, orbit)
    blocks = n // p
    plus, ratio = 0.0, 0.0
    for j in range(blocks):
        ln, lc = _log_norm_conorm(jac[j * p:(j + 1) * p])
        plus += max(ln, 0.0)
        ratio += ln - lc
    ln_total, _ = _log_norm_conorm(jac)
    return plus / blocks, ratio / blocks, max(ln_total, 0.0) / n


def r_estimate(sys: S.SystemSpec, n: int, grid: int = 32) -> float:
    """sup over a grid of (1/n) log+ ||T_x f^n||, skipping escaping points."""
    if sys.dimension == 1:
        pts = (np.arange(grid * grid) + 0.5) / (grid * grid)
    else:
        t = sys.lower + (np.arange(grid) + 0.5) * (sys.upper - sys.lower) / grid
        xx, yy = np.meshgrid(t, t, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    cur = pts
    alive = np.ones(len(pts), dtype=bool)
    if sys.dimension == 1:
        logd = np.zeros(len(pts))
        with np.errstate(divide="ignore"):
            for _ in range(n):
                alive &= S.in_domain(sys, cur)
                logd += np.log(np.abs(S.jacobians(sys, cur)))
                cur = S.step(sys, cur)
        vals = logd[alive]
    else:
        prod = np.broadcast_to(np.eye(2), (len(pts), 2, 2)).copy()
        log_scale = np.zeros(len(pts))
        with np.errstate(all="ignore"):
            for _ in range(n):
                alive &= S.in_domain(sys, cur)
                prod = S.jacobians(sys, cur) @ prod
                s = np.abs(prod).max(axis=(1, 2))
                prod /= s[:, None, None]
                log_scale += np.log(s)
                cur = S.step(sys, cur)
            norms = np.linalg.norm(prod[alive], ord=2, axis=(1, 2))
        vals = np.log(norms) + log_scale[alive]
    vals = vals[np.isfinite(vals)]
    best = float(vals.max()) if len(vals) else 0.0
    return max(best, 0.0) / n
