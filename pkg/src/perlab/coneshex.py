"""Cones in the plane, finite-time hyperbolicity checks and hexagon masks.

A cone is a symmetric sector around a line through the origin, so membership
only depends on the line of a vector.  Angles between lines live in
``[0, pi/2]``.

Hexagon masks are rasterized regions of the unit square.  A mask qualifies
when every pair of its cells is joined inside the mask by a staircase path,
that is a path of unit moves whose horizontal steps share one sign and whose
vertical steps share one sign.  On a grid this is the same as being a
connected region whose columns are intervals bounded below by an
anti-unimodal profile and above by a unimodal one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import systems as S
from .errors import DomainError, PreconditionError, SchemaError
from .serialize import dumps

ANGLE_TOL = 1e-12


def line_angle(v) -> float:
    """Angle in [0, pi) of the line spanned by a nonzero vector."""
    x, y = float(v[0]), float(v[1])
    if x == 0 and y == 0:
        raise DomainError("the zero vector spans no line")
    a = math.atan2(y, x) % math.pi
    return 0.0 if a >= math.pi else a


def line_distance(a: float, b: float) -> float:
    """Unsigned angle between the lines at angles a and b."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


@dataclass(frozen=True)
class Cone:
    center_angle: float
    aperture: float

    def __post_init__(self):
        if not 0 < self.aperture < math.pi:
            raise DomainError("cone aperture must lie in (0, pi)")
        object.__setattr__(self, "center_angle", self.center_angle % math.pi)

    @property
    def center(self) -> np.ndarray:
        return np.array([math.cos(self.center_angle), math.sin(self.center_angle)])

    def contains(self, v) -> bool:
        return line_distance(line_angle(v), self.center_angle) <= self.aperture / 2 + ANGLE_TOL

    __contains__ = contains

    def scaled(self, factor: float) -> "Cone":
        return Cone(self.center_angle, self.aperture * factor)


class ConeFamily(NamedTuple):
    """Cones of a common aperture centered on equally spaced lines."""

    cones: list
    alpha: float
    sparse_count: int
    sparse_count_covers: bool

    def __len__(self):
        return len(self.cones)

    def __iter__(self):
        return iter(self.cones)

    def __getitem__(self, i):
        return self.cones[i]

    def covers(self, v, factor: float = 0.5) -> bool:
        return any(c.scaled(factor).contains(v) for c in self.cones)


def _half_cones_cover(m: int, alpha: float) -> bool:
    # lines jπ/m; every direction is within π/(2m) of a center
    return math.pi / (2 * m) <= alpha / 4 + ANGLE_TOL


def cone_family(alpha: float) -> ConeFamily:
    """Aperture-alpha cones whose half-aperture copies cover every direction.

    Uses ``max(floor(4/alpha)+1, ceil(2*pi/alpha)+1)`` center lines and
    records whether the smaller count alone would have covered.
    """
    if not 0 < alpha < math.pi:
        raise DomainError("alpha must lie in (0, pi)")
    sparse = math.floor(4 / alpha) + 1
    m = max(sparse, math.ceil(2 * math.pi / alpha) + 1)
    cones = [Cone(j * math.pi / m, alpha) for j in range(m)]
    if not _half_cones_cover(m, alpha):
        raise AssertionError("cone family fails to cover the plane")
    return ConeFamily(cones, alpha, sparse, _half_cones_cover(sparse, alpha))


def is_alpha_transverse(c1: Cone, c2: Cone, alpha: float) -> bool:
    """All angles between lines of c1 and lines of c2 exceed alpha.

    The angle between two vectors then lies strictly between alpha and
    pi - alpha, since both cones are symmetric through the origin.
    """
    gap = line_distance(c1.center_angle, c2.center_angle) - (c1.aperture + c2.aperture) / 2
    return max(0.0, gap) > alpha


@dataclass(frozen=True)
class Bicone:
    cu: Cone
    cs: Cone

    def transverse(self, alpha: float) -> bool:
        return is_alpha_transverse(self.cu, self.cs, alpha)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    r = float(np.hypot(v[0], v[1]))
    if r == 0 or not math.isfinite(r):
        raise DomainError("direction vectors must be finite and nonzero")
    v = v / r
    # canonical sign: the first nonzero coordinate is positive
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return v


@dataclass(frozen=True, eq=False)
class CocycleSample:
    base: tuple
    eu: np.ndarray
    es: np.ndarray
    monodromy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eu", _unit(self.eu))
        object.__setattr__(self, "es", _unit(self.es))
        M = np.asarray(self.monodromy, dtype=float)
        if M.shape != (2, 2):
            raise DomainError("monodromy must be a 2x2 matrix")
        object.__setattr__(self, "monodromy", M)


def certify_hyperbolic(samples, bc: Bicone, C: float, delta: float, n: int) -> bool:
    """Check the cone and growth inequalities at every sample.

    The images of eu and es must stay in their cones, with |M eu| at least
    C e^{n delta} and |M es| at most e^{-n delta} / C.  Only the supplied
    samples are examined.
    """
    if C <= 0 or delta <= 0 or n < 1:
        raise DomainError("need C > 0, delta > 0 and n >= 1")
    grow = C * math.exp(n * delta)
    shrink = math.exp(-n * delta) / C
    ok = True
    for smp in samples:
        if not bc.cu.contains(smp.eu) or not bc.cs.contains(smp.es):
            raise PreconditionError(f"sample at {tuple(smp.base)} has a field outside its cone")
        u = smp.monodromy @ smp.eu
        s = smp.monodromy @ smp.es
        nu, ns = float(np.hypot(*u)), float(np.hypot(*s))
        if not (nu >= grow and nu > 0 and bc.cu.contains(u)):
            ok = False
        elif not (ns <= shrink and (ns == 0 or bc.cs.contains(s))):
            ok = False
    return ok


def certificate_json(n: int, C: float, delta: float, alpha: float, samples_checked: int,
                     passed: bool) -> str:
    return dumps({"n": n, "C": C, "delta": delta, "alpha": alpha,
                  "samples_checked": samples_checked, "pass": passed,
                  "note": "sample-based check, not a proof over the region"})


class RegionCheck(NamedTuple):
    passed: bool
    count: int


def unique_periodic_in_region(region: Callable, per_n, certified: bool) -> RegionCheck:
    """Count points of per_n satisfying ``region``; a certified region may hold one."""
    count = sum(1 for p in per_n if region(p))
    return RegionCheck((not certified) or count <= 1, count)


# -- dynamical boxes -----------------------------------------------------------------


def eigen_fields(M) -> tuple[np.ndarray, np.ndarray]:
    """Unstable and stable eigendirections of a hyperbolic 2x2 matrix."""
    w, V = np.linalg.eig(np.asarray(M, dtype=float))
    if np.iscomplexobj(w) and np.any(np.abs(w.imag) > 0):
        raise DomainError("monodromy has complex eigenvalues")
    w, V = w.real, V.real
    order = np.argsort(-np.abs(w))
    return _unit(V[:, order[0]]), _unit(V[:, order[1]])


def monodromies(sys: S.SystemSpec, pts: np.ndarray, n: int) -> np.ndarray:
    """T f^n at each point, shape (N, 2, 2)."""
    cur = np.asarray(pts, dtype=float)
    M = np.broadcast_to(np.eye(2), cur.shape[:-1] + (2, 2)).copy()
    for _ in range(n):
        M = S.jacobians(sys, cur) @ M
        cur = S.step(sys, cur)
    return M


@dataclass(frozen=True)
class DynamicalBox:
    """Points of a square whose first n iterates stay within ``side`` of the
    iterates of the square's center (open Bowen ball, max metric on the torus)."""

    sys: S.SystemSpec
    corner: tuple
    side: float
    n: int
    _center_orbit: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.corner, dtype=float) + self.side / 2
        if self.sys.periodic_metric:
            c = np.mod(c, 1.0)
        traj = np.empty((self.n, 2))
        cur = c
        for k in range(self.n):
            traj[k] = cur
            cur = S.step(self.sys, cur)
        object.__setattr__(self, "_center_orbit", traj)

    @property
    def center(self) -> np.ndarray:
        return self._center_orbit[0]

    def in_square(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        d = pts - np.asarray(self.corner, dtype=float)
        if self.sys.periodic_metric:
            d = np.mod(d, 1.0)
        return ((d >= 0) & (d < self.side)).all(axis=-1)

    def contains_all(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = self.in_square(pts)
        cur = pts.copy()
        for k in range(self.n):
            ok &= S.distance(self.sys, cur, self._center_orbit[k]) < self.side
            cur = S.step(self.sys, cur)
        return ok

    def __call__(self, p) -> bool:
        return bool(self.contains_all(p)[0])

    def samples(self, k: int) -> np.ndarray:
        """k x k cell-centered sample points of the square."""
        t = (np.arange(k) + 0.5) / k * self.side
        gx, gy = np.meshgrid(self.corner[0] + t, self.corner[1] + t, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        return np.mod(pts, 1.0) if self.sys.periodic_metric else pts


class BoxCertificate(NamedTuple):
    corner: tuple
    certified: bool
    count: int
    passed: bool
    samples_checked: int


def certify_box(sys: S.SystemSpec, corner, side: float, n: int, C: float, delta: float,
                per_n_points, aperture: float = math.pi / 6, samples: int = 3,
                alpha: float = math.pi / 6) -> BoxCertificate:
    """Certify one dynamical box with eigendirection cone fields and count
    the periodic points it carries.

    The cones are centered on the eigendirections of T f^n at the box
    center; the box counts as certified when they are alpha-transverse and
    every sample passes :func:`certify_hyperbolic`.
    """
    if sys.dimension != 2:
        raise DomainError("cone certificates need a planar system")
    box = DynamicalBox(sys, tuple(corner), side, n)
    eu, es = eigen_fields(monodromies(sys, box.center[None, :], n)[0])
    bc = Bicone(Cone(line_angle(eu), aperture), Cone(line_angle(es), aperture))
    pts = box.samples(samples)
    Ms = monodromies(sys, pts, n)
    cocycles = [CocycleSample(tuple(p), eu, es, M) for p, M in zip(pts, Ms)]
    try:
        certified = bc.transverse(alpha) and certify_hyperbolic(cocycles, bc, C, delta, n)
    except PreconditionError:
        certified = False
    pts_in = np.asarray(per_n_points, dtype=float)
    count = int(box.contains_all(pts_in).sum()) if len(pts_in) else 0
    return BoxCertificate(tuple(float(c) for c in corner), certified,
                          count, (not certified) or count <= 1, len(cocycles))


def box_sweep(sys: S.SystemSpec, n: int, per_n_points, boxes_per_axis: int = 20,
              side: Optional[float] = None, C: float = 1.0, delta: float = 0.9,
              **kw) -> list[BoxCertificate]:
    """Certify every box of a regular sweep over the unit square."""
    side = 1.0 / boxes_per_axis if side is None else side
    out = []
    for i in range(boxes_per_axis):
        for j in range(boxes_per_axis):
            corner = (i / boxes_per_axis, j / boxes_per_axis)
            out.append(certify_box(sys, corner, side, n, C, delta, per_n_points, **kw))
    return out


# -- hexagon masks -------------------------------------------------------------------


@dataclass(eq=False)
class HexMask:
    """Square boolean grid; ``cells[y, x]`` with row 0 at the bottom."""

    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=bool)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise DomainError("a mask is a nonempty square grid")
        if not c.any():
            raise DomainError("a mask must contain at least one cell")
        self.cells = c

    @property
    def resolution(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other):
        return isinstance(other, HexMask) and np.array_equal(self.cells, other.cells)

    @classmethod
    def from_predicate(cls, res: int, pred: Callable) -> "HexMask":
        """Cells whose centers satisfy ``pred(x, y)`` on the unit square."""
        t = (np.arange(res) + 0.5) / res
        X, Y = np.meshgrid(t, t)
        return cls(np.vectorize(pred, otypes=[bool])(X, Y))

    def to_pbm(self) -> str:
        res = self.resolution
        lines = ["P1", f"{res} {res}"]
        for row in self.cells[::-1]:
            lines.append(" ".join("1" if v else "0" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_pbm(cls, text: str) -> "HexMask":
        toks = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0]
            toks.extend((lineno, t) for t in line.split())
        if not toks or toks[0][1] != "P1":
            raise SchemaError("expected plain PBM magic 'P1'", "line 1")
        try:
            w, h = int(toks[1][1]), int(toks[2][1])
        except (IndexError, ValueError):
            raise SchemaError("missing or invalid width/height", "header") from None
        if w != h or w < 1:
            raise SchemaError(f"mask must be square, got {w}x{h}", "header")
        body = toks[3:]
        # pixels may also be written without separators
        bits = []
        for lineno, t in body:
            for ch in t:
                if ch not in "01":
                    raise SchemaError(f"invalid pixel {ch!r}", f"line {lineno}")
                bits.append(ch == "1")
        if len(bits) != w * h:
            raise SchemaError(f"expected {w * h} pixels, got {len(bits)}", "body")
        grid = np.array(bits, dtype=bool).reshape(h, w)[::-1]
        try:
            return cls(grid)
        except DomainError as exc:
            raise SchemaError(str(exc), "body") from None


def _reach_sets(cells: np.ndarray, dx: int) -> list:
    """For each cell, the bitset of cells reachable by moves (dx, 0) and (0, +1)."""
    res = cells.shape[0]
    reach = [0] * (res * res)
    xs = range(res - 1, -1, -1) if dx > 0 else range(res)
    for y in range(res - 1, -1, -1):
        for x in xs:
            if not cells[y, x]:
                continue
            i = y * res + x
            r = 1 << i
            nx = x + dx
            if 0 <= nx < res and cells[y, nx]:
                r |= reach[i + dx]
            if y + 1 < res and cells[y + 1, x]:
                r |= reach[i + res]
            reach[i] = r
    return reach


def _mask_bits(cells: np.ndarray) -> int:
    flat = np.flatnonzero(cells.ravel())
    out = 0
    for i in flat.tolist():
        out |= 1 << i
    return out


def is_hexagon(mask: HexMask) -> Optional[tuple[int, int]]:
    """``(1, 1)`` when every pair of cells is joined by a staircase path in
    the mask, else None.

    Paths of every sign class are tried, so a positive answer means each
    pair is joined in the class that matches its relative position.  The
    pair is reported in the canonical orientation.
    """
    cells = mask.cells
    res = cells.shape[0]
    inside = _mask_bits(cells)
    row_all = (1 << res) - 1
    col_block = 0
    for y in range(res):
        col_block |= row_all << (y * res)
    # ge[x] / le[x]: all rows, columns >= x / <= x
    ge, le = [], []
    for x in range(res):
        r_ge = (row_all >> x) << x
        r_le = (1 << (x + 1)) - 1
        g = l = 0
        for y in range(res):
            g |= r_ge << (y * res)
            l |= r_le << (y * res)
        ge.append(g)
        le.append(l)
    ne = _reach_sets(cells, +1)
    nw = _reach_sets(cells, -1)
    for y in range(res):
        upper = (col_block >> (y * res)) << (y * res)
        for x in range(res):
            if not cells[y, x]:
                continue
            i = y * res + x
            if ne[i] != inside & upper & ge[x]:
                return None
            if nw[i] != inside & upper & le[x]:
                return None
    return (1, 1)


@dataclass(frozen=True, eq=False)
class Profile:
    """Column range [a, b], peak column c of eta, trough column d of zeta,
    and per-column bounds: column x holds rows zeta[x] <= y < eta[x]."""

    a: int
    b: int
    c: int
    d: int
    zeta: np.ndarray
    eta: np.ndarray
    resolution: int

    def reconstruct(self) -> HexMask:
        res = self.resolution
        grid = np.zeros((res, res), dtype=bool)
        for k, x in enumerate(range(self.a, self.b + 1)):
            grid[self.zeta[k]:self.eta[k], x] = True
        return HexMask(grid)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "zeta": self.zeta.tolist(), "eta": self.eta.tolist()}


def _unimodal_peak(v: np.ndarray) -> Optional[int]:
    """First index of the maximum if v rises then falls, else None."""
    if len(v) == 0:
        return None
    c = int(np.argmax(v))
    if np.all(np.diff(v[: c + 1]) >= 0) and np.all(np.diff(v[c:]) <= 0):
        return c
    return None


def profile_decomposition(mask: HexMask) -> Optional[Profile]:
    """Split a hexagon mask into lower and upper column profiles.

    Returns None when a column is not an interval, the occupied columns are
    not contiguous, neighbouring columns do not overlap, or the profiles are
    not (anti-)unimodal.
    """
    cells = mask.cells
    cols = np.flatnonzero(cells.any(axis=0))
    a, b = int(cols[0]), int(cols[-1])
    if len(cols) != b - a + 1:
        return None
    zeta = np.empty(b - a + 1, dtype=np.int64)
    eta = np.empty(b - a + 1, dtype=np.int64)
    for k, x in enumerate(range(a, b + 1)):
        rows = np.flatnonzero(cells[:, x])
        if rows[-1] - rows[0] + 1 != len(rows):
            return None
        zeta[k], eta[k] = rows[0], rows[-1] + 1
    if np.any(np.maximum(zeta[1:], zeta[:-1]) >= np.minimum(eta[1:], eta[:-1])):
        return None
    c = _unimodal_peak(eta)
    d = _unimodal_peak(-zeta)
    if c is None or d is None:
        return None
    prof = Profile(a, b, a + c, a + d, zeta, eta, mask.resolution)
    if prof.reconstruct() != mask:
        raise AssertionError("profile reconstruction differs from the mask")
    return prof


# -- region generators ----------------------------------------------------------------


def _unimodal(rng, length: int, lo: int, hi: int, peak: int) -> np.ndarray:
    left = np.sort(rng.integers(lo, hi + 1, size=peak + 1))
    right = np.sort(rng.integers(lo, hi + 1, size=length - peak - 1))[::-1]
    v = np.concatenate([left, right])
    v[peak] = max(v[peak], v.max())
    return v


def random_profile_mask(res: int, rng: np.random.Generator) -> HexMask:
    """A random region between an anti-unimodal and a unimodal profile."""
    a = int(rng.integers(0, res // 2))
    b = int(rng.integers(a, res))
    w = b - a + 1
    if rng.random() < 0.5:
        # every column crosses a common row
        L = int(rng.integers(0, res))
        eta = _unimodal(rng, w, L + 1, res, int(rng.integers(0, w)))
        zeta = -_unimodal(rng, w, -L, 0, int(rng.integers(0, w)))
    else:
        # a monotone diagonal band, reflected at random
        steps = rng.integers(0, 3, size=w)
        zeta = np.minimum(np.cumsum(steps) - steps[0], res - 1)
        width = int(rng.integers(1, max(2, res // 3)))
        nxt = np.append(zeta[1:], zeta[-1])
        eta = np.minimum(np.maximum(zeta, nxt) + width, res)
        if rng.random() < 0.5:
            zeta, eta = zeta[::-1].copy(), eta[::-1].copy()
    grid = np.zeros((res, res), dtype=bool)
    for k, x in enumerate(range(a, b + 1)):
        grid[zeta[k]:eta[k], x] = True
    return HexMask(grid)


def random_non_hexagon_mask(res: int, rng: np.random.Generator) -> HexMask:
    """A random region that is either holed or split into two pieces."""
    if res < 4:
        raise DomainError("need resolution at least 4")
    if rng.random() < 0.5:
        x0, y0 = rng.integers(0, res - 2, size=2)
        x1 = int(rng.integers(x0 + 3, res + 1)) if x0 + 3 <= res else res
        y1 = int(rng.integers(y0 + 3, res + 1)) if y0 + 3 <= res else res
        grid = np.zeros((res, res), dtype=bool)
        grid[y0:y1, x0:x1] = True
        hx = int(rng.integers(x0 + 1, x1 - 1))
        hy = int(rng.integers(y0 + 1, y1 - 1))
        grid[hy, hx] = False
        return HexMask(grid)
    grid = np.zeros((res, res), dtype=bool)
    split = int(rng.integers(1, res - 1))
    for cols in (slice(0, int(rng.integers(1, split + 1))),
                 slice(int(rng.integers(split + 1, res)), res)):
        y0 = int(rng.integers(0, res))
        grid[y0:int(rng.integers(y0 + 1, res + 1)), cols] = True
    return HexMask(grid)
