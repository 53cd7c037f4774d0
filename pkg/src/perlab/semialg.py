"""Exact polynomials over the rationals, resultants and degree bounds.

Everything here is exact: coefficients are :class:`fractions.Fraction` and
determinants use fraction-free elimination with exact polynomial division.
The only modular arithmetic is inside :func:`minimal_vanishing_degree`,
where ranks are screened modulo word-size primes and every claimed
vanishing polynomial is verified exactly before it is reported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (DomainError, EliminationDegeneracyError, InsufficientDataError,
                     SchemaError)
from .serialize import dumps


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as a coefficient")


class MultiPoly:
    """Polynomial in ``nvars`` variables with rational coefficients.

    ``terms`` maps exponent tuples to nonzero Fractions.  Instances are
    treated as immutable.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping | None = None):
        if nvars < 0:
            raise DomainError("nvars must be nonnegative")
        self.nvars = nvars
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != nvars or any(k < 0 for k in e):
                raise DomainError(f"bad exponent {e} for {nvars} variables")
            c = _frac(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
                if not clean[e]:
                    del clean[e]
        self.terms = clean

    # -- constructors
    @classmethod
    def const(cls, nvars: int, c) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "MultiPoly":
        if not 0 <= i < nvars:
            raise DomainError(f"variable {i} out of range")
        return cls(nvars, {tuple(int(k == i) for k in range(nvars)): 1})

    @classmethod
    def gens(cls, nvars: int) -> list["MultiPoly"]:
        return [cls.var(nvars, i) for i in range(nvars)]

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "MultiPoly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        return p

    # -- predicates and degrees
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def total_degree(self) -> Optional[int]:
        """Largest exponent sum; None for the zero polynomial."""
        if not self.terms:
            return None
        return max(sum(e) for e in self.terms)

    def degree_in(self, var: int) -> Optional[int]:
        if not self.terms:
            return None
        return max(e[var] for e in self.terms)

    def variables(self) -> set[int]:
        return {i for e in self.terms for i, k in enumerate(e) if k}

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    # -- arithmetic
    def _check(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            other = MultiPoly.const(self.nvars, other)
        if other.nvars != self.nvars:
            raise DomainError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
        return other

    def __add__(self, other):
        other = self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise DomainError("negative powers are not polynomials")
        out = MultiPoly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.const(self.nvars, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def _lead(self):
        e = max(self.terms)
        return e, self.terms[e]

    def exact_div(self, other: "MultiPoly") -> "MultiPoly":
        """Quotient of an exact division; raises ArithmeticError otherwise."""
        other = self._check(other)
        if not other.terms:
            raise ZeroDivisionError("division by the zero polynomial")
        if len(other.terms) == 1:
            (eo, co), = other.terms.items()
            out = {}
            for e, c in self.terms.items():
                q = tuple(a - b for a, b in zip(e, eo))
                if min(q, default=0) < 0:
                    raise ArithmeticError("division is not exact")
                out[q] = c / co
            return MultiPoly._raw(self.nvars, out)
        le, lc = other._lead()
        rem = self
        quot: dict = {}
        while rem.terms:
            e, c = rem._lead()
            q = tuple(a - b for a, b in zip(e, le))
            if min(q) < 0:
                raise ArithmeticError("division is not exact")
            t = MultiPoly._raw(self.nvars, {q: c / lc})
            quot[q] = quot.get(q, 0) + c / lc
            rem = rem - t * other
        return MultiPoly(self.nvars, quot)

    # -- evaluation and substitution
    def eval(self, point: Sequence) -> Fraction:
        if len(point) != self.nvars:
            raise DomainError(f"expected {self.nvars} coordinates")
        pt = [_frac(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for v, k in zip(pt, e):
                if k:
                    t *= v**k
            total += t
        return total

    def eval_float(self, point: Sequence) -> float:
        total = 0.0
        for e, c in self.terms.items():
            t = float(c)
            for v, k in zip(point, e):
                if k:
                    t *= float(v) ** k
            total += t
        return total

    def coeffs_in(self, var: int) -> list["MultiPoly"]:
        """Coefficients of var^0, var^1, ... as polynomials free of var."""
        deg = self.degree_in(var)
        if deg is None:
            return []
        parts: list[dict] = [{} for _ in range(deg + 1)]
        for e, c in self.terms.items():
            k = e[var]
            parts[k][e[:var] + (0,) + e[var + 1:]] = c
        return [MultiPoly._raw(self.nvars, p) for p in parts]

    def remap(self, nvars: int, positions: Sequence[int]) -> "MultiPoly":
        """Move variable i to index positions[i] in a ring of nvars variables."""
        if len(positions) != self.nvars:
            raise DomainError("one target position per variable")
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for k, pos in zip(e, positions):
                ne[pos] += k
            out[tuple(ne)] = c
        return MultiPoly(nvars, out)

    def drop_unused(self, keep: Sequence[int]) -> "MultiPoly":
        """Restrict to the variables listed in ``keep`` (others must be absent)."""
        if self.variables() - set(keep):
            raise DomainError("polynomial still depends on a dropped variable")
        return MultiPoly(len(keep), {tuple(e[i] for i in keep): c for e, c in self.terms.items()})

    # -- text
    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(f"x{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"({c})*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_dict(self) -> dict:
        terms = [{"exps": list(e), "num": c.numerator, "den": c.denominator}
                 for e, c in sorted(self.terms.items())]
        return {"nvars": self.nvars, "terms": terms}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc) -> "MultiPoly":
        if not isinstance(doc, dict):
            raise SchemaError("polynomial must be a JSON object", "$")
        nvars = doc.get("nvars")
        if not isinstance(nvars, int) or isinstance(nvars, bool) or nvars < 0:
            raise SchemaError("nvars must be a nonnegative integer", "$.nvars")
        terms = doc.get("terms")
        if not isinstance(terms, list):
            raise SchemaError("terms must be a list", "$.terms")
        out: dict = {}
        for i, t in enumerate(terms):
            where = f"$.terms[{i}]"
            if not isinstance(t, dict):
                raise SchemaError("term must be an object", where)
            exps, num, den = t.get("exps"), t.get("num"), t.get("den", 1)
            if (not isinstance(exps, list) or len(exps) != nvars
                    or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 0
                               for k in exps)):
                raise SchemaError(f"exps must be {nvars} nonnegative integers", where + ".exps")
            for name, v in (("num", num), ("den", den)):
                if not isinstance(v, int) or isinstance(v, bool):
                    raise SchemaError(f"{name} must be an integer", f"{where}.{name}")
            if den == 0:
                raise SchemaError("den must be nonzero", where + ".den")
            key = tuple(exps)
            out[key] = out.get(key, Fraction(0)) + Fraction(num, den)
        return cls(nvars, out)


def poly_from_callable(nvars: int, build) -> MultiPoly:
    """``build(*gens)`` evaluated on the generators of a ring."""
    return build(*MultiPoly.gens(nvars))


# -- determinants and resultants -------------------------------------------------------


def bareiss_det(matrix: list[list[MultiPoly]]) -> MultiPoly:
    """Determinant by fraction-free elimination with exact divisions."""
    n = len(matrix)
    if n == 0:
        raise DomainError("empty matrix")
    nv = matrix[0][0].nvars
    M = [list(row) for row in matrix]
    sign = 1
    prev = MultiPoly.const(nv, 1)
    for k in range(n - 1):
        if not M[k][k]:
            swap = next((i for i in range(k + 1, n) if M[i][k]), None)
            if swap is None:
                return MultiPoly(nv)
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        pivot = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = pivot * M[i][j] - M[i][k] * M[k][j]
                M[i][j] = num.exact_div(prev) if prev.terms != {(0,) * nv: 1} else num
            M[i][k] = MultiPoly(nv)
        prev = pivot
    det = M[n - 1][n - 1]
    return -det if sign < 0 else det


def sylvester_matrix(P: MultiPoly, Q: MultiPoly, var: int) -> list[list[MultiPoly]]:
    """Rows of shifted coefficient vectors, highest power first."""
    p, q = P.degree_in(var), Q.degree_in(var)
    cp = P.coeffs_in(var)[::-1]
    cq = Q.coeffs_in(var)[::-1]
    size = p + q
    zero = MultiPoly(P.nvars)
    rows = []
    for i in range(q):
        rows.append([zero] * i + cp + [zero] * (size - p - 1 - i))
    for i in range(p):
        rows.append([zero] * i + cq + [zero] * (size - q - 1 - i))
    return rows


def sylvester_resultant(P: MultiPoly, Q: MultiPoly, var: int) -> MultiPoly:
    """Resultant of P and Q with respect to ``var``.

    The result lives in the same ring with ``var`` absent.  When one input
    does not involve ``var`` the convention Res(P, c) = c^deg(P) applies.
    """
    if P.nvars != Q.nvars:
        raise DomainError("nvars mismatch")
    if not 0 <= var < P.nvars:
        raise DomainError(f"variable {var} out of range")
    if not P or not Q:
        raise DomainError("resultant of the zero polynomial is undefined")
    p, q = P.degree_in(var), Q.degree_in(var)
    if p == 0 and q == 0:
        raise DomainError("both polynomials are constant in the elimination variable")
    if q == 0:
        return Q**p
    if p == 0:
        return P**q
    return bareiss_det(sylvester_matrix(P, Q, var))


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(A)
    M = [row[:] + [bv] for row, bv in zip(A, b)]
    for c in range(n):
        r = next((i for i in range(c, n) if M[i][c]), None)
        if r is None:
            raise ArithmeticError("singular system")
        M[c], M[r] = M[r], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for i in range(n):
            if i != c and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]


def resultant_cofactors(P: MultiPoly, Q: MultiPoly) -> tuple[MultiPoly, MultiPoly, MultiPoly]:
    """Univariate A, B with A*P + B*Q = Res(P, Q), deg A < deg Q, deg B < deg P.

    Demonstrates that the resultant lies in the ideal generated by P and Q.
    """
    if P.nvars != 1 or Q.nvars != 1:
        raise DomainError("cofactors are computed for univariate polynomials")
    res = sylvester_resultant(P, Q, 0)
    p, q = P.degree_in(0), Q.degree_in(0)
    if p == 0 or q == 0:
        raise DomainError("both polynomials need positive degree")
    if not res:
        raise ArithmeticError("resultant is zero; no cofactors with nonzero target")
    size = p + q
    cp, cq = P.coeffs_in(0), Q.coeffs_in(0)
    cols = []
    for i in range(q):
        v = [Fraction(0)] * size
        for k, c in enumerate(cp):
            v[i + k] = c.terms.get((0,), Fraction(0))
        cols.append(v)
    for i in range(p):
        v = [Fraction(0)] * size
        for k, c in enumerate(cq):
            v[i + k] = c.terms.get((0,), Fraction(0))
        cols.append(v)
    A = [[cols[j][r] for j in range(size)] for r in range(size)]
    rhs = [res.terms.get((0,), Fraction(0))] + [Fraction(0)] * (size - 1)
    x = _solve_exact(A, rhs)
    a = MultiPoly(1, {(i,): x[i] for i in range(q)})
    b = MultiPoly(1, {(i,): x[q + i] for i in range(p)})
    return a, b, res


# -- composition --------------------------------------------------------------------


def composition_vanishing_poly(p0: MultiPoly, ps: Sequence[MultiPoly]) -> MultiPoly:
    """Vanishing polynomial of a composition, by eliminating inner outputs.

    ``ps[i]`` vanishes on the graph of the inner component i, in variables
    ``(X_1..X_d, Y_i)``; ``p0`` vanishes on the graph of the outer map, in
    variables ``(Y_1..Y_e, Y)``.  The result is a polynomial in
    ``(X_1..X_d, Y)`` vanishing on the graph of the composition.
    """
    e = len(ps)
    if e == 0:
        raise DomainError("need at least one inner polynomial")
    if p0.nvars != e + 1:
        raise DomainError(f"outer polynomial needs {e + 1} variables")
    d = ps[0].nvars - 1
    if d < 1 or any(p.nvars != d + 1 for p in ps):
        raise DomainError("inner polynomials must share the input variables")
    if not p0 or any(not p for p in ps):
        raise DomainError("vanishing polynomials must be nonzero")
    nv = d + e + 1
    q = p0.remap(nv, list(range(d, d + e + 1)))
    for k, pk in enumerate(ps):
        yk = d + k
        Pk = pk.remap(nv, list(range(d)) + [yk])
        if Pk.degree_in(yk) == 0:
            raise EliminationDegeneracyError(
                f"inner polynomial {k} does not involve its output variable")
        if q.degree_in(yk) == 0:
            continue
        q = sylvester_resultant(Pk, q, yk)
        if not q:
            raise EliminationDegeneracyError(
                f"resultant vanished identically while eliminating inner output {k}; "
                "the supplied polynomials share a factor")
    return q.drop_unused(list(range(d)) + [d + e])


class DegreeBound(NamedTuple):
    factors: tuple
    dim: int
    bound: int


def iterated_bound(degrees: Sequence[int], d: int) -> DegreeBound:
    """Degree bound for psi_n o ... o psi_1: deg(psi_n) * prod_{i<n} deg(psi_i)^d."""
    degrees = tuple(int(k) for k in degrees)
    if not degrees or any(k < 1 for k in degrees) or d < 1:
        raise DomainError("need nonempty degrees >= 1 and d >= 1")
    bound = degrees[-1]
    for k in degrees[:-1]:
        bound *= k**d
    return DegreeBound(degrees, d, bound)


# -- minimal vanishing degree -------------------------------------------------------------

# primes just below 2**31 so products fit in int64
_PRIMES = (2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549,
           2147483543, 2147483497, 2147483489, 2147483477, 2147483423, 2147483399)


def monomials(nvars: int, degree: int) -> list[tuple]:
    """Exponent tuples of total degree <= degree, graded then lexicographic."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), total):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    out = sorted(set(out), key=lambda e: (sum(e), tuple(-k for k in e)))
    return out


def _rref_mod(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    M = M.copy() % p
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(M[r:, c])
        if len(nz) == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            M[[r, k]] = M[[k, r]]
        inv = pow(int(M[r, c]), p - 2, p)
        M[r] = (M[r] * inv) % p
        f = M[:, c].copy()
        f[r] = 0
        M = (M - (f[:, None] * M[r][None, :]) % p) % p
        pivots.append(c)
        r += 1
    return M, pivots


def _rational_reconstruct(a: int, m: int) -> Optional[Fraction]:
    """Fraction n/d with |n|, d <= sqrt(m/2) and n = a*d mod m, if any."""
    bound = math.isqrt(m // 2)
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 > bound:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        s0, s1 = s1, s0 - qt * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    return Fraction(r1, s1)


def _crt(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    t = ((r2 - r1) * pow(m1, -1, m2)) % m2
    return r1 + m1 * t, m1 * m2


def _as_point(x, nvars_in: int) -> tuple:
    if isinstance(x, (list, tuple, np.ndarray)):
        pt = tuple(_frac(v) for v in x)
    else:
        pt = (_frac(x),)
    if len(pt) != nvars_in:
        raise DomainError(f"sample input must have {nvars_in} coordinates")
    return pt


class _Samples:
    def __init__(self, samples, nvars_in):
        self.points = [_as_point(x, nvars_in) + (_frac(y),) for x, y in samples]
        self.nv = nvars_in + 1

    def matrix_mod(self, monos, p) -> Optional[np.ndarray]:
        out = np.empty((len(self.points), len(monos)), dtype=np.int64)
        maxdeg = max(sum(e) for e in monos)
        for r, pt in enumerate(self.points):
            vals = []
            for v in pt:
                if v.denominator % p == 0:
                    return None
                vals.append(v.numerator * pow(v.denominator, -1, p) % p)
            pw = [[pow(v, k, p) for k in range(maxdeg + 1)] for v in vals]
            for c, e in enumerate(monos):
                acc = 1
                for i, k in enumerate(e):
                    if k:
                        acc = acc * pw[i][k] % p
                out[r, c] = acc
        return out

    def vanishes(self, poly: MultiPoly) -> bool:
        return all(poly.eval(pt) == 0 for pt in self.points)


def _nullvector_mod(M: np.ndarray, p: int) -> Optional[tuple[list[int], int]]:
    R, pivots = _rref_mod(M, p)
    cols = M.shape[1]
    if len(pivots) == cols:
        return None
    free = next(c for c in range(cols) if c not in set(pivots))
    v = [0] * cols
    v[free] = 1
    for r, c in enumerate(pivots):
        v[c] = int(-R[r, free]) % p
    return v, free


def _exact_nullvector(S: _Samples, monos) -> Optional[list[Fraction]]:
    rows = [[_frac(1) if not any(e) else math.prod(v**k for v, k in zip(pt, e)) for e in monos]
            for pt in S.points]
    cols = len(monos)
    pivots = []
    r = 0
    for c in range(cols):
        k = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    if len(pivots) == cols:
        return None
    free = next(c for c in range(cols) if c not in set(pivots))
    v = [Fraction(0)] * cols
    v[free] = Fraction(1)
    for i, c in enumerate(pivots):
        v[c] = -rows[i][free]
    return v


class VanishingFit(NamedTuple):
    degree: int
    poly: MultiPoly


def fit_vanishing_poly(samples, nvars_in: int, max_deg: int) -> Optional[VanishingFit]:
    """Lowest-degree nonzero polynomial in (inputs, output) vanishing on all
    samples, searched up to total degree ``max_deg``."""
    if max_deg < 1:
        raise DomainError("max_deg must be at least 1")
    need = math.comb(nvars_in + 1 + max_deg, max_deg)
    if len(samples) < need:
        raise InsufficientDataError(
            f"need at least {need} samples for degree {max_deg}, got {len(samples)}")
    S = _Samples(samples, nvars_in)
    for D in range(1, max_deg + 1):
        monos = monomials(S.nv, D)
        residues, modulus, free = None, 1, None
        candidate = None
        full_rank = False
        for p in _PRIMES:
            M = S.matrix_mod(monos, p)
            if M is None:
                continue
            got = _nullvector_mod(M, p)
            if got is None:
                # full rank modulo p forces full rank over the rationals
                full_rank = True
                break
            v, f = got
            if free is None or f > free:
                # a larger free column means earlier primes were unlucky
                residues, modulus, free = v, p, f
            elif f == free:
                residues = [_crt(a, modulus, b, p)[0] for a, b in zip(residues, v)]
                modulus *= p
            else:
                continue
            coeffs = [_rational_reconstruct(a, modulus) for a in residues]
            if all(c is not None for c in coeffs):
                poly = MultiPoly(S.nv, dict(zip(monos, coeffs)))
                if poly and S.vanishes(poly):
                    candidate = poly
                    break
        if full_rank:
            continue
        if candidate is None:
            exact = _exact_nullvector(S, monos)
            if exact is None:
                continue
            candidate = MultiPoly(S.nv, dict(zip(monos, exact)))
        return VanishingFit(D, candidate)
    return None


def minimal_vanishing_degree(samples, nvars_in: int, max_deg: int) -> Optional[int]:
    """Smallest total degree of a nonzero polynomial vanishing on the samples.

    ``samples`` are ``(input, output)`` pairs with exact rational values.
    Returns None when no degree up to ``max_deg`` works.
    """
    fit = fit_vanishing_poly(samples, nvars_in, max_deg)
    return None if fit is None else fit.degree


# -- sampling graphs of polynomial and rational maps ------------------------------------------


def output_linear_parts(poly: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    """Split ``c(X) * Y - phi(X)`` (Y = last variable) into (c, phi)."""
    y = poly.nvars - 1
    if poly.degree_in(y) != 1:
        raise DomainError("polynomial is not linear in its output variable")
    c0, c1 = poly.coeffs_in(y)
    return c1.drop_unused(list(range(y))), (-c0).drop_unused(list(range(y)))


def solve_output(poly: MultiPoly, inputs: Sequence) -> Optional[Fraction]:
    """The output y with poly(inputs, y) = 0 for an output-linear polynomial."""
    c, phi = output_linear_parts(poly)
    den = c.eval(inputs)
    if den == 0:
        return None
    return phi.eval(inputs) / den


def sample_composition(p0: MultiPoly, ps: Sequence[MultiPoly], count: int,
                       rng: np.random.Generator, height: int = 50) -> list:
    """Random rational points on the graph of an output-linear composition."""
    d = ps[0].nvars - 1
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 50 * count:
            raise InsufficientDataError("could not find enough regular sample points")
        x = tuple(Fraction(int(rng.integers(-height, height + 1)),
                           int(rng.integers(1, height + 1))) for _ in range(d))
        ys = [solve_output(p, x) for p in ps]
        if any(v is None for v in ys):
            continue
        y = solve_output(p0, ys)
        if y is None:
            continue
        out.append((x if d > 1 else x[0], y))
    return out
