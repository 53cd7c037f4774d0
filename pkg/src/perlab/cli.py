"""Command-line front end: ``perlab <command> [flags]``.

Every command writes its files plus ``manifest.json`` into ``--out`` and
prints a one-line summary.  Exit codes: 0 success, 2 usage error or unknown
system, 3 malformed input file, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import coneshex as CH
from . import growth as G
from . import measures as M
from . import periodic as P
from . import semialg as SA
from . import systems as S
from .errors import (CapabilityError, DomainError, EliminationDegeneracyError, EscapeError,
                     InsufficientDataError, NumericError, PreconditionError, SchemaError)
from .serialize import csv_text, dumps, fmt_float

N_CAP = {1: 20, 2: 16}

EXIT_OK, EXIT_USAGE, EXIT_SCHEMA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# -- helpers ----------------------------------------------------------------------


def _system(args) -> S.SystemSpec:
    try:
        return S.get_system(args.system, args.param)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except TypeError:
        raise UsageError(f"wrong number of --param values for {args.system}") from None


def _check_n(sys_: S.SystemSpec, n: int, args, flag: str):
    if n < 1:
        raise UsageError(f"{flag} must be at least 1")
    cap = N_CAP[sys_.dimension]
    if n > cap and not args.unsafe_large_n:
        raise UsageError(f"{flag}={n} exceeds the cap {cap} for dimension {sys_.dimension}; "
                         "pass --unsafe-large-n to override")


def _newton_cfg(args) -> P.NewtonConfig:
    return P.NewtonConfig(grid_per_axis=args.grid_seeds)


class _Writer:
    def __init__(self, out: str):
        self.root = Path(out)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def write(self, name: str, text: str):
        # newline="" keeps '\n' line endings on every platform
        with open(self.root / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.files.append(name)

    def manifest(self, command: str, system, params: dict):
        doc = {
            "command": command,
            "system": system,
            "params": params,
            "seed_independent": True,
            "tool_version": __version__,
            "outputs": sorted(self.files),
        }
        with open(self.root / "manifest.json", "w", encoding="utf-8", newline="") as fh:
            fh.write(dumps(doc))


def _params(args, *names) -> dict:
    out = {}
    for name in names:
        v = getattr(args, name)
        out[name] = list(v) if isinstance(v, tuple) else v
    return out


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _read_poly(path: str) -> SA.MultiPoly:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg})", f"line {exc.lineno}") from None
    try:
        return SA.MultiPoly.from_dict(doc)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc.message}", exc.where) from None


# -- commands -----------------------------------------------------------------------


def cmd_periodic(args) -> int:
    sys_ = _system(args)
    _check_n(sys_, args.n, args, "--n")
    ps = P.per_set(sys_, args.n, args.method, _newton_cfg(args))
    kept = P.filter_delta(ps.orbits, args.delta)
    count_delta = sum(o.minimal_period for o in kept)
    w = _Writer(args.out)
    w.write("orbits.json", P.orbits_to_json(sys_.id, args.n, ps.orbits))
    w.manifest("periodic", sys_.id, _params(args, "param", "n", "method", "delta", "grid_seeds"))
    print(f"n={args.n} count_all={ps.count()} count_delta={count_delta}")
    return EXIT_OK


def _range(args, sys_):
    if args.nmin > args.nmax:
        raise UsageError("--nmin must not exceed --nmax")
    _check_n(sys_, args.nmin, args, "--nmin")
    _check_n(sys_, args.nmax, args, "--nmax")
    return list(range(args.nmin, args.nmax + 1))


def cmd_growth(args) -> int:
    sys_ = _system(args)
    ns = _range(args, sys_)
    table = G.growth_table(sys_, ns, args.delta, args.method, _newton_cfg(args))
    w = _Writer(args.out)
    w.write("growth.csv", table.to_csv())
    w.write("growth.json", table.to_json())
    w.manifest("growth", sys_.id,
               _params(args, "param", "nmin", "nmax", "method", "delta", "grid_seeds"))
    last = table.rows[-1]
    line = (f"n={last.n} rate_all={_fmt(last.rate_all)} rate_delta={_fmt(last.rate_delta)}")
    if len(table.rows) >= 3:
        try:
            line += f" slope_all={fmt_float(G.estimate_growth_rate(table, 'all')[0])}"
        except InsufficientDataError:
            pass
    print(line)
    return EXIT_OK


def _fmt(v) -> str:
    return "none" if v is None else fmt_float(v)


def cmd_localgrowth(args) -> int:
    sys_ = _system(args)
    ns = _range(args, sys_)
    eps = tuple(args.eps) if args.eps else G.DEFAULT_EPSILONS
    if min(eps) <= 0:
        raise UsageError("--eps values must be positive")
    curve = G.local_growth_curve(sys_, ns, eps, args.delta, args.method, _newton_cfg(args))
    w = _Writer(args.out)
    w.write("localgrowth.csv", curve.to_csv())
    w.write("localgrowth.json", curve.to_json())
    w.manifest("localgrowth", sys_.id,
               _params(args, "param", "nmin", "nmax", "eps", "delta", "method", "grid_seeds"))
    worst = max(curve.rows, key=lambda r: (r.max_cluster, r.n))
    print(f"max_cluster={worst.max_cluster} at n={worst.n} eps={fmt_float(worst.eps)}")
    return EXIT_OK


def cmd_equidist(args) -> int:
    sys_ = _system(args)
    _check_n(sys_, args.n, args, "--n")
    ref_id = args.reference
    if ref_id is None:
        if sys_.exact is None or sys_.exact.mme is None:
            raise UsageError(f"{sys_.id} has no known reference measure; pass --reference")
        ref_id = sys_.exact.mme
    ref = M.ReferenceMeasure(ref_id)
    ps = P.per_set(sys_, args.n, args.method, _newton_cfg(args))
    if ps.count() == 0:
        raise NumericError("no periodic points found")
    m = M.empirical_measure(ps)
    d = M.discrepancy(m, ref, args.grid)
    w = _Writer(args.out)
    w.write("discrepancy.csv", M.discrepancy_csv([(args.n, args.grid, d)]))
    w.write("measure.json", m.to_json())
    w.manifest("equidist", sys_.id,
               _params(args, "param", "n", "reference", "grid", "method", "grid_seeds"))
    print(f"reference={ref_id} sup_cell={fmt_float(d.sup_cell)} ks={_fmt(d.ks)}")
    return EXIT_OK


def cmd_crubound(args) -> int:
    sys_ = _system(args)
    _check_n(sys_, args.n, args, "--n")
    l = args.l if args.l is not None else args.n
    ps = P.per_set(sys_, args.n, args.method, _newton_cfg(args))
    if ps.count() == 0:
        raise NumericError("no periodic points found")
    part = M.GridPartition.for_system(sys_, args.cells)
    try:
        gap = M.lemma_cru_gap(sys_, ps, args.n, part, args.eps, l)
    except PreconditionError as exc:
        raise UsageError(str(exc)) from None
    w = _Writer(args.out)
    w.write("crubound.json", dumps({"n": args.n, "eps": args.eps, "cells": args.cells, "l": l,
                                    "lhs": gap.lhs, "rhs": gap.rhs, "holds": gap.holds}))
    w.manifest("crubound", sys_.id,
               _params(args, "param", "n", "eps", "cells", "l", "method", "grid_seeds"))
    print(f"lhs={fmt_float(gap.lhs)} rhs={fmt_float(gap.rhs)} holds={str(gap.holds).lower()}")
    return EXIT_OK if gap.holds else EXIT_NUMERIC


def cmd_degree(args) -> int:
    outer = _read_poly(args.outer)
    inner = [_read_poly(p) for p in args.inner]
    composed = SA.composition_vanishing_poly(outer, inner)
    degs = [p.total_degree() for p in inner] + [outer.total_degree()]
    bound = math.prod(degs)
    oracle = None
    try:
        for p in inner + [outer]:
            SA.output_linear_parts(p)
    except DomainError:
        # outputs are not rational functions of inputs; no exact samples
        oracle_note = "outputs not linear in the output variable"
    else:
        d_in = inner[0].nvars - 1
        need = math.comb(d_in + 1 + bound, bound) + 20
        rng = np.random.default_rng(0)
        samples = SA.sample_composition(outer, inner, need, rng)
        oracle = SA.minimal_vanishing_degree(samples, d_in, bound)
        oracle_note = "minimal degree over exact rational samples"
    w = _Writer(args.out)
    w.write("composition.json", composed.to_json())
    w.write("degree.json", dumps({
        "factors": degs, "bound": bound, "eliminated_degree": composed.total_degree(),
        "oracle": oracle, "oracle_method": oracle_note}))
    w.manifest("degree", None, {"outer": Path(args.outer).name,
                                "inner": [Path(p).name for p in args.inner]})
    print(f"bound={bound} oracle={'none' if oracle is None else oracle}")
    return EXIT_OK


def cmd_hexcheck(args) -> int:
    mask = CH.HexMask.from_pbm(_read_text(args.mask))
    orient = CH.is_hexagon(mask)
    prof = CH.profile_decomposition(mask) if orient is not None else None
    if (orient is None) != (prof is None):
        raise NumericError("staircase test and profile test disagree")
    w = _Writer(args.out)
    w.write("hexcheck.json", dumps({
        "resolution": mask.resolution,
        "hexagon": orient is not None,
        "orientation": None if orient is None else list(orient),
        "profile": None if prof is None else prof.to_dict(),
    }))
    w.manifest("hexcheck", None, {"mask": Path(args.mask).name})
    orient_txt = "none" if orient is None else f"{orient[0]},{orient[1]}"
    print(f"hexagon={str(orient is not None).lower()} orientation={orient_txt}")
    return EXIT_OK


def cmd_certify(args) -> int:
    sys_ = _system(args)
    if sys_.dimension != 2:
        raise UsageError("certify needs a planar system")
    _check_n(sys_, args.n, args, "--n")
    if args.C <= 0 or args.delta <= 0:
        raise UsageError("--C and --delta must be positive")
    pts = P.per_set(sys_, args.n, args.method, _newton_cfg(args)).points()
    if args.box is not None:
        x0, y0, side = args.box
        if side <= 0:
            raise UsageError("box side must be positive")
        certs = [CH.certify_box(sys_, (x0, y0), side, args.n, args.C, args.delta, pts,
                                args.aperture, args.samples, args.alpha)]
    else:
        if not sys_.periodic_metric:
            raise UsageError("box sweeps cover the unit torus; pass --box for this system")
        certs = CH.box_sweep(sys_, args.n, pts, args.boxes, C=args.C, delta=args.delta,
                             aperture=args.aperture, samples=args.samples, alpha=args.alpha)
    passed = all(c.passed for c in certs)
    w = _Writer(args.out)
    w.write("certificate.json", CH.certificate_json(
        args.n, args.C, args.delta, args.alpha, sum(c.samples_checked for c in certs), passed))
    w.write("boxes.csv", _boxes_csv(certs))
    w.manifest("certify", sys_.id, _params(args, "param", "n", "C", "delta", "alpha", "aperture",
                                           "box", "boxes", "samples", "method", "grid_seeds"))
    n_cert = sum(c.certified for c in certs)
    worst = max(c.count for c in certs)
    violations = sum(not c.passed for c in certs)
    print(f"boxes={len(certs)} certified={n_cert} max_count={worst} violations={violations} "
          f"pass={str(passed).lower()}")
    return EXIT_OK


def _boxes_csv(certs) -> str:
    return csv_text(("x0", "y0", "certified", "count", "pass"),
                    [(c.corner[0], c.corner[1], int(c.certified), c.count, int(c.passed))
                     for c in certs])


# -- parser -------------------------------------------------------------------------


def _add_system(p, required=True):
    p.add_argument("--system", required=required, help="system id: " + ", ".join(S.CATALOG))
    p.add_argument("--param", type=float, action="append",
                   help="system parameter, repeat for several (e.g. logistic lambda)")
    p.add_argument("--method", choices=("auto", "exact", "newton"), default="auto",
                   help="how to compute Per_n (auto: exact when available)")
    p.add_argument("--grid-seeds", type=int, default=P.NewtonConfig.grid_per_axis,
                   help="Newton seed grid per axis")
    p.add_argument("--unsafe-large-n", action="store_true",
                   help="allow n above 16 (planar) or 20 (interval)")


def _add_out(p):
    p.add_argument("--out", default="out", help="output directory (default: out)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="perlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"perlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("periodic", help="find and classify Per_n")
    _add_system(p)
    p.add_argument("--n", type=int, required=True, help="period n")
    p.add_argument("--delta", type=float, default=0.5, help="exponent threshold for Per_n^delta")
    _add_out(p)
    p.set_defaults(func=cmd_periodic)

    for name, helptext, func in (("growth", "counts and rates of Per_n, Per_n^delta", cmd_growth),
                                 ("localgrowth", "largest Per_n cluster in Bowen balls",
                                  cmd_localgrowth)):
        p = sub.add_parser(name, help=helptext)
        _add_system(p)
        p.add_argument("--nmin", type=int, default=1, help="first n")
        p.add_argument("--nmax", type=int, required=True, help="last n")
        if name == "growth":
            p.add_argument("--delta", type=float, default=0.5, help="exponent threshold")
        else:
            p.add_argument("--eps", type=float, action="append",
                           help="ball radius, repeat for several (default 0.2/2^k, k<6)")
            p.add_argument("--delta", type=float, default=None,
                           help="restrict to Per_n^delta")
        _add_out(p)
        p.set_defaults(func=func)

    p = sub.add_parser("equidist", help="discrepancy of the periodic measure")
    _add_system(p)
    p.add_argument("--n", type=int, required=True, help="period n")
    p.add_argument("--reference", choices=S.REFERENCE_IDS, default=None,
                   help="reference measure (default: the system's known one)")
    p.add_argument("--grid", type=int, default=8, help="cells per axis")
    _add_out(p)
    p.set_defaults(func=cmd_equidist)

    p = sub.add_parser("crubound", help="partition entropy against the periodic growth bound")
    _add_system(p)
    p.add_argument("--n", type=int, required=True, help="period n")
    p.add_argument("--eps", type=float, required=True, help="Bowen ball radius")
    p.add_argument("--cells", type=int, required=True, help="partition cells per axis")
    p.add_argument("--l", type=int, default=None, help="itinerary length (default n)")
    _add_out(p)
    p.set_defaults(func=cmd_crubound)

    p = sub.add_parser("degree", help="degree bound of a composition by elimination")
    p.add_argument("--outer", required=True, help="outer vanishing polynomial (JSON)")
    p.add_argument("--inner", required=True, action="append",
                   help="inner vanishing polynomial (JSON), one per outer input")
    _add_out(p)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("hexcheck", help="staircase and profile test of a mask")
    p.add_argument("--mask", required=True, help="plain PBM (P1) file")
    _add_out(p)
    p.set_defaults(func=cmd_hexcheck)

    p = sub.add_parser("certify", help="cone certificates on dynamical boxes")
    _add_system(p)
    p.add_argument("--n", type=int, required=True, help="period n")
    p.add_argument("--C", type=float, default=1.0, help="growth constant")
    p.add_argument("--delta", type=float, default=0.9, help="growth exponent")
    p.add_argument("--alpha", type=float, default=math.pi / 6, help="cone family parameter")
    p.add_argument("--aperture", type=float, default=math.pi / 6, help="cone aperture")
    p.add_argument("--box", type=float, nargs=3, metavar=("X0", "Y0", "SIDE"), default=None,
                   help="certify a single box (default: sweep the torus)")
    p.add_argument("--boxes", type=int, default=20, help="boxes per axis in a sweep")
    p.add_argument("--samples", type=int, default=3, help="samples per box axis")
    _add_out(p)
    p.set_defaults(func=cmd_certify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"perlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapabilityError, PreconditionError, DomainError) as exc:
        print(f"perlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, EliminationDegeneracyError) as exc:
        print(f"perlab: malformed input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (NumericError, EscapeError, InsufficientDataError, ArithmeticError) as exc:
        print(f"perlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
