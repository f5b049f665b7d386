"""``qregion`` command-line tool.

Usage::

    qregion validate    INPUT
    qregion region      INPUT [--r R] [--profile] [--coords I J]
    qregion member      INPUT --point P [--r R] [--k K]
    qregion reconstruct INPUT --point P [--k K]
    qregion simtest     REFERENCE CLOUD [--slack S] [--mode auto|facets|sampled]
    qregion verify      INPUT [--samples N] [--probes M] [--seed S]
    qregion make        NAME [-o FILE]

``INPUT`` is an ensemble file or ``builtin:NAME`` (e.g. ``builtin:tetrahedron``,
``builtin:sic-states(3)``).  Every command prints a JSON report; ``-o`` also
writes it to a file.  Tolerances come from ``--tol-*`` flags, then
``QREGION_TOL_*`` environment variables, then defaults; the seed from
``--seed``, then ``QREGION_SEED``, then 0.

Exit codes: 0 success; 1 invalid ensemble, off-range point, violated
containment or failed verification; 2 unreadable input or bad arguments;
3 simtest passed without a certificate (sampled directions only).
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

import numpy as np

from .config import Tolerances
from .ensembles import Ensemble, Kind, builtin, validate
from .harness import verify_inner_measurement, verify_outer_measurement, verify_states_cone
from .io import ParseError, dumps_report, make_report, read_cloud, read_ensemble, write_ensemble
from .linalg import NotHermitianError
from .regions import (
    OffRangeError,
    approx_measurement,
    approx_states,
    dcone_membership,
    membership,
    reconstruct_effect,
    reconstruct_state,
    slice_membership,
)
from .simulability import (
    Containment,
    FacetLimitError,
    ProbabilityCloud,
    dcone_in_hull,
    ellipsoid_in_hull,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INCONCLUSIVE = 0, 1, 2, 3

TOL_FIELDS = ("herm", "psd", "recon", "penrose", "range", "member", "rel")


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def parse_vector(text: str) -> np.ndarray:
    """Parse ``"1/3, 1/3, 1/3"`` or ``"0.5 0.5"`` into a float vector."""
    try:
        return np.array([float(Fraction(t)) for t in text.replace(",", " ").split()])
    except (ValueError, ZeroDivisionError) as exc:
        raise CommandError(f"cannot parse vector {text!r}: {exc}", EXIT_PARSE) from exc


def load_ensemble(source: str) -> Ensemble:
    if source.startswith("builtin:"):
        try:
            return builtin(source[len("builtin:"):])
        except (KeyError, ValueError) as exc:
            raise CommandError(str(exc), EXIT_PARSE) from exc
    try:
        return read_ensemble(source)
    except ParseError as exc:
        raise CommandError(f"{source}: {exc}", EXIT_PARSE) from exc
    except NotHermitianError as exc:
        raise CommandError(f"{source}: {exc}", EXIT_FAIL) from exc


def _tolerances(args) -> Tolerances:
    return Tolerances.from_env(**{f: getattr(args, f"tol_{f}", None) for f in TOL_FIELDS})


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    raw = os.environ.get("QREGION_SEED")
    return int(raw) if raw else 0


def _ensemble_info(e: Ensemble) -> dict:
    return {"label": e.label, "kind": e.kind.value, "dim": e.dim, "n": e.n}


def _gate(e: Ensemble, args, tol: Tolerances) -> dict:
    report = validate(e, tol)
    if not report.valid and not args.allow_invalid:
        raise CommandError("invalid ensemble: " + "; ".join(report.violations), EXIT_FAIL)
    return report.to_dict()


def cmd_validate(args, tol):
    e = load_ensemble(args.input)
    report = validate(e, tol)
    body = {"ensemble": _ensemble_info(e), "validation": report.to_dict()}
    return body, EXIT_OK if report.valid or args.allow_invalid else EXIT_FAIL


def _ellipse_profile(a, i: int, j: int, points: int) -> dict:
    sub = a.covariance[np.ix_([i, j], [i, j])] / a.scale ** 2
    w, v = np.linalg.eigh(sub)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    th = np.linspace(0, 2 * np.pi, points + 1)
    poly = np.array([a.center[i], a.center[j]]) + np.stack([np.cos(th), np.sin(th)], axis=1) @ root.T
    return {"type": "ellipse-projection", "coords": [i, j],
            "center": [a.center[i], a.center[j]], "shape": sub, "polyline": poly}


def cmd_region(args, tol):
    e = load_ensemble(args.input)
    val = _gate(e, args, tol)
    body = {"ensemble": _ensemble_info(e), "validation": val, "r": args.r}
    if e.kind is Kind.MEASUREMENT:
        a = approx_measurement(e, args.r, tol, check=False)
        body["region"] = {
            "type": "ellipsoid",
            "center": a.center,
            "covariance": a.covariance,
            "pinv": a.pinv.pinv,
            "rank": a.rank,
            "informationally_complete": a.informationally_complete,
            "extremal": a.extremal,
        }
        if args.profile:
            i, j = args.coords
            if not (0 <= i < e.n and 0 <= j < e.n and i != j):
                raise CommandError("--coords must name two distinct outcomes", EXIT_PARSE)
            body["profile"] = _ellipse_profile(a, i, j, args.points)
    else:
        c = approx_states(e, args.r, tol, check=False)
        body["region"] = {
            "type": "d-cone",
            "shape": c.shape,
            "pinv": c.pinv.pinv,
            "coefficients": c.coefficients,
            "slice_centers": [c.slice_center(k) for k in range(c.dim + 1)],
            "rank": c.rank,
            "informationally_complete": c.informationally_complete,
            "extremal": c.extremal,
        }
        if args.profile:
            ks = np.arange(c.dim + 1)
            body["profile"] = {"type": "d-cone-axial", "axis": "kappa",
                               "polyline": np.stack([ks, c.envelope(ks)], axis=1)}
    if not body["region"]["informationally_complete"]:
        body["region"]["note"] = "not informationally complete: approximation not necessarily extremal"
    return body, EXIT_OK


def _point(args, n: int) -> np.ndarray:
    p = parse_vector(args.point)
    if p.shape != (n,):
        raise CommandError(f"point has {p.size} components, ensemble has {n}", EXIT_PARSE)
    return p


def cmd_member(args, tol):
    e = load_ensemble(args.input)
    _gate(e, args, tol)
    p = _point(args, e.n)
    body = {"ensemble": _ensemble_info(e), "r": args.r, "point": p}
    if e.kind is Kind.MEASUREMENT:
        rep = membership(approx_measurement(e, args.r, tol, check=False), p, tol)
        body["test"] = "ellipsoid"
    else:
        c = approx_states(e, args.r, tol, check=False)
        if args.k is not None:
            if not 0 <= args.k <= e.dim:
                raise CommandError(f"--k must lie in [0, {e.dim}]", EXIT_PARSE)
            rep = slice_membership(c, p, args.k, tol)
            body["test"] = f"slice-{args.k}"
        else:
            rep = dcone_membership(c, p, tol)
            body["test"] = "d-cone"
    body["membership"] = rep.to_dict()
    return body, EXIT_OK


def cmd_reconstruct(args, tol):
    e = load_ensemble(args.input)
    _gate(e, args, tol)
    p = _point(args, e.n)
    try:
        if e.kind is Kind.MEASUREMENT:
            op = reconstruct_state(approx_measurement(e, 1.0, tol, check=False), p, tol)
            k = None
        else:
            c = approx_states(e, 1.0, tol, check=False)
            k = args.k
            if k is None:
                kappa = dcone_membership(c, p, tol).kappa
                k = int(round(kappa))
                if abs(kappa - k) > 1e-9:
                    raise CommandError("trace is not pinned by the point; pass --k", EXIT_PARSE)
            op = reconstruct_effect(c, p, k, tol)
    except OffRangeError as exc:
        raise CommandError(str(exc), EXIT_FAIL) from exc
    body = {
        "ensemble": _ensemble_info(e),
        "point": p,
        "operator": np.stack([op.real, op.imag], axis=-1),
        "eigenvalues": np.linalg.eigvalsh(op)[::-1],
        "trace": float(np.real(np.trace(op))),
        "forward_residual": float(np.linalg.norm(e.image(op) - p)),
    }
    if k is not None:
        body["k"] = k
    return body, EXIT_OK


def cmd_simtest(args, tol):
    e = load_ensemble(args.reference)
    _gate(e, args, tol)
    try:
        pts, header = read_cloud(args.cloud)
    except ParseError as exc:
        raise CommandError(f"{args.cloud}: {exc}", EXIT_PARSE) from exc
    if pts.shape[1] != e.n:
        raise CommandError(f"cloud has {pts.shape[1]} components, reference has {e.n}", EXIT_PARSE)
    try:
        cloud = ProbabilityCloud(pts, normalized=e.kind is Kind.MEASUREMENT)
    except ValueError as exc:
        raise CommandError(f"{args.cloud}: {exc}", EXIT_PARSE) from exc
    seed = _seed(args)
    kw = dict(mode=args.mode, n_directions=args.directions, seed=seed)
    try:
        if e.kind is Kind.MEASUREMENT:
            cert = ellipsoid_in_hull(approx_measurement(e, 1.0, tol, check=False), cloud, args.slack, **kw)
        else:
            cert = dcone_in_hull(approx_states(e, 1.0, tol, check=False), cloud, args.slack, **kw)
    except FacetLimitError as exc:
        raise CommandError(str(exc), EXIT_PARSE) from exc
    body = {"ensemble": _ensemble_info(e), "cloud": {"points": len(cloud), "header": header},
            "certificate": cert.to_dict()}
    code = {Containment.CONTAINED: EXIT_OK, Containment.VIOLATED: EXIT_FAIL,
            Containment.INCONCLUSIVE_PASS: EXIT_INCONCLUSIVE}[cert.verdict]
    return body, code


def cmd_verify(args, tol):
    e = load_ensemble(args.input)
    _gate(e, args, tol)
    seed = _seed(args)
    if e.kind is Kind.MEASUREMENT:
        probes = args.probes if args.probes is not None else min(args.samples, 1000)
        runs = [verify_outer_measurement(e, args.samples, seed, tol),
                verify_inner_measurement(e, probes, seed, tol=tol)]
    else:
        runs = [verify_states_cone(e, args.samples, seed, tol=tol)]
    body = {"ensemble": _ensemble_info(e), "stats": [s.to_dict() for s in runs]}
    return body, EXIT_OK if all(s.passed for s in runs) else EXIT_FAIL


def cmd_make(args, tol):
    e = load_ensemble("builtin:" + args.name)
    if args.out:
        write_ensemble(e, args.out)
    return {"ensemble": _ensemble_info(e), "written": args.out}, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for f in TOL_FIELDS:
        common.add_argument(f"--tol-{f}", type=float, default=None, metavar="X")
    common.add_argument("--allow-invalid", action="store_true",
                        help="continue even if the ensemble fails validation")
    common.add_argument("-o", "--output", help="also write the report to this file")

    parser = argparse.ArgumentParser(prog="qregion", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common])
    p.add_argument("input")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("region", parents=[common])
    p.add_argument("input")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--profile", action="store_true")
    p.add_argument("--coords", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    p.add_argument("--points", type=int, default=64, help="polyline resolution")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("member", parents=[common])
    p.add_argument("input")
    p.add_argument("--point", required=True)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_member)

    p = sub.add_parser("reconstruct", parents=[common])
    p.add_argument("input")
    p.add_argument("--point", required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("simtest", parents=[common])
    p.add_argument("reference")
    p.add_argument("cloud")
    p.add_argument("--slack", type=float, default=0.0)
    p.add_argument("--mode", choices=("auto", "facets", "sampled"), default="auto")
    p.add_argument("--directions", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simtest)

    p = sub.add_parser("verify", parents=[common])
    p.add_argument("input")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--probes", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("make", help="write a builtin ensemble to a file")
    p.add_argument("name")
    p.add_argument("-o", "--output", dest="out", help="ensemble file to write")
    p.set_defaults(func=cmd_make, output=None, allow_invalid=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = _tolerances(args)
    except ValueError as exc:
        print(f"qregion: bad tolerance: {exc}", file=sys.stderr)
        return EXIT_PARSE
    seed = _seed(args) if hasattr(args, "seed") else None
    try:
        body, code = args.func(args, tol)
    except CommandError as exc:
        body, code = {"error": str(exc)}, exc.code
        print(f"qregion: {exc}", file=sys.stderr)
    except ValueError as exc:
        body, code = {"error": str(exc)}, EXIT_FAIL
        print(f"qregion: {exc}", file=sys.stderr)
    body["exit_code"] = code
    text = dumps_report(make_report(args.command, body, tolerances=tol.to_dict(), seed=seed))
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
