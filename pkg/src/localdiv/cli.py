"""Command-line front end.

    localdiv analyze  --p 5 --n 2 --gens '[[[1,0],[5,1]]]'
    localdiv h1loc    --p 5 --n 3 --family n3-j-eq-m
    localdiv family   --p 7 --n 4 --family j-lt-m --output text
    localdiv grid     --p 5,7 --n 2,3 --budget 1000
    localdiv search   --p 5 --n 2 --shape lower --j 1 --m 1
    localdiv isogeny  --p 5 --n 5 --family j-ge-m-eq

Exit status: 0 on success, 1 on invalid input, 2 when a cap or budget is hit.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .cohomology import class_order, h1_loc
from .errors import BudgetExceeded, CapExceeded, LocalDivError
from .families import (
    CASES,
    FamilySpec,
    build_family,
    isogeny_report,
    search_counterexamples,
    theorem_grid,
    verify_counterexample,
)
from .matgroup import DEFAULT_CAP, Mat2, MatrixGroup, close_group, fixed_points, triangularity
from .modring import Modulus
from .structure import check_preconditions, extract_parameters, theorem3_predicate

SCHEMA = "localdiv.report/1"
COMMANDS = ("analyze", "h1loc", "family", "grid", "search", "isogeny")


class InputError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localdiv", description="Local-global divisibility via H^1_loc of matrix groups mod p^n.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, group_input=True):
        sp.add_argument("--p", type=_int_list, help="prime (comma list for grid)")
        sp.add_argument("--n", type=_int_list, help="exponent (comma list for grid)")
        sp.add_argument("--output", choices=("json", "text"), default="json")
        sp.add_argument("--cap", type=int, default=None, help="bound on group orders")
        sp.add_argument("--seed", type=int, default=0)
        if group_input:
            sp.add_argument("--gens", help='JSON list of 2x2 matrices, or {"p":..,"n":..,"generators":[..]}')
            sp.add_argument("--file", help="path to a JSON file with p, n and generators")
            sp.add_argument("--family", help=f"one of {', '.join(c.replace('_', '-') for c in CASES)}")
            sp.add_argument("--i", type=int, default=None)
            sp.add_argument("--alpha", type=int, default=None)
            sp.add_argument("--theta", type=int, default=0)
            sp.add_argument("--theta-shift", type=int, default=None)
            sp.add_argument("--oracle", action="store_true", help="use the brute-force cohomology backend")

    for name in ("analyze", "h1loc", "family", "isogeny"):
        common(sub.add_parser(name))
    grid = sub.add_parser("grid")
    common(grid, group_input=False)
    grid.add_argument("--budget", type=int, default=1000)
    grid.add_argument("--no-families", action="store_true")
    search = sub.add_parser("search")
    common(search, group_input=False)
    search.add_argument("--shape", choices=("lower", "upper", "diagonal"), default="lower")
    search.add_argument("--j", type=int, default=None)
    search.add_argument("--m", type=int, default=None)
    search.add_argument("--h", type=int, default=None)
    return parser


# ---------------------------------------------------------------------------
# input


def _single(values, name):
    if not values or len(values) != 1:
        raise InputError(f"--{name} takes exactly one integer here")
    return values[0]


def _parse_generators(obj, p, n):
    if isinstance(obj, dict):
        p = obj.get("p", p)
        n = obj.get("n", n)
        obj = obj.get("generators")
    if p is None or n is None:
        raise InputError("p and n are required (flags or JSON keys)")
    if not isinstance(obj, list):
        raise InputError("generators must be a JSON list of 2x2 matrices")
    if isinstance(p, bool) or not isinstance(p, int) or isinstance(n, bool) or not isinstance(n, int):
        raise InputError("p and n must be integers")
    mod = Modulus(p, n)
    gens = []
    for k, M in enumerate(obj):
        ok = (
            isinstance(M, list)
            and len(M) == 2
            and all(isinstance(r, list) and len(r) == 2 for r in M)
            and all(isinstance(x, int) and not isinstance(x, bool) and 0 <= x < mod.value for r in M for x in r)
        )
        if not ok:
            raise InputError(f"generator {k} must be [[a,b],[c,d]] with integer entries in [0, {mod.value})")
        gens.append(Mat2.from_rows(M, mod))
    return mod, gens


def load_group(args) -> tuple[MatrixGroup, dict | None, FamilySpec | None]:
    sources = [s for s in ("gens", "file", "family") if getattr(args, s) is not None]
    if len(sources) != 1:
        raise InputError("give exactly one of --gens, --file, --family")
    cap = args.cap or DEFAULT_CAP
    p = _single(args.p, "p") if args.p else None
    n = _single(args.n, "n") if args.n else None
    if args.family is not None:
        if p is None or n is None:
            raise InputError("--family needs --p and --n")
        spec = FamilySpec(p, n, args.family, i=args.i, alpha=args.alpha, theta=args.theta, theta_shift=args.theta_shift)
        G, Z = build_family(spec, cap)
        return G, {"spec": spec, "witness": Z}, spec
    if args.file is not None:
        try:
            with open(args.file) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read {args.file}: {exc}")
    else:
        obj = json.loads(args.gens)
    mod, gens = _parse_generators(obj, p, n)
    return close_group(gens, cap, modulus=mod), None, None


# ---------------------------------------------------------------------------
# reports


def cohomology_section(G: MatrixGroup, oracle: bool = False) -> dict:
    if oracle:
        from .oracle import oracle_h1

        o = oracle_h1(G)
        return {
            "backend": "oracle",
            "z1": o.z1_structure,
            "b1": o.b1_structure,
            "h1": o.h1_structure,
            "z1loc": o.z1loc_structure,
            "h1loc": o.h1loc_structure,
            "representatives": [],
        }
    rep = h1_loc(G)
    return {
        "backend": "generator-values",
        "z1": rep.z1_structure,
        "b1": rep.b1_structure,
        "h1": rep.h1_structure,
        "z1loc": rep.z1loc_structure,
        "h1loc": rep.h1loc_structure,
        "representatives": [
            {"order": o, "generator_values": [int(v) for v in Z.generator_values()]}
            for o, Z in zip(rep.representative_orders, rep.representatives)
        ],
    }


def group_report(G: MatrixGroup, oracle: bool = False) -> dict:
    mod = G.modulus
    pre = check_preconditions(G)
    profile, err, pred = None, None, None
    try:
        prof = extract_parameters(G, report=pre)
        profile = prof.as_dict()
        pred = theorem3_predicate(prof)
    except LocalDivError as exc:
        err = f"{type(exc).__name__}: {exc}"
    _, fp = fixed_points(G)
    return {
        "schema": SCHEMA,
        "p": mod.p,
        "n": mod.n,
        "modulus": mod.value,
        "generators": [g.rows() for g in G.generators],
        "order": G.order,
        "triangularity": triangularity(G),
        "fixed_point_max_order": fp,
        "preconditions": pre.as_dict(),
        "profile": profile,
        "profile_error": err,
        "theorem3_predicate": pred,
        "cohomology": cohomology_section(G, oracle),
    }


def run(args) -> dict:
    cmd = args.command
    if cmd == "grid":
        if not args.p or not args.n:
            raise InputError("grid needs --p and --n")
        try:
            rep = theorem_grid(args.p, args.n, budget=args.budget, cap=args.cap or 20000, seed=args.seed, families=not args.no_families)
        except BudgetExceeded as exc:
            exc.partial = {"schema": SCHEMA, "command": cmd, **exc.partial.as_dict()}
            raise
        return {"schema": SCHEMA, "command": cmd, **rep.as_dict()}
    if cmd == "search":
        p, n = _single(args.p, "p"), _single(args.n, "n")
        sc = {"shape": args.shape}
        for key in ("j", "m", "h"):
            if getattr(args, key) is not None:
                sc[key] = getattr(args, key)
        certs = search_counterexamples(p, n, sc, cap=args.cap or 5000)
        return {"schema": SCHEMA, "command": cmd, "p": p, "n": n, "constraints": sc, "found": len(certs), "certificates": [c.as_dict() for c in certs]}

    G, fam, spec = load_group(args)
    if cmd == "isogeny":
        return {
            "schema": SCHEMA,
            "command": cmd,
            "p": G.modulus.p,
            "n": G.modulus.n,
            "generators": [g.rows() for g in G.generators],
            "order": G.order,
            "levels": isogeny_report(G, args.cap or DEFAULT_CAP),
        }
    out = {"command": cmd, **group_report(G, oracle=args.oracle)}
    if fam is not None:
        out["family"] = spec.as_dict()
        cert = verify_counterexample(G, fam["witness"])
        out["certificate"] = {"valid": cert.valid, **cert.checks, "notes": cert.notes}
    elif cmd == "h1loc" and not args.oracle:
        out["class_orders"] = [class_order(Z) for Z in h1_loc(G).representatives]
    if cmd == "family":
        out["isogeny"] = isogeny_report(G, args.cap or DEFAULT_CAP)
    return out


# ---------------------------------------------------------------------------
# output


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list) and obj and all(isinstance(x, dict) for x in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def render_text(report: dict) -> str:
    return "\n".join(f"{k}: {json.dumps(v)}" for k, v in _flatten(report)) + "\n"


def emit(report: dict, fmt: str, stream=None):
    stream = stream or sys.stdout
    if fmt == "json":
        stream.write(json.dumps(report, indent=2) + "\n")
    else:
        stream.write(render_text(report))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        report = run(args)
    except BudgetExceeded as exc:
        partial = exc.partial if isinstance(exc.partial, dict) else {}
        emit({**partial, "error": str(exc), "exit": 2}, args.output)
        return 2
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, LocalDivError, json.JSONDecodeError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit(report, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
