"""Command-line surface.

One tree per line in the text format (leaf = "o", internal = "(LR)");
excursions and skeletons travel as JSON.  Every randomized command takes an
explicit --seed (no environment fallback) and is byte-reproducible.  Exit
codes: 0 success, 1 usage/input error, 2 = a statistical experiment ran
correctly but failed its declared tolerance.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .enumeration import (
    Family,
    WeightKind,
    catalan_count,
    default_constants,
    solve_rho,
    we_count,
    weight_table,
)
from .errors import TreelimError
from . import densities as dn
from . import excursions as ex
from . import experiments as xp
from . import plane as pl
from . import unordered as uo


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.Philox(key=(seed, stream)))


def _read_tree_lines(stdin) -> list[pl.PlaneTree]:
    return [pl.parse_tree(line) for line in stdin.read().splitlines() if line.strip()]


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def build_parser() -> _Parser:
    p = _Parser(prog="treelim", description=__doc__)
    p.add_argument("--format", choices=["json", "csv", "text"], default="text")
    sub = p.add_subparsers(dest="cmd", required=True)

    q = sub.add_parser("count", help="exact tree counts")
    q.add_argument("--family", choices=["plane", "unordered"], required=True)
    q.add_argument("--n", type=int, required=True)

    q = sub.add_parser("constants", help="rho and c with certified precision")
    q.add_argument("--precision", type=float, default=1e-10)

    q = sub.add_parser("sample", help="uniform trees, one per line")
    q.add_argument("--family", choices=["plane", "unordered"], required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--count", type=int, default=1)
    q.add_argument("--seed", type=int, default=0)

    q = sub.add_parser("trim", help="mass-trim trees from stdin")
    q.add_argument("--a", type=int, required=True)

    q = sub.add_parser("skeleton", help="a-skeletons of trees from stdin (JSON out)")
    q.add_argument("--a", type=int, required=True)
    q.add_argument("--family", choices=["plane", "unordered"], default="plane")

    sub.add_parser("contour", help="contour steps of trees from stdin")
    sub.add_parser("decode", help="rebuild trees from contour step lines")

    q = sub.add_parser("zeta", help="real skeleton of an excursion (JSON on stdin)")
    q.add_argument("--a", type=float, required=True)

    q = sub.add_parser("density", help="evaluate a limit density")
    q.add_argument("which", choices=["g", "a", "b", "psi", "psicirc"])
    q.add_argument("--epsilon", type=float, default=0.3)
    q.add_argument("--k", type=int, default=2)
    q.add_argument("--x", type=float, nargs="*", default=None)
    q.add_argument("--skeleton-json", type=str, default=None,
                   help='{"shape": code, "x": [...], "y": [...]} for psi/psicirc')

    q = sub.add_parser("oracle", help="exact finite-n quantities")
    qq = q.add_subparsers(dest="oracle_cmd", required=True)
    s1 = qq.add_parser("sum", help="P(sum_{i<=l} X_i = m, max <= a)")
    s1.add_argument("--family", choices=["plane", "unordered"], required=True)
    s1.add_argument("--l", type=int, required=True)
    s1.add_argument("--m", type=int, required=True)
    s1.add_argument("--a", type=int, required=True)
    s2 = qq.add_parser("skeleton-law", help="exact law of a skeleton (JSON on stdin)")
    s2.add_argument("--family", choices=["plane", "unordered"], required=True)
    s2.add_argument("--n", type=int, required=True)

    q = sub.add_parser("experiment", help="statistical acceptance experiments")
    qq = q.add_subparsers(dest="exp_cmd", required=True)
    for name in ("local-limit", "height", "mean-height", "tightness", "skeleton-convergence"):
        s = qq.add_parser(name)
        s.add_argument("--family", choices=["plane", "unordered"], default="plane")
        s.add_argument("--n", type=int, default=2000)
        s.add_argument("--epsilon", type=float, default=0.3)
        s.add_argument("--samples", type=int, default=100000)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--out", type=str, default=None)
    return p


def _family(name: str) -> Family:
    return Family.PLANE if name == "plane" else Family.UNORDERED


def _cmd_density(args) -> int:
    cst = default_constants()
    ctx = dn.a_k_build(args.epsilon, c=cst.c)
    if args.which == "g":
        xs = args.x or [1.0]
        for x in xs:
            print(dn.g_density(x))
        return 0
    if args.which == "b":
        for x in args.x or [1.5 * args.epsilon]:
            print(dn.b_density(x, args.epsilon))
        return 0
    if args.which == "a":
        xs = np.asarray(args.x or [2.5 * args.epsilon])
        for v in ctx.a_k(args.k, xs):
            print(float(v))
        return 0
    data = json.loads(args.skeleton_json or sys.stdin.read())
    inp = dn.PsiInput(pl.parse_tree(data["shape"]), tuple(data["x"]), tuple(data["y"]))
    fn = dn.psi if args.which == "psi" else dn.psi_circ
    print(fn(inp, ctx))
    return 0


def _cmd_experiment(args) -> int:
    fam = _family(args.family)
    if args.exp_cmd == "local-limit":
        rep = xp.exp_local_limit(fam, args.n, args.epsilon, args.samples,
                                 seed=args.seed, threads=args.threads)
    elif args.exp_cmd == "height":
        rep = xp.exp_height_law(fam, args.n, args.samples, seed=args.seed,
                                threads=args.threads)
    elif args.exp_cmd == "mean-height":
        rep = xp.exp_mean_height_exact()
    elif args.exp_cmd == "tightness":
        rep = xp.exp_trim_tightness(args.n, samples=args.samples, seed=args.seed,
                                    threads=args.threads)
    else:
        rep = xp.exp_skeleton_convergence(args.n, args.epsilon, args.samples,
                                          seed=args.seed, threads=args.threads)
    if args.format == "json":
        out = rep.to_json()
    elif args.format == "csv":
        out = rep.cells_csv() or rep.to_json()
    else:
        out = rep.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0 if rep.passed else 2


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "count":
            n = args.n
            val = catalan_count(n) if args.family == "plane" else we_count(n)
            _emit(args, {"family": args.family, "n": n, "count": str(val)}, str(val))
        elif args.cmd == "constants":
            cst = solve_rho(args.precision)
            _emit(
                args,
                {"rho": cst.rho, "c": cst.c, "precision": cst.precision,
                 "truncation": cst.truncation},
                f"rho={cst.rho:.15f} c={cst.c:.7f} precision={cst.precision:.3e} "
                f"terms={cst.truncation}",
            )
        elif args.cmd == "sample":
            rng = _rng(args.seed)
            for _ in range(args.count):
                if args.family == "plane":
                    print(pl.sample_plane_uniform(args.n, rng).code)
                else:
                    print(uo.sample_unordered_uniform(args.n, rng).code)
        elif args.cmd == "trim":
            for t in _read_tree_lines(sys.stdin):
                print(pl.trim(t, args.a).code)
        elif args.cmd == "skeleton":
            for t in _read_tree_lines(sys.stdin):
                if args.family == "plane":
                    print(pl.skeleton_plane(t, args.a).to_json())
                else:
                    gs = uo.skeleton_unordered(uo.canonicalize(t), args.a)
                    print(gs.as_plane_skeleton().to_json())
        elif args.cmd == "contour":
            for t in _read_tree_lines(sys.stdin):
                print("".join("+" if s == 1 else "-" for s in pl.contour(t).steps))
        elif args.cmd == "decode":
            for line in sys.stdin.read().splitlines():
                line = line.strip()
                if not line:
                    continue
                steps = tuple(1 if ch == "+" else -1 for ch in line)
                print(pl.decode_contour(pl.ContourPath(steps)).code)
        elif args.cmd == "zeta":
            f = ex.Excursion.from_json(sys.stdin.read())
            rs = ex.zeta(f, args.a)
            print(json.dumps({"shape": rs.shape.code, "x": list(rs.x), "y": list(rs.y)}))
        elif args.cmd == "density":
            return _cmd_density(args)
        elif args.cmd == "oracle":
            fam = _family(args.family)
            cst = default_constants()
            if args.oracle_cmd == "sum":
                kind = WeightKind.MU if fam is Family.PLANE else WeightKind.NU
                w = weight_table(kind, max(args.m, args.a) + 1, cst)
                print(dn.exact_constrained_sum(args.l, args.m, args.a, w))
            else:
                data = json.loads(sys.stdin.read())
                sk = pl.Skeleton(pl.parse_tree(data["shape"]), tuple(data["x"]),
                                 tuple(data["y"]), int(data["a"]))
                kind = WeightKind.MU if fam is Family.PLANE else WeightKind.NU
                w = weight_table(kind, args.n, cst)
                if fam is Family.UNORDERED:
                    from .unordered import GoodSkeleton

                    sk = GoodSkeleton(sk.shape, sk.x, sk.y, sk.a)
                print(dn.exact_skeleton_law(args.n, sk.a, sk, fam, w))
        elif args.cmd == "experiment":
            return _cmd_experiment(args)
    except TreelimError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
