"""Command-line entry point: harmlat {measure|rho|strategy|gallery|mc|exp}."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .lattice import SiteSet, straight_path


def _point(s: str) -> tuple[int, ...]:
    return tuple(int(c) for c in s.split(","))


def _load_set(path: str) -> SiteSet:
    with open(path) as fh:
        return SiteSet.from_json(json.load(fh))


def _emit(args, payload, csv_report=None) -> None:
    from .experiments import report_io
    if csv_report is not None and args.format == "csv":
        data = report_io(csv_report, "csv")
    elif csv_report is not None:
        data = report_io(csv_report, "json")
    else:
        data = (json.dumps(payload, indent=1, default=_default) + "\n").encode()
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())


def _default(o):
    import numpy as np
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def _global(p: argparse.ArgumentParser, suppress: bool) -> None:
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, **(kw or {"default": 0}))
    p.add_argument("--tol", type=float, **(kw or {"default": 1e-7}))
    p.add_argument("--threads", type=int, **(kw or {"default": 1}))
    p.add_argument("--out", **(kw or {"default": None}))
    p.add_argument("--format", choices=("json", "csv"), **(kw or {"default": "json"}))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harmlat", description="Harmonic measure on Z^d")
    _global(ap, False)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def cmd(name, **kw):
        p = sub.add_parser(name, **kw)
        _global(p, True)
        return p

    p = cmd("measure", help="harmonic measure from infinity of a set")
    p.add_argument("--set", required=True)
    p.add_argument("--method", choices=("auto", "wired", "dense", "escape"), default="auto")

    p = cmd("rho", help="removal price H_{A-z}(y) / H_A(y)")
    p.add_argument("--set", required=True)
    p.add_argument("--y", type=_point, required=True)
    p.add_argument("--z", type=_point, required=True)
    p.add_argument("--method", choices=("auto", "wired", "dense", "escape"), default="dense")

    p = cmd("strategy", help="vertex chosen by the planar removal rule")
    p.add_argument("--set", required=True)

    p = cmd("gallery", help="emit an example set or chain")
    p.add_argument("name", choices=("tube", "spiral", "tetration", "klein", "hairs", "tree", "random"))
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--r", type=int, default=40)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--connectivity", choices=("any", "star_connected"), default="any")

    p = cmd("mc", help="Monte Carlo estimators")
    p.add_argument("kind", choices=("hitting", "escape", "gamma"))
    p.add_argument("--set")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--kill-radius", type=int, default=None)
    p.add_argument("--start-radius", type=int, default=None)
    p.add_argument("--x", type=_point, default=None)
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--d", type=int, default=2)

    p = cmd("exp", help="named experiments")
    p.add_argument("name", choices=("rho", "klein", "mn", "rates", "lemmas"))
    p.add_argument("--count", type=int, default=300)
    p.add_argument("--n-list", type=_point, default=(4, 6, 8))
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--allow-large", action="store_true", help="permit Klein n > 8")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # solves are single-threaded per instance; the flag bounds BLAS threads
    os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    handler = globals()["_cmd_" + args.cmd]
    return handler(args)


def _cmd_measure(args) -> int:
    from .solver import ToleranceError, harmonic_measure_infinity
    A = _load_set(args.set)
    try:
        mv = harmonic_measure_infinity(A, args.method, args.tol)
    except ToleranceError as exc:
        _emit(args, {"error": str(exc), "best": exc.best.to_json() if exc.best else None})
        return 1
    _emit(args, mv.to_json())
    return 0


def _cmd_rho(args) -> int:
    from .solver import removal_price
    A = _load_set(args.set)
    rp = removal_price(A, args.y, args.z, args.tol, args.method)
    _emit(args, {"rho": rp.rho, "error": rp.error, "before": rp.before, "after": rp.after})
    return 0


def _cmd_strategy(args) -> int:
    from .geometry import select_removal_vertex
    from .solver import dense_harmonic_measure
    A = _load_set(args.set)
    dec = select_removal_vertex(A)
    o = (0,) * A.d
    rho = dense_harmonic_measure(A.without(dec.z_dagger))[o] / dense_harmonic_measure(A)[o]
    _emit(args, {**dec.to_json(), "rho": rho})
    return 0


def _cmd_gallery(args) -> int:
    from . import constructions as c
    name = args.name
    if name == "tube":
        t = c.tube_set(args.m)
        _emit(args, {**t.points.to_json(), "y": list(t.y), "z": list(t.z)})
    elif name == "spiral":
        _emit(args, c.spiral_set(args.n).to_json())
    elif name == "tetration":
        _emit(args, c.tetration_set(args.n).to_json())
    elif name == "klein":
        _emit(args, c.klein_bottle(c.KleinBottleSpec(args.n, args.d or 3)).to_json())
    elif name == "hairs":
        _emit(args, c.hairs_chain(args.k, args.r).to_json())
    elif name == "tree":
        _emit(args, c.tree_tunnel_chain(args.n).to_json())
    else:
        params = c.RandomSetParams(args.size, args.window, args.connectivity, False, args.d or 2)
        _emit(args, c.random_site_set(params, args.seed).to_json())
    return 0


def _cmd_mc(args) -> int:
    from . import montecarlo as mc
    if args.kind == "gamma":
        est = mc.mc_path_traversal(straight_path((0,) * args.d, 0, args.L), args.samples, args.seed)
    else:
        if not args.set:
            raise SystemExit("--set is required")
        A = _load_set(args.set)
        if args.kind == "hitting":
            r = args.start_radius or 2 * A.radius() + 2 + max(sum(abs(c) for c in p) for p in A.points)
            est = mc.mc_hitting_far(A, r, args.samples, args.seed)
        else:
            x = args.x or (0,) * A.d
            est = mc.mc_escape(A, x, args.kill_radius or 8 * (A.radius() + 2), args.samples, args.seed)
    _emit(args, est.to_json())
    return 0


def _cmd_exp(args) -> int:
    from . import experiments as ex
    name = args.name
    if name == "rho":
        rep = ex.exp_rho_ensemble(args.count, seed=args.seed)
    elif name == "klein":
        if max(args.n_list) > 8 and not args.allow_large:
            raise SystemExit("Klein n above 8 needs --allow-large")
        rep = ex.exp_klein_ratio(tuple(args.n_list))
    elif name == "mn":
        rep = ex.exp_mn_bruteforce(args.n_max)
    elif name == "rates":
        rep = ex.exp_rate_fits()
    else:
        rep = ex.exp_lemma_battery(args.seed, args.instances)
    _emit(args, None, rep)
    for v in rep.verdicts:
        sys.stderr.write(f"[{v['verdict']}] {v['criterion']}: {v['assertion']}\n")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
