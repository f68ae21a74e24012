"""Command line entry point: ``greedy-cover <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from greedy_cover.bounds import bounds_report
from greedy_cover.empirical import build_cloud
from greedy_cover.errors import ConfigError, InfeasibleDiscretization
from greedy_cover.report import (
    RunConfig,
    density_csv,
    density_curve,
    load_run,
    output_lock,
    replay_run,
    run_cover,
    verify_covering,
)
from greedy_cover.shapes import (
    dumbbell_pair,
    greedy_shape_cover,
    load_shape_pair,
    shape_report,
    validate_shape_pair,
)
from greedy_cover.spaces import Space, read_distance_csv, validate_finite_space

EXIT_FAILED = 1
EXIT_USAGE = 2


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj, out: str | None, name: str):
    text = _dump(obj)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def _space_args(p: argparse.ArgumentParser):
    p.add_argument("--space", choices=["sphere", "torus", "finite"], default="sphere")
    p.add_argument("--dim", type=int, help="manifold dimension n (sphere S^n, torus T^n)")
    p.add_argument("--distance-csv", help="distance matrix for --space finite")
    p.add_argument("--weights-csv", help="point weights for --space finite (default uniform)")


def _radius_args(p: argparse.ArgumentParser):
    p.add_argument("--radius", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--mu", type=float, help="sets epsilon = r / (mu n + 1)")


def _run_args(p: argparse.ArgumentParser):
    p.add_argument("--samples", type=int, default=10_000, help="cloud size M")
    p.add_argument("--net", type=int, help="verification net size V (default 10 M)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engine", choices=["lazy", "exhaustive"], default="lazy")


def _space(args) -> Space:
    if args.space == "finite":
        if not args.distance_csv:
            raise ConfigError("distance-csv", "required for --space finite")
        w = np.loadtxt(args.weights_csv, delimiter=",").reshape(-1) if args.weights_csv else None
        return validate_finite_space(read_distance_csv(args.distance_csv), w)
    if args.dim is None:
        raise ConfigError("dim", f"required for --space {args.space}")
    return Space.sphere(args.dim) if args.space == "sphere" else Space.torus(args.dim)


def _config(args, space: Space | None = None) -> RunConfig:
    return RunConfig(
        space=space or _space(args),
        radius=args.radius,
        epsilon=args.epsilon,
        mu=args.mu,
        samples=args.samples,
        net=args.net,
        seed=args.seed,
        candidates=getattr(args, "candidates", None),
        engine=args.engine,
    )


def _summary(result) -> dict:
    ver = result.verification
    return {
        "centers": result.run.iterations,
        "density": ver.density,
        "covered_fraction_at_r": ver.covered_fraction_at_r,
        "covering_radius_observed": ver.covering_radius_observed,
        "max_load": None if result.certificate is None else result.certificate.max_load,
        "harmonic_bound": None if result.certificate is None else result.certificate.harmonic_bound,
        "failures": result.failures,
    }


def cmd_cover(args) -> int:
    result = run_cover(_config(args), args.out)
    sys.stdout.write(_dump(_summary(result)))
    return 0 if result.ok else EXIT_FAILED


def cmd_verify(args) -> int:
    record, config = load_run(args.run)
    net = args.net if args.net is not None else config.net_size
    seed = args.seed if args.seed is not None else config.seed
    rep = verify_covering(
        config.space, np.asarray(record["centers"]), config.radius, net, seed, epsilon=config.resolved_epsilon
    )
    _emit(rep.to_dict(), args.out, "verification.json")
    return 0


def cmd_bounds(args) -> int:
    rep = bounds_report(_space(args), args.radius, epsilon=args.epsilon, mu=args.mu)
    _emit(rep.to_dict(), args.out, "bounds.json")
    return 0


def cmd_certificate(args) -> int:
    result = replay_run(args.run)
    _emit(result.certificate_dict(), args.out, "certificate.json")
    return 0 if result.ok else EXIT_FAILED


def cmd_shape_cover(args) -> int:
    if args.pair:
        pair = load_shape_pair(args.pair)
        delta = args.delta
    elif args.dumbbell:
        sep, radius, delta = args.dumbbell
        pair = dumbbell_pair(args.dim, sep, radius, delta)
    else:
        raise ConfigError("pair", "give --pair FILE or --dumbbell SEP RADIUS DELTA")
    if not validate_shape_pair(pair, 10_000, args.seed):
        raise ConfigError("pair", "inner shape is not contained in the outer shape")
    space = Space.torus(pair.dim)
    cloud = build_cloud(space, args.samples, args.seed)
    net = args.net if args.net is not None else 10 * args.samples
    out = Path(args.out)
    with output_lock(out):
        run = greedy_shape_cover(cloud, None, pair, engine=args.engine)
        rep = shape_report(run, pair, delta, net, args.seed)
        (out / "run.json").write_text(run.to_json(include_regions=True))
        (out / "shape_report.json").write_text(_dump(rep.to_dict()))
    sys.stdout.write(_dump(rep.to_dict()))
    return 0 if rep.outer_coverage == 1.0 else EXIT_FAILED


def _dims(text: str) -> list[int]:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v]


def cmd_density_curve(args) -> int:
    if args.space == "finite":
        raise ConfigError("space", "density curves need a sphere or torus")
    dims = _dims(args.dims)
    template = _config(args, Space.sphere(dims[0]) if args.space == "sphere" else Space.torus(dims[0]))
    rows = density_curve(dims, template)
    text = density_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "density_curve.csv").write_text(text)
    return 0 if all(not row["error"] for row in rows) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greedy-cover", description="Greedy coverings of compact metric spaces.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cover", help="run the greedy covering pipeline and write JSON artifacts")
    _space_args(p)
    _radius_args(p)
    _run_args(p)
    p.add_argument("--candidates", help="CSV of candidate centers (default: the cloud)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("verify", help="re-verify a recorded run on a fresh net")
    p.add_argument("--run", required=True, help="run.json written by cover")
    p.add_argument("--net", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="closed-form covering bounds")
    _space_args(p)
    _radius_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("certificate", help="replay a recorded run and check its dual certificate")
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("shape-cover", help="greedy covering of the torus by union-of-balls translates")
    p.add_argument("--pair", help="shape pair JSON")
    p.add_argument("--dumbbell", type=float, nargs=3, metavar=("SEP", "RADIUS", "DELTA"))
    p.add_argument("--delta", type=float, help="delta for the bound comparison with --pair")
    p.add_argument("--dim", type=int, default=2)
    _run_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shape_cover)

    p = sub.add_parser("density-curve", help="empirical density against the bounds, one row per dimension")
    p.add_argument("--space", choices=["sphere", "torus"], default="sphere")
    p.add_argument("--dims", default="2-5", help="range like 2-5 or list like 2,3,4")
    _radius_args(p)
    _run_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_density_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.error(str(exc))
    except InfeasibleDiscretization as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
