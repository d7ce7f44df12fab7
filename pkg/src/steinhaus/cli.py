"""Command-line entry point: ``steinhaus <command> [flags]``.

Commands
--------
gen-points   write a lattice window to a point file
find-ball    find a ball holding exactly n points, write its certificate
check-sprime survey separating perturbations for unit-vector pairs
norm-info    render the unit sphere (custom3d mesh or planar polyline)
bench        compare indexed and linear-scan ball counts

Every command accepts ``--config FILE``, a flat ``key=value`` text file
whose keys are the command's long flag names (``tau-shell`` or
``tau_shell``); ``#`` starts a comment.  Flags given on the command line
override the file.  Unknown keys are rejected.

Exit codes: 0 success, 1 usage, 2 budget exhausted or failed verification,
3 horizon violation, 4 I/O.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BudgetExhausted,
    HorizonError,
    PointFileError,
    SteinhausError,
    WindowTooLarge,
    WitnessSearchExhausted,
)
from .mesh import (
    gauge_errors,
    mesh_csv,
    mesh_svg,
    polyline_csv,
    polyline_svg,
    sphere_polyline,
    triangle_mesh,
)
from .norms import NormSpec, parse_norm, sample_unit_sphere
from .pointset import (
    DEFAULT_POINT_CAP,
    atomic_write_text,
    build_index,
    count_in_ball,
    count_in_ball_scan,
    lattice_window,
    load_points,
    save_points,
)
from .search import SearchConfig, find_ball_growth, find_ball_sorted
from .sprime import (
    STRATEGIES,
    TAU_SEP,
    equator_pair,
    linf_facet_pairs,
    random_unit_pairs,
    sprime_scan,
)

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_HORIZON, EXIT_IO = 0, 1, 2, 3, 4
MESH_GAUGE_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument types


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and np.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _floats(text: str) -> tuple:
    try:
        values = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not all(np.isfinite(values)):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return values


def _ints(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _strategies(text: str) -> tuple:
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    unknown = [n for n in names if n not in STRATEGIES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"strategies must be drawn from {','.join(STRATEGIES)}")
    return names


def _pairs(text: str) -> tuple:
    out = []
    for item in text.split(","):
        a, sep, b = item.partition(":")
        try:
            out.append((float(a), float(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected s1:s2 pairs, got {item!r}") from None
        if not sep:
            raise argparse.ArgumentTypeError(f"expected s1:s2 pairs, got {item!r}")
    return tuple(out)


# ---------------------------------------------------------------------------
# parser


def _add_norm(p, default: Optional[str] = "l2", with_dim=True):
    p.add_argument("--norm", default=default,
                   help="l<p> (l1, l1.5, l2, ...), linf or custom3d" +
                   ("" if default else " (default: the point file's norm)"))
    p.add_argument("--beta", type=_floats, help="custom3d corner slopes c1,c2,c3,c4")
    if with_dim:
        p.add_argument("--dim", type=_positive_int, help="dimension (implied for custom3d)")


def _add_search(p):
    d = SearchConfig()
    p.add_argument("--tau-shell", type=_positive_float, default=d.tau_shell)
    p.add_argument("--tau-tie", type=_positive_float, default=d.tau_tie)
    p.add_argument("--delta-witness", type=_positive_float, default=d.delta_witness)
    p.add_argument("--shrink", type=_positive_float, default=d.shrink)
    p.add_argument("--shrink-rounds", type=_positive_int, default=d.shrink_rounds)
    p.add_argument("--max-iterations", type=_positive_int, default=d.max_iterations)
    p.add_argument("--max-perturbations", type=_positive_int, default=d.max_perturbations)
    p.add_argument("--perturb-scale", type=_positive_float, default=d.perturb_scale)
    p.add_argument("--witness-budget", type=_positive_int, default=d.witness_budget)
    p.add_argument("--strategies", type=_strategies, default=STRATEGIES)
    p.add_argument("--tau-sep", type=_positive_float, default=TAU_SEP)
    p.add_argument("--no-fallback", action="store_true",
                   help="growth: fail instead of falling back to sorted distances")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="steinhaus", description=__doc__.split("\n\n")[0],
                     epilog=__doc__.split("\n\n", 1)[1],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", help="key=value file with defaults for these flags")
        return p

    p = command("gen-points", "write the lattice points of a norm ball to a point file")
    p.add_argument("--horizon", type=_positive_float, required=True)
    _add_norm(p)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_POINT_CAP)
    p.add_argument("--out", required=True)

    p = command("find-ball", "find a ball containing exactly n points")
    p.add_argument("--points", help="point file; otherwise a lattice window from --dim/--horizon")
    p.add_argument("--horizon", type=_positive_float, help="lattice window horizon")
    _add_norm(p, default=None)
    p.add_argument("--center", type=_floats, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--method", choices=("sorted", "growth"), default="sorted")
    p.add_argument("--seed", type=int, default=0)
    _add_search(p)
    p.add_argument("--out", help="certificate JSON (default: stdout)")

    p = command("check-sprime", "survey separating perturbations for pairs of unit vectors")
    _add_norm(p)
    p.add_argument("--pairs", type=_count, help="random unit pairs")
    p.add_argument("--facet-pairs", type=_count, help="linf pairs on a common facet")
    p.add_argument("--equator", type=_pairs, help="custom3d equator pairs s1:s2,...")
    p.add_argument("--edge", type=int, choices=(1, 2, 3, 4), default=1)
    p.add_argument("--delta", type=_positive_float, required=True)
    p.add_argument("--budget", type=_positive_int, default=20000)
    p.add_argument("--strategies", type=_strategies, default=STRATEGIES)
    p.add_argument("--tau-sep", type=_positive_float, default=TAU_SEP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON (default: stdout)")

    p = command("norm-info", "render the unit sphere as a mesh or polyline")
    _add_norm(p)
    p.add_argument("--triangles", type=_ints, help="custom3d: triangles of the square (default 1,2)")
    p.add_argument("--grid", type=_positive_int, help="custom3d: subdivisions per triangle (default 64)")
    p.add_argument("--samples", type=_positive_int, default=256, help="planar: polyline vertices")
    p.add_argument("--svg")
    p.add_argument("--csv")
    p.add_argument("--out", help="summary JSON (default: stdout)")

    p = command("bench", "time indexed against linear-scan ball counts")
    p.add_argument("--points", required=True)
    _add_norm(p, default=None, with_dim=False)
    p.add_argument("--queries", type=_count, default=1000)
    p.add_argument("--radius", type=_positive_float, help="query radius (default: horizon / 50)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON (default: stdout)")
    return parser


def _subparser(parser, name) -> argparse.ArgumentParser:
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices[name]


def config_tokens(path: str, sub: argparse.ArgumentParser) -> list:
    """Translate a key=value file into flag tokens for ``sub``."""
    flags = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--") and opt not in ("--help", "--config"):
                flags[opt[2:]] = action
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    tokens = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("_", "-"), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        if key not in flags:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if isinstance(flags[key], argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(f"--{key}")
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"{path}:{lineno}: {key} expects true or false")
        else:
            tokens.append(f"--{key}={value}")
    return tokens


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    # find --config before the full parse, so the file can supply required flags
    pre = _Parser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in COMMANDS:
        at = argv.index(known.command)
        extra = config_tokens(known.config, _subparser(parser, known.command))
        argv = argv[: at + 1] + extra + argv[at + 1:]
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# commands


def _norm(args, dim: Optional[int]) -> NormSpec:
    try:
        return parse_norm(args.norm or "l2", dim=dim, beta=args.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def _json(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def cmd_gen_points(args) -> int:
    if args.norm != "custom3d" and args.dim is None:
        raise UsageError("gen-points needs --dim")
    spec = _norm(args, args.dim)
    ps = lattice_window(spec.dim, args.horizon, spec, cap=args.cap)
    save_points(ps, args.out)
    print(f"wrote {len(ps)} points to {args.out}", file=sys.stderr)
    return EXIT_OK


def _load_window(args):
    if args.points:
        if args.horizon is not None:
            raise UsageError("give either --points or a lattice --horizon, not both")
        return load_points(args.points)
    if args.horizon is None:
        raise UsageError("need --points or --horizon (with --dim) for a lattice window")
    if args.norm != "custom3d" and args.dim is None:
        raise UsageError("a lattice window needs --dim")
    spec = _norm(args, args.dim)
    return lattice_window(spec.dim, args.horizon, spec)


def cmd_find_ball(args) -> int:
    ps = _load_window(args)
    spec = ps.horizon_norm if args.norm is None else _norm(args, ps.dim)
    if spec.dim != ps.dim:
        raise UsageError(f"norm is {spec.dim}-dimensional, points are {ps.dim}-dimensional")
    if len(args.center) != ps.dim:
        raise UsageError(f"--center needs {ps.dim} coordinates")
    try:
        cfg = SearchConfig(
            tau_shell=args.tau_shell, tau_tie=args.tau_tie, delta_witness=args.delta_witness,
            shrink=args.shrink, shrink_rounds=args.shrink_rounds,
            max_iterations=args.max_iterations, max_perturbations=args.max_perturbations,
            perturb_scale=args.perturb_scale, witness_budget=args.witness_budget,
            witness_strategies=args.strategies, tau_sep=args.tau_sep,
            fallback_to_sorted=not args.no_fallback, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    finder = find_ball_sorted if args.method == "sorted" else find_ball_growth
    cert = finder(build_index(ps), spec, np.array(args.center), args.n, cfg)
    _emit(cert.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_check_sprime(args) -> int:
    sources = [s for s in ("pairs", "facet_pairs", "equator") if getattr(args, s) is not None]
    if len(sources) != 1:
        raise UsageError("give exactly one of --pairs, --facet-pairs, --equator")
    dim = 3 if args.norm == "custom3d" else args.dim
    if dim is None:
        raise UsageError("check-sprime needs --dim")
    spec = _norm(args, dim)
    rng = np.random.default_rng(args.seed)
    if args.pairs is not None:
        pairs = random_unit_pairs(spec, args.pairs, rng)
    elif args.facet_pairs is not None:
        if spec.kind != "linf":
            raise UsageError("--facet-pairs needs --norm linf")
        pairs = linf_facet_pairs(spec.dim, args.facet_pairs, rng)
    else:
        if spec.kind != "custom3d":
            raise UsageError("--equator needs --norm custom3d")
        pairs = [equator_pair(spec, s1, s2, args.edge) for s1, s2 in args.equator]
    try:
        report = sprime_scan(spec, pairs, args.delta, args.budget, args.seed,
                             args.strategies, args.tau_sep)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_norm_info(args) -> int:
    dim = 3 if args.norm == "custom3d" else args.dim
    if dim is None:
        raise UsageError("norm-info needs --dim for this norm")
    spec = _norm(args, dim)
    info = {"norm": spec.name, "dim": spec.dim}
    if spec.kind == "custom3d":
        triangles = args.triangles or (1, 2)
        grid = args.grid or 64
        if any(t not in (1, 2, 3, 4) for t in triangles):
            raise UsageError("--triangles takes indices from 1..4")
        vertices, faces = triangle_mesh(spec.params, triangles, grid)
        err = gauge_errors(spec, vertices)
        info.update(triangles=list(triangles), grid=grid, vertices=len(vertices),
                    faces=len(faces), max_gauge_error=float(err.max()))
        if err.max() > MESH_GAUGE_TOL:
            raise SteinhausError(f"mesh vertex off the unit sphere by {err.max():.3g}")
        if args.csv:
            atomic_write_text(args.csv, mesh_csv(vertices, faces))
        if args.svg:
            atomic_write_text(args.svg, mesh_svg(vertices, faces))
    else:
        if args.triangles is not None or args.grid is not None:
            raise UsageError("--triangles/--grid apply to custom3d only")
        if spec.dim != 2:
            raise UsageError("only planar (dim 2) sphere polylines are drawn for l<p>/linf")
        line = sphere_polyline(spec, args.samples)
        err = gauge_errors(spec, line)
        info.update(vertices=len(line) - 1, max_gauge_error=float(err.max()))
        if args.csv:
            atomic_write_text(args.csv, polyline_csv(line))
        if args.svg:
            atomic_write_text(args.svg, polyline_svg(line))
    _emit(_json(info), args.out)
    return EXIT_OK


def bench_report(ps, spec: NormSpec, queries: int, radius: Optional[float], seed: int) -> dict:
    """Indexed vs linear-scan counts on random balls inside the window."""
    radius = ps.horizon / 50 if radius is None else radius
    report = {"points": len(ps), "queries": int(queries), "norm": spec.name, "radius": radius,
              "seed": seed}
    if queries == 0:
        report.update(indexed_seconds=0.0, scan_seconds=0.0, speedup=None, identical=True,
                      mismatches=0)
        return report
    rng = np.random.default_rng(seed)
    # centers spread over the inner half of the window
    reach = 0.5 * ps.horizon * rng.random(queries) ** (1 / ps.dim)
    centers = sample_unit_sphere(ps.horizon_norm, rng, queries) * reach[:, None]
    t0 = time.perf_counter()
    ips = build_index(ps)
    fast = [count_in_ball(ips, c, radius, spec) for c in centers]
    t1 = time.perf_counter()
    slow = [count_in_ball_scan(ps, c, radius, spec) for c in centers]
    t2 = time.perf_counter()
    mismatches = sum(
        a.count != b.count or not np.array_equal(np.sort(a.ids), np.sort(b.ids))
        for a, b in zip(fast, slow)
    )
    report.update(indexed_seconds=t1 - t0, scan_seconds=t2 - t1,
                  speedup=(t2 - t1) / (t1 - t0), identical=mismatches == 0,
                  mismatches=int(mismatches), mean_count=float(np.mean([a.count for a in fast])))
    return report


def cmd_bench(args) -> int:
    ps = load_points(args.points)
    spec = ps.horizon_norm if args.norm is None else _norm(args, ps.dim)
    _emit(_json(bench_report(ps, spec, args.queries, args.radius, args.seed)), args.out)
    return EXIT_OK


COMMANDS = {
    "gen-points": cmd_gen_points,
    "find-ball": cmd_find_ball,
    "check-sprime": cmd_check_sprime,
    "norm-info": cmd_norm_info,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExhausted, WitnessSearchExhausted) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except HorizonError as exc:
        print(f"horizon violation: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except (OSError, PointFileError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WindowTooLarge as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SteinhausError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
