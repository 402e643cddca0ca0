"""Command-line interface: ``spherenewton {generate,solve,bench,check}``.

Exit codes: 0 success, 1 solve or check failure, 2 usage, 3 generation
failure, 4 I/O or parse error.
"""
import argparse
import json
import sys

import numpy as np

from . import __version__
from .bench import BenchPlan, run_batch, write_report, write_runs
from .errors import DegenerateMatrix, InstanceFormatError
from .field import AvvfField
from .instances import (SIGMA_BOUND, SV_RESCALE_MODES, dumps_instance, generate_instance,
                        instances_equal, load_instance, loads_instance, random_start,
                        save_instance)
from .solver import SolverConfig, solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GENERATE, EXIT_IO = 0, 1, 2, 3, 4

GENERATE_DEFAULTS = {"n": None, "density": 0.003, "seed": 0, "out": None, "sv_rescale": "scale"}
SOLVE_DEFAULTS = {"method": "gnm", "M": 0, "seed": 0, "start_planted": False, "start": None,
                  "tol_residual": 1e-6, "max_iters": 100, "sigma": 1e-4, "beta": 0.5,
                  "max_backtracks": 60, "trace": None}
BENCH_DEFAULTS = {"dimensions": [50, 100, 200], "instances_per_dim": 50, "M_values": [0, 1, 5],
                  "include_pure_newton": False, "base_seed": 0, "repeats_per_timing": 3,
                  "density": 0.003, "sv_rescale": "scale", "start_at_planted": False,
                  "tol_residual": 1e-6, "max_iters": 100, "sigma": 1e-4, "beta": 0.5,
                  "max_backtracks": 60, "threads": 1, "timing": True,
                  "out_csv": "bench.csv", "out_jsonl": "bench_runs.jsonl"}
CHECK_DEFAULTS = {}


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="spherenewton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random AVVF instance file")
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--density", type=float, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None)
    g.add_argument("--sv-rescale", dest="sv_rescale", choices=SV_RESCALE_MODES, default=None)
    g.add_argument("--config", default=None, help="JSON file of defaults; flags win")

    s = sub.add_parser("solve", help="solve one instance with NM or GNM")
    s.add_argument("instance")
    s.add_argument("--method", choices=("gnm", "nm"), default=None)
    s.add_argument("--M", type=int, default=None)
    s.add_argument("--seed", type=int, default=None, help="start point seed")
    s.add_argument("--start-planted", dest="start_planted", action="store_true", default=None,
                   help="start at the planted solution instead of a random point")
    s.add_argument("--start", type=_float_list, default=None,
                   help="explicit start point as comma-separated coordinates (normalized)")
    s.add_argument("--tol", dest="tol_residual", type=float, default=None)
    s.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    s.add_argument("--sigma", type=float, default=None)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--max-backtracks", dest="max_backtracks", type=int, default=None)
    s.add_argument("--trace", default=None, help="write the JSONL trace here")
    s.add_argument("--config", default=None)

    b = sub.add_parser("bench", help="run a benchmark plan")
    b.add_argument("--dims", dest="dimensions", type=_int_list, default=None)
    b.add_argument("--instances", dest="instances_per_dim", type=int, default=None)
    b.add_argument("--M", dest="M_values", type=_int_list, default=None)
    b.add_argument("--include-nm", dest="include_pure_newton", action="store_true", default=None)
    b.add_argument("--seed", dest="base_seed", type=int, default=None)
    b.add_argument("--repeats", dest="repeats_per_timing", type=int, default=None)
    b.add_argument("--density", type=float, default=None)
    b.add_argument("--sv-rescale", dest="sv_rescale", choices=SV_RESCALE_MODES, default=None)
    b.add_argument("--start-planted", dest="start_at_planted", action="store_true", default=None)
    b.add_argument("--tol", dest="tol_residual", type=float, default=None)
    b.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    b.add_argument("--sigma", type=float, default=None)
    b.add_argument("--beta", type=float, default=None)
    b.add_argument("--max-backtracks", dest="max_backtracks", type=int, default=None)
    b.add_argument("--threads", type=int, default=None)
    b.add_argument("--no-timing", dest="timing", action="store_false", default=None)
    b.add_argument("--out-csv", dest="out_csv", default=None)
    b.add_argument("--out-jsonl", dest="out_jsonl", default=None)
    b.add_argument("--config", "--plan", dest="config", default=None,
                   help="JSON plan/config file; flags win")

    c = sub.add_parser("check", help="audit an instance file")
    c.add_argument("instance")
    return parser


def _effective(args, defaults):
    params = dict(defaults)
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        params.update(loaded)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _echo(command, params):
    print(json.dumps({"command": command, **params}, sort_keys=True), file=sys.stderr)


def cmd_generate(p):
    if p["n"] is None:
        raise UsageError("generate needs --n")
    if p["n"] < 2:
        raise UsageError(f"--n must be >= 2, got {p['n']}")
    if p["out"] is None:
        raise UsageError("generate needs --out")
    if not 0.0 < p["density"] <= 1.0:
        raise UsageError(f"--density must lie in (0, 1], got {p['density']}")
    try:
        inst = generate_instance(p["n"], p["density"], p["seed"], sv_rescale=p["sv_rescale"])
    except DegenerateMatrix as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERATE
    try:
        save_instance(inst, p["out"])
    except OSError as exc:
        print(f"error: cannot write {p['out']}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"sigma_min {inst.sigma_min!r}")
    print(f"nnz {inst.nnz}")
    return EXIT_OK


def _load(path):
    try:
        return load_instance(path)
    except (OSError, InstanceFormatError, UnicodeDecodeError) as exc:
        print(f"error: cannot load instance {path}: {exc}", file=sys.stderr)
        return None


def cmd_solve(args, p):
    try:
        cfg = SolverConfig(tol_residual=p["tol_residual"], max_iters=p["max_iters"],
                           sigma=p["sigma"], beta=p["beta"], M=p["M"],
                           max_backtracks=p["max_backtracks"])
    except ValueError as exc:
        raise UsageError(str(exc))
    inst = _load(args.instance)
    if inst is None:
        return EXIT_IO
    if p["start_planted"]:
        p0 = inst.planted_solution
    elif p["start"] is not None:
        p0 = np.asarray(p["start"], dtype=float)
        if p0.shape != (inst.n,) or not np.linalg.norm(p0) > 0.0:
            raise UsageError(f"--start needs {inst.n} coordinates, not all zero")
        p0 = p0 / np.linalg.norm(p0)
    else:
        p0 = random_start(inst.n, p["seed"])
    trace = solve(AvvfField(inst), p0, p["method"], cfg)
    if p["trace"]:
        try:
            trace.write_jsonl(p["trace"])
        except OSError as exc:
            print(f"error: cannot write trace {p['trace']}: {exc}", file=sys.stderr)
            return EXIT_IO
    print(f"status {trace.status.value}")
    print(f"iterations {trace.iterations}")
    print(f"final_residual {trace.final_residual!r}")
    return EXIT_OK if trace.solved else EXIT_FAIL


def cmd_bench(p):
    fields = {k: v for k, v in p.items() if k not in ("threads", "timing", "out_csv", "out_jsonl")}
    try:
        plan = BenchPlan(**fields)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid plan: {exc}")
    if p["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    result = run_batch(plan, threads=p["threads"], timing=p["timing"])
    try:
        write_report(result.rows, p["out_csv"], timing=p["timing"])
        write_runs(result.runs, p["out_jsonl"])
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in result.rows:
        line = f"{r.method:>10} n={r.dimension:<6} solved={r.solved_percent:6.1f}% it={r.avg_iters:.4g}"
        if r.avg_time_s is not None:
            line += f" time={r.avg_time_s:.4g}s"
        print(line)
    return EXIT_OK


def check_instance(inst, text=None):
    """[(name, passed, detail)] for every instance invariant."""
    checks = []
    n = inst.n
    sv = np.linalg.svd(inst.dense_A(), compute_uv=False)
    checks.append(("sigma_min > 3", bool(sv[-1] > SIGMA_BOUND), f"sigma_min={float(sv[-1])!r}"))
    unit = abs(np.linalg.norm(inst.planted_solution) - 1.0)
    checks.append(("planted solution on sphere", bool(unit <= 1e-12), f"| |p*| - 1 | = {unit:.3e}"))
    res = float(np.linalg.norm(AvvfField(inst).eval(inst.planted_solution)))
    checks.append(("planted residual <= 1e-10", res <= 1e-10, f"|X(p*)| = {res:.3e}"))
    b_expected = inst.A @ inst.planted_solution - np.abs(inst.planted_solution)
    gap = float(np.max(np.abs(inst.b - b_expected))) if n else 0.0
    checks.append(("b = A p* - |p*|", gap <= 1e-12 * (1.0 + float(np.max(np.abs(b_expected)))),
                   f"max gap {gap:.3e}"))
    again = loads_instance(dumps_instance(inst))
    checks.append(("file round-trip bit-exact", instances_equal(inst, again), ""))
    if text is not None:
        checks.append(("canonical serialization", dumps_instance(inst) == text, ""))
    return checks


def cmd_check(args):
    try:
        with open(args.instance) as fh:
            text = fh.read()
        inst = loads_instance(text)
    except (OSError, InstanceFormatError, UnicodeDecodeError) as exc:
        print(f"error: cannot load instance {args.instance}: {exc}", file=sys.stderr)
        return EXIT_IO
    ok = True
    for name, passed, detail in check_instance(inst, text):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            p = _effective(args, GENERATE_DEFAULTS)
            _echo("generate", p)
            return cmd_generate(p)
        if args.command == "solve":
            p = _effective(args, SOLVE_DEFAULTS)
            _echo("solve", {"instance": args.instance, **p})
            return cmd_solve(args, p)
        if args.command == "bench":
            p = _effective(args, BENCH_DEFAULTS)
            _echo("bench", p)
            return cmd_bench(p)
        _echo("check", {"instance": args.instance})
        return cmd_check(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spherenewton: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
