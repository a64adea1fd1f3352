"""Command-line entry point: ``cplab {dist,rho,experiment,report}``.

Exit status: 0 success (or experiment pass / informational), 1 experiment
fail, 2 usage, input or configuration error, 3 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import dist as D
from .errors import InvalidInputError, ResourceLimitError
from .harness.experiments import DEFAULT_SEED, EXPERIMENTS, run_experiment
from .harness.fitting import fit_slope
from .harness.report import (CONFIG_ERROR, EXIT_STATUS, FAIL, INFO, PASS, emit_report,
                             read_rate_table, worst)
from .literals import (format_distribution, format_polyhedron, parse_polyhedron,
                       read_distribution)
from .metric import kolmogorov_rho, rho_fixed_directions, rho_m_search
from .polyhedra import DirectionSet

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
MAX_SEED = 2**64 - 1


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                   help=f"RNG seed, unsigned 64-bit (default {DEFAULT_SEED})")
    g.add_argument("--out", type=Path, default=None,
                   help="output directory (default: stdout for dist/rho, ./reports for experiment)")
    g.add_argument("--tol", type=_positive_float, default=None,
                   help="truncation tolerance for compound Poisson series")
    g.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads for independent grid points (default 1)")
    g.add_argument("--quick", action="store_true",
                   help="reduced grids (n <= 128, Monte Carlo N <= 10^4)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="cplab",
        description="Compound Poisson approximation lab: exact laws, polyhedral "
                    "distances and rate experiments.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    pd = sub.add_parser("dist", help="operations on distribution literals",
                        description="Apply a distribution operation and print the result.")
    dsub = pd.add_subparsers(dest="action", required=True, metavar="ACTION")
    c = dsub.add_parser("convolve", parents=[common], help="law of the sum of two independents")
    c.add_argument("first", type=Path)
    c.add_argument("second", type=Path)
    c = dsub.add_parser("power", parents=[common], help="n-fold convolution power")
    c.add_argument("n", type=int)
    c.add_argument("input", type=Path)
    c = dsub.add_parser("cp", parents=[common], help="compound Poisson law e(alpha F)")
    c.add_argument("alpha", type=_positive_float)
    c.add_argument("cp_tol", type=_positive_float, metavar="tol")
    c.add_argument("input", type=Path)
    c = dsub.add_parser("classcheck", parents=[common],
                        help="symmetry and lower bound for alpha with F-hat >= -1 + alpha")
    c.add_argument("input", type=Path)
    c.add_argument("--resolution", type=_positive_int, default=None,
                   help="grid points per axis")

    pr = sub.add_parser("rho", parents=[common], help="distance between two laws",
                        description="Print the distance, its mode and a witness polyhedron.")
    pr.add_argument("first", type=Path)
    pr.add_argument("second", type=Path)
    pr.add_argument("--metric", choices=("kolmogorov", "fixed-directions", "search"),
                    default="kolmogorov")
    pr.add_argument("--directions", type=Path,
                    help="polyhedron literal whose normals fix the directions")
    pr.add_argument("--mode", choices=("exact", "ascent"), default="exact",
                    help="threshold enumeration for fixed directions")
    pr.add_argument("--m", type=_positive_int, default=2,
                    help="number of halfspaces for --metric search")

    pe = sub.add_parser("experiment", parents=[common], help="run rate experiments",
                        description="Run an experiment and write its report directory.")
    pe.add_argument("name", choices=EXPERIMENTS + ("all",))
    pe.add_argument("config", type=Path, nargs="?", default=None,
                    help="JSON config (keyword arguments of the experiment)")
    pe.add_argument("--family", default=None,
                    help="built-in family: " + ", ".join(sorted(D.FAMILIES)))

    pp = sub.add_parser("report", parents=[common], help="summarize a report directory")
    pp.add_argument("directory", type=Path)
    return parser


def _color(text: str, verdict: str) -> str:
    if os.environ.get("NO_COLOR") is not None or not sys.stdout.isatty():
        return text
    code = {PASS: "32", INFO: "36", FAIL: "31", CONFIG_ERROR: "33"}.get(verdict, "0")
    return f"\033[{code}m{text}\033[0m"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(args, name: str, body: str, summary: str) -> None:
    if args.out is None:
        sys.stdout.write(body)
        print(f"# {summary}")
    else:
        _write_atomic(args.out / name, body)
        print(summary)


def cmd_dist(args) -> int:
    if args.action == "convolve":
        F, G = read_distribution(args.first), read_distribution(args.second)
        out = D.convolve(F, G)
        what = "convolve"
    elif args.action == "power":
        out = D.power(read_distribution(args.input), args.n)
        what = f"power n={args.n}"
    elif args.action == "cp":
        out = D.compound_poisson(args.alpha, read_distribution(args.input), args.cp_tol)
        what = f"cp alpha={args.alpha!r} tol={args.cp_tol!r}"
    else:
        cc = D.class_check(read_distribution(args.input), resolution=args.resolution)
        line = (f"symmetric={cc.is_symmetric} alpha_lower_bound={cc.alpha_lower_bound!r} "
                f"min_charfn={cc.min_charfn_value!r} grid_points={cc.grid_points_checked} "
                f"lattice={cc.lattice}")
        if args.out is not None:
            _write_atomic(args.out / "classcheck.txt", line + "\n")
        print(line)
        return EXIT_OK
    _emit(args, f"{args.action}.dist", format_distribution(out),
          f"{what}: {out.size} atoms, error_bound {out.error_bound!r}")
    return EXIT_OK


def cmd_rho(args) -> int:
    G, H = read_distribution(args.first), read_distribution(args.second)
    if args.metric == "kolmogorov":
        cert = kolmogorov_rho(G, H)
    elif args.metric == "fixed-directions":
        if args.directions is None:
            raise InvalidInputError("--metric fixed-directions needs --directions FILE")
        T = DirectionSet(parse_polyhedron(args.directions.read_text()).directions)
        cert = rho_fixed_directions(G, H, T, args.mode, seed=args.seed)
    else:
        cert = rho_m_search(G, H, args.m, seed=args.seed, threads=args.threads)
    kind = "exact" if cert.is_exact else "lower bound"
    head = f"value {cert.value!r}\nmode {cert.mode} ({kind})\n"
    if args.out is None:
        sys.stdout.write(head + "witness\n" + format_polyhedron(cert.witness))
    else:
        _write_atomic(args.out / "witness.poly", format_polyhedron(cert.witness))
        _write_atomic(args.out / "rho.txt", head)
        sys.stdout.write(head)
    return EXIT_OK


def _load_config(path: Path, name: str) -> dict:
    try:
        cfg = json.loads(path.read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InvalidInputError(f"config {path}: expected a JSON object")
    base = path.parent
    sections = cfg if name == "all" else {name: cfg}
    for section in sections.values():
        if not isinstance(section, dict):
            raise InvalidInputError(f"config {path}: sections must be JSON objects")
        for key in ("F", "loss"):
            if isinstance(section.get(key), str):
                section[key] = read_distribution(base / section[key])
    return sections


def cmd_experiment(args) -> int:
    sections = _load_config(args.config, args.name) if args.config else {}
    names = EXPERIMENTS if args.name == "all" else (args.name,)
    reports = []
    for name in names:
        cfg = dict(sections.get(name, {}))
        if args.family is not None and (args.name != "all"):
            cfg["family"] = args.family
        reports.append(run_experiment(name, cfg, seed=args.seed, tol=args.tol,
                                      threads=args.threads, quick=args.quick))
    out = args.out if args.out is not None else Path("reports")
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging.", dir=out))
    try:
        built = [emit_report(r, staging) for r in reports]
        for r, path in zip(reports, built):
            final = out / r.exp_id
            if final.exists():
                shutil.rmtree(final)
            os.replace(path, final)
            print(_color(f"{r.exp_id}: {r.verdict}", r.verdict))
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    verdict = worst(r.verdict for r in reports)
    if len(reports) > 1:
        print(_color(f"overall: {verdict}", verdict))
    return EXIT_STATUS[verdict]


def cmd_report(args) -> int:
    d = args.directory
    csvs = sorted(d.glob("*.csv"))
    if not csvs:
        raise InvalidInputError(f"{d}: no rate tables found")
    for path in csvs:
        t = read_rate_table(path)
        pos = [(g, v) for g, v in zip(t.grid, t.distances) if g > 0 and v > 0]
        line = f"{t.name} [{t.family_id}] {len(t.grid)} rows, mode {t.mode}"
        if len(pos) >= 3:
            f = fit_slope(*zip(*pos))
            line += f", slope {f.slope:.4f}, r2 {f.r_squared:.4f}"
        print(line)
    summary = d / "summary.txt"
    if summary.exists():
        print(next((ln for ln in summary.read_text().splitlines()
                    if ln.startswith("verdict:")), ""))
    return EXIT_OK


COMMANDS = {"dist": cmd_dist, "rho": cmd_rho, "experiment": cmd_experiment,
            "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ResourceLimitError as exc:
        print(f"cplab {args.command}: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidInputError, OSError) as exc:
        print(f"cplab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
