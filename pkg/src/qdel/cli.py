"""Command-line front end: ``qdel eval | gram | sweep | limit | selftest``.

Any option may also come from a config file (``--config path``) holding one
``key = value`` per line; options given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import sys
from math import sqrt
from pathlib import Path

import numpy as np

from .analysis import fidelity_report
from .deletion_engine import run_pipeline
from .machine_space import (
    NAMES,
    InfeasibleParamsError,
    MachineParams,
    analytic_feasible,
    build_gram,
    check_feasible,
    realize_vectors,
)
from .selftest import corrupt_gram, run_selftest, swapped_transformer
from .sweep import Point, SweepSpec, fmt, limit_report, render, rounded, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
R2 = 1 / sqrt(2)
# renormalize (m1, m2) given to 8 decimals; anything further off is rejected
M_RENORM_TOL = 1e-6


class InvalidInput(Exception):
    pass


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InvalidInput(f"not a boolean: {text!r}")


def read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _point_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--m1", type=float, default=R2)
    p.add_argument("--m2re", type=float, default=R2)
    p.add_argument("--m2im", type=float, default=0.0)
    p.add_argument("--alpha2", type=float, default=0.5)
    p.add_argument("--beta-phase", dest="beta_phase", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdel", description="Universal quantum deletion machine laboratory.")
    parser.add_argument("--config", help="key = value file supplying defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="fidelity report at one point")
    _point_options(p)
    p.add_argument("--transform", action="store_true", help="classify and show the modified machine")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("gram", help="Gram matrix and realized machine vectors")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--dump", help="write JSON here instead of stdout")

    p = sub.add_parser("sweep", help="sweep one parameter, emit CSV or JSON")
    _point_options(p)
    p.add_argument("--param", required=True, choices=("lambda", "alpha2", "y", "beta_phase"))
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--transform", action="store_true")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("limit", help="F3, F4 as lambda -> 1/2")
    _point_options(p)
    p.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("selftest", help="run every acceptance check")
    p.add_argument("--fault", choices=("transformer", "gram"), help=argparse.SUPPRESS)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    for flag in ("transform", "json"):
        if flag in cfg:
            cfg[flag] = _bool(cfg[flag])
    subparsers = parser._subparsers._group_actions[0].choices  # argparse has no public accessor
    for sp in subparsers.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})
    allowed = {a.dest for sp in subparsers.values() for a in sp._actions}
    unknown = set(cfg) - allowed
    if unknown:
        raise InvalidInput(f"unknown config keys: {', '.join(sorted(unknown))}")


def _point(args) -> Point:
    m1, m2 = args.m1, complex(args.m2re, args.m2im)
    norm = m1 * m1 + abs(m2) ** 2
    if abs(norm - 1.0) > M_RENORM_TOL:
        raise InvalidInput(f"standard state not normalized: m1^2 + |m2|^2 = {norm:.12g}")
    scale = 1 / sqrt(norm)
    if not 0.0 <= args.alpha2 <= 1.0:
        raise InvalidInput(f"alpha2 must lie in [0, 1], got {args.alpha2}")
    if not 0.0 <= args.lam <= 0.5:
        raise InvalidInput(f"lambda must lie in [0, 1/2], got {args.lam}")
    if args.y < 0:
        raise InvalidInput(f"Y must be non-negative, got {args.y}")
    return Point(args.lam, args.y, m1 * scale, m2 * scale, args.alpha2, args.beta_phase)


def _matrix_json(mat) -> dict:
    return {"re": np.real(mat).tolist(), "im": np.imag(mat).tolist()}


def _matrix_text(mat) -> list[str]:
    rows = []
    for row in np.asarray(mat):
        cells = []
        for z in row:
            cells.append(fmt(z.real) if abs(z.imag) < 1e-15 else f"{fmt(z.real)}{z.imag:+.12g}j")
        rows.append("    [" + ", ".join(cells) + "]")
    return rows


def cmd_eval(args) -> int:
    point = _point(args)
    if not analytic_feasible(point.lam, point.y):
        raise InvalidInput(f"infeasible: 3Y² > 1−2λ (3Y² = {3 * point.y ** 2:.6g}, 1−2λ = {1 - 2 * point.lam:.6g})")
    psi, params = point.qubit(), point.params()
    report = fidelity_report(psi, params, args.transform)
    chosen = run_pipeline(psi, params, args.transform)
    tag = "'" if args.transform else ""
    reduced = {f"rho{m}{tag}": chosen.reduced[m].matrix for m in (1, 2, 3)}
    if args.json:
        out = report.as_dict()
        out["reduced"] = {k: _matrix_json(v) for k, v in reduced.items()}
        print(json.dumps(rounded(out), indent=2))
        return EXIT_OK
    inputs = report.inputs
    print("inputs: " + " ".join(f"{k}={fmt(v)}" for k, v in inputs.items()))
    print(f"{'machine':<13}{'fidelity':<6}{'numeric':>16}{'closed':>16}{'diff':>12}")
    for name, group in (("conventional", report.conventional), ("modified", report.modified)):
        for key, val in group.items():
            diff = "" if val.diff is None else f"{val.diff:.2e}"
            print(f"{name:<13}{key:<6}{fmt(val.numeric):>16}{fmt(val.closed):>16}{diff:>12}")
    print(f"classification: {report.classification}")
    for key, mat in reduced.items():
        print(f"{key} =")
        print("\n".join(_matrix_text(mat)))
    return EXIT_OK


def cmd_gram(args) -> int:
    if not 0.0 <= args.lam <= 0.5 or args.y < 0:
        raise InvalidInput("need 0 <= lambda <= 1/2 and Y >= 0")
    gram = build_gram(MachineParams(args.lam, args.y))
    record = check_feasible(gram)
    if not record.feasible:
        raise InvalidInput(f"infeasible: 3Y² > 1−2λ (min eigenvalue {record.min_eigenvalue:.3e})")
    basis = realize_vectors(gram)
    payload = {
        "lambda": args.lam,
        "y": args.y,
        "gram": np.real(gram.entries).tolist(),
        "vectors": {n: np.real(basis[n]).tolist() for n in NAMES},
        "rank": basis.d,
    }
    text = json.dumps(rounded(payload), indent=2) + "\n"
    if args.dump:
        Path(args.dump).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _point(args)
    try:
        spec = SweepSpec(args.param, args.start, args.stop, args.steps, base, args.transform, args.fmt, args.out)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    text = render(spec, run_sweep(spec))
    if spec.out:
        Path(spec.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_limit(args) -> int:
    point = _point(args)
    try:
        report = limit_report(point, args.eps)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print("eps: " + " ".join(fmt(e) for e in report.eps))
        for s in report.series:
            vals = " ".join(fmt(v) for v in s.values)
            print(
                f"{s.name}: {vals} -> exact {fmt(s.exact)} (anchor {fmt(s.anchor)},"
                f" extrapolated {fmt(s.extrapolated)}) monotone={s.monotone}"
                f" continuous={s.continuous} {'PASS' if s.passed else 'FAIL'}"
            )
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_selftest(args) -> int:
    gate = swapped_transformer() if args.fault == "transformer" else None
    hook = corrupt_gram() if args.fault == "gram" else None
    report = run_selftest(gate, hook)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "eval": cmd_eval,
    "gram": cmd_gram,
    "sweep": cmd_sweep,
    "limit": cmd_limit,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (InvalidInput, InfeasibleParamsError, OSError) as exc:
        print(f"qdel: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
