"""Command-line front end and JSON/CSV serialization.

File formats:

* source set:  ``{"M": 3, "vertices": [[0.5, 0.3, 0.2], ...]}``
* mechanism:   ``{"M": 3, "rows": [[0.7, 0.3, 0.0], ...]}``

Floats are written with 17 significant digits so values round-trip exactly.
Curve output is CSV with the fixed header
``D,eps_dp,eps_dp_lower,eps_dp_upper,eps_it,k_star``; exact solutions fill
``eps_dp``, Class III rows fill the bound columns instead, and infinite
leakage renders as ``inf``.

Exit codes: 0 success, 2 parse/validation failure, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .classify import Classification, SourceClass, classify
from .core import Mechanism, SourceSet, make_source_set, mechanism
from .dp_solver import Class3Solver, DpSolution, solve_class1, solve_class2, thresholds
from .errors import NoConvergence, NumericalFailure
from .it_leakage import it_class1, it_minmax
from .mechanisms import eps_dp, is_staircase, is_valid
from .oracle import brute_force_dp

CSV_HEADER = "D,eps_dp,eps_dp_lower,eps_dp_upper,eps_it,k_star"


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def fmt_float(x: float) -> str:
    """17-significant-digit rendering; lossless for binary64 round-trips."""
    if math.isinf(x):
        return "inf"
    return format(float(x), ".17g")


def load_source_set(path) -> SourceSet:
    data = _load_json(path)
    M = _expect_int(data, "M", path)
    vertices = data.get("vertices")
    if not isinstance(vertices, list) or not vertices:
        raise ValueError(f"{path}: field 'vertices' must be a non-empty list")
    for i, v in enumerate(vertices):
        if not isinstance(v, list) or len(v) != M:
            raise ValueError(f"{path}: vertices[{i}] must be a list of length M={M}")
    return make_source_set(vertices)


def load_mechanism(path) -> Mechanism:
    data = _load_json(path)
    M = _expect_int(data, "M", path)
    rows = data.get("rows")
    if not isinstance(rows, list) or len(rows) != M:
        raise ValueError(f"{path}: field 'rows' must be a list of M={M} rows")
    for i, r in enumerate(rows):
        if not isinstance(r, list) or len(r) != M:
            raise ValueError(f"{path}: rows[{i}] must be a list of length M={M}")
    return mechanism(rows)


def mechanism_to_json(Q: Mechanism) -> str:
    rows = [[float(fmt_float(x)) for x in row] for row in Q.rows]
    return json.dumps({"M": Q.M, "rows": rows})


def source_set_to_json(S: SourceSet) -> str:
    verts = [[float(fmt_float(x)) for x in v.probs] for v in S.vertices]
    return json.dumps({"M": S.M, "vertices": verts})


def fixture_path(name: str) -> Path:
    """Absolute path of a bundled fixture, e.g. ``fixture_path('table1')``."""
    fname = name if name.endswith(".json") else f"{name}.json"
    return Path(str(resources.files("hamming_privacy").joinpath("fixtures", fname)))


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    return data


def _expect_int(data, key: str, path) -> int:
    v = data.get(key)
    if not isinstance(v, int) or v < 2:
        raise ValueError(f"{path}: field '{key}' must be an integer >= 2")
    return v


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _describe_classification(cls: Classification) -> str:
    if cls.source_class is SourceClass.CLASS_I:
        return "ClassI"
    if cls.source_class is SourceClass.CLASS_II:
        order = ",".join(str(i + 1) for i in cls.ordering.one_line())
        return f"ClassII ordering=[{order}]"
    folds = ",".join(T.cycle_notation() for T in cls.folding_set)
    cap = "nonempty" if cls.cap_nonempty else "empty"
    return f"ClassIII folding={{{folds}}} cap={cap}"


def _cmd_classify(args) -> int:
    S = load_source_set(args.source)
    print(_describe_classification(classify(S)))
    return 0


def _cmd_thresholds(args) -> int:
    S = load_source_set(args.source)
    cls = classify(S)
    if cls.source_class is SourceClass.CLASS_II and not cls.ordering.is_identity():
        from .classify import fold_array

        S = make_source_set([fold_array(cls.ordering, v.probs) for v in S.vertices])
    thr = thresholds(S)
    for k in range(1, S.M + 1):
        print(f"D^({k})={fmt_float(thr.d(k))}")
    return 0


def _solve_dp(S: SourceSet, cls: Classification, D: float):
    """(exact solution, lower, upper) with exactly one side populated."""
    if cls.source_class is SourceClass.CLASS_I:
        return solve_class1(S.M, D), None, None
    if cls.source_class is SourceClass.CLASS_II:
        return solve_class2(S, D, cls), None, None
    lo, up = Class3Solver(S, cls).bounds(D)
    return None, lo, up


def _cmd_dp_opt(args) -> int:
    S = load_source_set(args.source)
    cls = classify(S)
    exact, lo, up = _solve_dp(S, cls, args.distortion)
    scale = _log_scale(args.log_base)
    if exact is not None:
        print(f"leakage={fmt_float(exact.leakage * scale)}")
        print(f"k_star={exact.chosen_k}")
        dstar = "[]" if exact.dstar is None else "[" + ",".join(fmt_float(x) for x in exact.dstar) + "]"
        print(f"dstar={dstar}")
        if exact.mechanism is not None:
            print(f"mechanism={mechanism_to_json(exact.mechanism)}")
    else:
        print(f"leakage_lower={fmt_float(lo.leakage * scale)}")
        print(f"leakage_upper={fmt_float(up.leakage * scale)}")
        print(f"k_star_upper={up.chosen_k}")
        if lo.cap_empty_fallback:
            print("note=cap empty; lower bound from the sorted-chamber restriction")
        if up.mechanism is not None:
            print(f"mechanism={mechanism_to_json(up.mechanism)}")
    return 0


def _cmd_it_opt(args) -> int:
    S = load_source_set(args.source)
    cls = classify(S)
    scale = _log_scale(args.log_base)
    if cls.source_class is SourceClass.CLASS_I:
        sol = it_class1(S.M, args.distortion)
    else:
        sol = it_minmax(S, args.distortion, args.tol)
    print(f"leakage={fmt_float(sol.leakage * scale)}")
    print(f"saddle_gap={fmt_float(sol.saddle_gap)}")
    print("worst_distribution=[" + ",".join(fmt_float(x) for x in sol.worst_distribution.probs) + "]")
    print(f"mechanism={mechanism_to_json(sol.mechanism)}")
    return 0


def _cmd_verify(args) -> int:
    Q = load_mechanism(args.mechanism)
    S = load_source_set(args.source)
    report = is_valid(Q, S, args.distortion)
    print(f"eps_dp={fmt_float(eps_dp(Q) * _log_scale(args.log_base))}")
    print(f"valid={'true' if report.valid else 'false'}")
    print(f"worst_vertex={report.worst_vertex}")
    print(f"worst_distortion={fmt_float(report.worst_distortion)}")
    print(f"staircase={'true' if is_staircase(Q) else 'false'}")
    return 0


def _cmd_oracle(args) -> int:
    S = load_source_set(args.source)
    value = brute_force_dp(S, args.distortion, args.grid)
    print(f"leakage={fmt_float(value)}")
    return 0


def _cmd_fixtures(args) -> int:
    print(str(resources.files("hamming_privacy").joinpath("fixtures")))
    return 0


def _log_scale(base: str) -> float:
    return 1.0 if base == "e" else 1.0 / math.log(2.0)


def _cmd_curve(args) -> int:
    if not (0.0 < args.dmin < args.dmax <= 1.0):
        raise ValueError(f"need 0 < dmin < dmax <= 1, got dmin={args.dmin} dmax={args.dmax}")
    if args.step <= 0.0:
        raise ValueError(f"step must be positive, got {args.step}")
    S = load_source_set(args.source)
    cls = classify(S)
    scale = _log_scale(args.log_base)
    grid = []
    D = args.dmin
    while D <= args.dmax + 1e-12:
        grid.append(min(D, 1.0))
        D = args.dmin + len(grid) * args.step

    want_dp = args.metric in ("dp", "both")
    want_it = args.metric in ("it", "both")
    solver3 = Class3Solver(S, cls) if cls.source_class is SourceClass.CLASS_III else None

    def cell(x) -> str:
        return "" if x is None else fmt_float(x * scale)

    lines = [CSV_HEADER]
    for D in grid:
        eps_exact = eps_lo = eps_up = eps_it_val = k_star = None
        if want_dp:
            if solver3 is not None:
                lo, up = solver3.bounds(D)
                eps_lo, eps_up = lo.leakage, up.leakage
            elif cls.source_class is SourceClass.CLASS_I:
                sol = solve_class1(S.M, D)
                eps_exact, k_star = sol.leakage, sol.chosen_k
            else:
                sol = solve_class2(S, D, cls)
                eps_exact, k_star = sol.leakage, sol.chosen_k
        if want_it:
            if cls.source_class is SourceClass.CLASS_I:
                eps_it_val = it_class1(S.M, D).leakage
            else:
                eps_it_val = it_minmax(S, D, args.tol).leakage
        lines.append(",".join([
            fmt_float(D),
            cell(eps_exact),
            cell(eps_lo),
            cell(eps_up),
            cell(eps_it_val),
            "" if k_star is None else str(k_star),
        ]))

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hamming-privacy",
        description="Optimal privacy-utility tradeoffs under worst-case Hamming distortion",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="classify a source set (I / II / III)")
    sp.add_argument("source")
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("thresholds", help="print the suppression thresholds D^(1..M)")
    sp.add_argument("source")
    sp.set_defaults(func=_cmd_thresholds)

    sp = sub.add_parser("curve", help="write a leakage-distortion curve as CSV")
    sp.add_argument("source")
    sp.add_argument("--metric", choices=["dp", "it", "both"], default="dp")
    sp.add_argument("--dmin", type=float, default=0.005)
    sp.add_argument("--dmax", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=0.005)
    sp.add_argument("--log-base", choices=["e", "2"], default="e")
    sp.add_argument("--tol", type=float, default=1e-4, help="IT solver tolerance (nats)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_curve)

    sp = sub.add_parser("dp-opt", help="optimal DP leakage and mechanism at one distortion")
    sp.add_argument("source")
    sp.add_argument("--distortion", type=float, required=True)
    sp.add_argument("--log-base", choices=["e", "2"], default="e")
    sp.set_defaults(func=_cmd_dp_opt)

    sp = sub.add_parser("it-opt", help="optimal IT leakage and mechanism at one distortion")
    sp.add_argument("source")
    sp.add_argument("--distortion", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--log-base", choices=["e", "2"], default="e")
    sp.set_defaults(func=_cmd_it_opt)

    sp = sub.add_parser("verify", help="evaluate a mechanism against a source set")
    sp.add_argument("mechanism")
    sp.add_argument("source")
    sp.add_argument("--distortion", type=float, required=True)
    sp.add_argument("--log-base", choices=["e", "2"], default="e")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("oracle", help="brute-force leakage check (M <= 3)")
    sp.add_argument("source")
    sp.add_argument("--grid", type=float, required=True)
    sp.add_argument("--distortion", type=float, required=True)
    sp.set_defaults(func=_cmd_oracle)

    sp = sub.add_parser("fixtures", help="print the bundled fixtures directory")
    sp.set_defaults(func=_cmd_fixtures)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (NoConvergence, NumericalFailure) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
