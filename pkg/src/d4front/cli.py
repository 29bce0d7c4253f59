"""d4front command line: classify, trace, curvature, mesh, verify, catalog."""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exprlang, oracle
from .criteria import Verdict, classify
from .formats import (
    FormatError,
    csv_text,
    dump_json,
    front_to_dict,
    grid_faces,
    jsonable,
    load_front,
    obj_text,
    report_text,
    report_to_dict,
)
from .front import FrontError
from .jets import JetError
from .singular import (
    SingularError,
    closed_form_branch,
    curvature_profile,
    null_field,
    trace_singular_set,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INDETERMINATE = 2


class UsageError(ValueError):
    pass


def _numbers(text: str, count: int | None, name: str) -> list[Fraction]:
    try:
        values = [Fraction(x.strip()) for x in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise UsageError(f"{name}: expected {count} numbers, got {len(values)}")
    return values


def _floats(text: str, count: int, name: str) -> list[float]:
    return [float(x) for x in _numbers(text, count, name)]


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    germ, _ = load_front(args.front_file)
    if args.point is None:
        point = (0,) * germ.n
    else:
        point = tuple(_numbers(args.point, germ.n, "--point"))
        point = tuple(int(x) if x.denominator == 1 else x for x in point)
    if args.float:
        point = tuple(float(x) for x in point)
    report = classify(germ, point, tol=args.tol)
    if args.json:
        _emit(dump_json(report_to_dict(report, germ)), args.out)
    else:
        _emit(report_text(report, germ), args.out)
    return EXIT_INDETERMINATE if report.verdict is Verdict.Indeterminate else EXIT_OK


def _trace(germ, args):
    rect = _floats(args.rect, 4, "--rect")
    return trace_singular_set(germ, rect, args.grid, args.tol)


def cmd_trace(args) -> int:
    germ, _ = load_front(args.front_file)
    if germ.n != 2:
        raise UsageError("trace needs a dim-2 front")
    sset = _trace(germ, args)
    rows = []
    for b in sset:
        try:
            b = null_field(germ, b)
            eta = b.eta
        except SingularError as exc:
            print(f"note: branch {b.id}: no null field ({exc})", file=sys.stderr)
            eta = np.full_like(b.points, np.nan)
        for k in range(len(b)):
            rows.append((b.id, float(b.t[k]), float(b.points[k, 0]), float(b.points[k, 1]),
                         float(b.residual[k]), float(eta[k, 0]), float(eta[k, 1])))
    _emit(csv_text(["branch_id", "t", "u", "v", "lambda_residual", "eta_u", "eta_v"], rows), args.out)
    print(f"{len(sset)} branches", file=sys.stderr)
    for p in sset.isolated:
        print(f"note: isolated singular point at ({p[0]!r}, {p[1]!r})", file=sys.stderr)
    return EXIT_OK


def cmd_curvature(args) -> int:
    germ, named = load_front(args.front_file)
    if germ.n != 2:
        raise UsageError("curvature needs a dim-2 front")
    if args.branch in named:
        branch = closed_form_branch(germ, named[args.branch])
    else:
        try:
            index = int(args.branch)
        except ValueError:
            raise UsageError(f"unknown branch {args.branch!r}; named branches: {sorted(named)}") from None
        sset = _trace(germ, args)
        matches = [b for b in sset if b.id == index]
        if not matches:
            raise UsageError(f"no traced branch with id {index} ({len(sset)} branches)")
        branch = matches[0]
    a, b = _floats(args.trange, 2, "--trange")
    ts = list(np.linspace(a, b, args.samples))
    if a < 0 < b and 0.0 not in ts:
        ts.append(0.0)
    ts.sort()
    prof = curvature_profile(germ, branch, ts)
    rows = [(float(t), float(k), note) for t, k, note in zip(prof.t, prof.kappa, prof.notes)]
    _emit(csv_text(["t", "kappa_s", "note"], rows), args.out)
    return EXIT_OK


def cmd_mesh(args) -> int:
    germ, _ = load_front(args.front_file)
    if germ.n != 2:
        raise UsageError("mesh needs a dim-2 front")
    umin, umax, vmin, vmax = _floats(args.rect, 4, "--rect")
    n = args.grid
    if n < 2:
        raise UsageError("--grid must be at least 2")
    us, vs = np.linspace(umin, umax, n), np.linspace(vmin, vmax, n)
    U, V = np.meshgrid(us, vs, indexing="ij")
    verts = _image(germ, U.ravel(), V.ravel())
    lines = []
    if not args.no_singular:
        sset = trace_singular_set(germ, (umin, umax, vmin, vmax), args.singular_grid)
        for b in sset:
            P = b.points
            if b.start is not None:
                P = np.vstack([np.asarray(b.start)[None, :], P])
            lines.append(_image(germ, P[:, 0], P[:, 1]))
    _emit(obj_text(verts, grid_faces(n, args.quads), lines, germ.label or "front"), args.out)
    return EXIT_OK


def _image(germ, u, v) -> np.ndarray:
    vals = [np.broadcast_to(exprlang.eval_scalar(e, (u, v), exact=False), u.shape) for e in germ.map]
    return np.column_stack(vals)


def cmd_verify(args) -> int:
    suite = args.suite
    if suite == "invariance":
        seed = 42 if args.seed is None else args.seed
        trials = 100 if args.trials is None else args.trials
        s = oracle.invariance_suite(seed, trials)
        print(f"invariance suite: seed={seed} trials={trials} ({s.seconds:.1f} s)")
        for e in s.entries:
            print(f"  {e.name}: verdict kept {e.verdict_kept}/{e.trials}, "
                  f"sign identity {e.identity_holds}/{e.identity_applicable}, "
                  f"second fundamental form immersion {e.sff_holds}/{e.sff_checked}")
        for c in s.counterexamples[:10]:
            print(f"  counterexample: {c}")
        ok = s.ok
    elif suite == "discriminant":
        seed = 0 if args.seed is None else args.seed
        trials = 1000 if args.trials is None else args.trials
        s = oracle.discriminant_suite(seed, trials)
        print(f"discriminant suite: seed={seed} trials={trials} nondegenerate={s.nondegenerate} agree={s.agree}")
        for f in s.failures[:10]:
            print(f"  counterexample: {f}")
        ok = s.ok
    else:
        seed = 7 if args.seed is None else args.seed
        trials = 100 if args.trials is None else args.trials
        s = oracle.identity_suite(seed, trials)
        print(f"identity suite: seed={seed} trials={trials} checked={s['checked']} "
              f"failures={s['failures']} skipped={s['skipped']}")
        for d in s["details"][:10]:
            print(f"  counterexample: {jsonable(d)}")
        ok = s["ok"]
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_ERROR


def cmd_catalog(args) -> int:
    cat = oracle.catalog()
    if args.list:
        for name, entry in cat.items():
            print(f"{name}: {entry.germ.label} -> {entry.expected.value}")
        return EXIT_OK
    names = args.names or list(cat)
    unknown = [n for n in names if n not in cat]
    if unknown:
        raise UsageError(f"unknown catalog entries: {unknown}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in names:
        entry = cat[name]
        path = out / f"{name}.json"
        path.write_text(dump_json(front_to_dict(entry.germ, entry.branches)), encoding="utf-8", newline="\n")
        print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="d4front", description="D4 singularities of wave fronts.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="run the D4 criteria at a point")
    c.add_argument("front_file")
    c.add_argument("--point", help="comma-separated coordinates (default: origin)")
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--float", action="store_true", help="evaluate in floating point instead of exactly")
    fmt = c.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--text", action="store_true", help="plain text report (default)")
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    def trace_options(q, grid=400):
        q.add_argument("--rect", default="-0.3,0.3,-0.3,0.3", help="umin,umax,vmin,vmax")
        q.add_argument("--grid", type=int, default=grid)
        q.add_argument("--tol", type=float, default=1e-9, help="bound on |lambda| at traced points")

    t = sub.add_parser("trace", help="export the singular set as CSV")
    t.add_argument("front_file")
    trace_options(t)
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    k = sub.add_parser("curvature", help="singular curvature along a branch as CSV")
    k.add_argument("front_file")
    k.add_argument("--branch", required=True, help="branch name from the file, or a traced branch id")
    k.add_argument("--trange", default="0.01,0.2")
    k.add_argument("--samples", type=int, default=50)
    trace_options(k)
    k.add_argument("--out")
    k.set_defaults(func=cmd_curvature)

    m = sub.add_parser("mesh", help="OBJ mesh of the image with the singular set as polylines")
    m.add_argument("front_file")
    m.add_argument("--rect", default="-0.3,0.3,-0.3,0.3")
    m.add_argument("--grid", type=int, default=61)
    m.add_argument("--quads", action="store_true", help="quad faces instead of triangles")
    m.add_argument("--singular-grid", type=int, default=200)
    m.add_argument("--no-singular", action="store_true")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mesh)

    v = sub.add_parser("verify", help="run an oracle suite")
    v.add_argument("--suite", choices=("invariance", "discriminant", "identity"), required=True)
    v.add_argument("--seed", type=int)
    v.add_argument("--trials", type=int)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("catalog", help="write the model germs as FrontFiles")
    g.add_argument("names", nargs="*")
    g.add_argument("--out", default=".")
    g.add_argument("--list", action="store_true")
    g.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, UsageError, FrontError, SingularError, JetError, exprlang.ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
