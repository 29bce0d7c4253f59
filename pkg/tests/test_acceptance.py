"""Acceptance criteria, one test each.

Each check returns (passed, detail).  Results are collected in RESULTS and
printed as one PASS/FAIL line per criterion at the end of the pytest run
(see conftest.py), or directly when this file is run as a script.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from d4front.criteria import Verdict, classify
from d4front.oracle import (
    catalog,
    discriminant_suite,
    discriminant_V_germ,
    divergent_curvature,
    divergent_curvature_published,
    identity_suite,
    invariance_suite,
)
from d4front.singular import closed_form_branch, singular_curvature, third_order_det, trace_singular_set

RESULTS: dict[int, tuple[bool, str, str]] = {}

TITLES = {
    1: "D4+ golden value",
    2: "D4- golden value",
    3: "third-order determinant on the divergent germ",
    4: "singular curvature profile and divergence",
    5: "invariance suite",
    6: "sign identity",
    7: "discriminant oracle",
    8: "4-dimensional criteria",
    9: "second fundamental form immersion",
    10: "singular-set topology",
}

_cache: dict = {}


def _catalog():
    if "catalog" not in _cache:
        _cache["catalog"] = catalog()
    return _cache["catalog"]


def _invariance():
    if "invariance" not in _cache:
        _cache["invariance"] = invariance_suite(seed=42, trials=100)
    return _cache["invariance"]


def _best_time(fn, repeats=5):
    fn()
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


# -- checks --------------------------------------------------------------------


def check_1():
    F = _catalog()["d4_plus"].germ
    exact = classify(F, (0, 0))
    flt = classify(F, (0.0, 0.0))
    seconds = _best_time(lambda: classify(F, (0, 0)))
    ok = (
        exact.verdict is Verdict.D4Plus
        and exact.hess_det == -48
        and flt.verdict is Verdict.D4Plus
        and abs(flt.hess_det + 48) <= 1e-9
        and seconds < 0.01
    )
    return ok, f"det Hess = {exact.hess_det} exact, {flt.hess_det!r} float; {seconds * 1e3:.2f} ms"


def check_2():
    r = classify(_catalog()["d4_minus"].germ, (0, 0))
    ok = r.verdict is Verdict.D4Minus and r.hess_det == 48
    return ok, f"verdict {r.verdict.value}, det Hess = {r.hess_det}"


def check_3():
    F = _catalog()["d4_plus_divergent"].germ
    det = third_order_det(F, closed_form_branch(F, ("sqrt(3)*t", "t")))
    want = -24 * math.sqrt(6)
    return abs(det - want) <= 1e-6, f"det = {det:.9f}, expected {want:.9f}"


def check_4():
    F = _catalog()["d4_plus_divergent"].germ
    branch = closed_form_branch(F, ("sqrt(3)*t", "t"))
    ts = np.concatenate([np.linspace(0.01, 0.2, 25), -np.linspace(0.01, 0.2, 25)])
    start = time.perf_counter()
    kappa = np.array([singular_curvature(F, branch, float(t)) for t in ts])
    k_plus = singular_curvature(F, branch, 1e-4)
    k_minus = singular_curvature(F, branch, -1e-4)
    seconds = time.perf_counter() - start
    want = np.array([divergent_curvature_published(float(t)) for t in ts])
    worst = float(np.max(np.abs(kappa - want) / np.abs(want)))
    unit = np.array([divergent_curvature(float(t)) for t in ts])
    worst_unit = float(np.max(np.abs(kappa - unit) / np.abs(unit)))
    ok = worst < 1e-6 and k_plus > 100 and k_minus < -100 and seconds < 1.0
    return ok, (
        f"max rel. error vs published closed form {worst:.3g} "
        f"(vs unit-normal closed form {worst_unit:.1e}); "
        f"kappa(+1e-4) = {k_plus:.4f}, kappa(-1e-4) = {k_minus:.4f}; {seconds:.2f} s"
    )


def check_5():
    s = _invariance()
    kept = sum(e.verdict_kept for e in s.entries)
    total = sum(e.trials for e in s.entries)
    ok = kept == total == 300 and s.seconds < 30
    return ok, f"verdicts kept {kept}/{total} in {s.seconds:.1f} s"


def check_6():
    s = identity_suite(seed=7, trials=100)
    ok = s["failures"] == 0 and s["checked"] >= 103
    return ok, f"checked {s['checked']}, failures {s['failures']}, not applicable {s['skipped']}"


def check_7():
    s = discriminant_suite(seed=0, trials=1000)
    return s.ok and s.agree == s.nondegenerate, f"agree {s.agree}/{s.nondegenerate} non-degenerate of {s.trials}"


def check_8():
    cat = _catalog()
    parts = []
    ok = True
    for name, germ, want in [
        ("fourdim_d4_plus", cat["fourdim_d4_plus"].germ, Verdict.FourDimD4Plus),
        ("fourdim_d4_minus", cat["fourdim_d4_minus"].germ, Verdict.FourDimD4Minus),
        ("discriminant V (+)", discriminant_V_germ(1), Verdict.FourDimD4Plus),
        ("discriminant V (-)", discriminant_V_germ(-1), Verdict.FourDimD4Minus),
    ]:
        r = classify(germ)
        rank = r.diagnostics.get("immersion_rank")
        ok &= germ.auto and r.verdict is want and rank == 3
        parts.append(f"{name}: {r.verdict.value}, rank {rank}")
    return ok, "; ".join(parts)


def check_9():
    s = _invariance()
    parts = []
    ok = True
    for e in s.entries:
        ok &= e.sff_checked == e.trials and e.sff_holds == e.sff_checked
        parts.append(f"{e.name} {e.sff_holds}/{e.sff_checked}")
    return ok, ", ".join(parts)


def check_10():
    cat = _catalog()
    plus = trace_singular_set(cat["d4_plus"].germ, (-0.3, 0.3, -0.3, 0.3), 400)
    minus = trace_singular_set(cat["d4_minus"].germ, (-0.3, 0.3, -0.3, 0.3), 400)
    worst = 0.0
    for b in plus.through((0, 0)):
        d = np.asarray(b.tangent) / np.linalg.norm(b.tangent)
        c = max(abs(d @ np.array([math.sqrt(3), s])) / 2 for s in (1.0, -1.0))
        worst = max(worst, math.degrees(math.acos(min(1.0, c))))
    ok = (
        len(plus) == 4
        and len(plus.through((0, 0))) == 4
        and worst < 1.0
        and len(minus) == 0
        and len(minus.isolated) == 1
        and np.hypot(*minus.isolated[0]) < 1e-9
    )
    return ok, (
        f"D4+: {len(plus)} branches, worst tangent error {worst:.2e} deg; "
        f"D4-: {len(minus)} branches, isolated {minus.isolated}"
    )


CHECKS = {k: globals()[f"check_{k}"] for k in TITLES}


def run_check(k):
    ok, detail = CHECKS[k]()
    RESULTS[k] = (ok, TITLES[k], detail)
    return ok, detail


def summary_lines():
    return [
        f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        for k, (ok, title, detail) in sorted(RESULTS.items())
    ]


# -- tests ----------------------------------------------------------------------

CURVATURE_XFAIL = (
    "the published closed form is det(hat', hat'', N)/|hat'|^3 with the unnormalized "
    "N = (2u, 2+v, -2); with the unit normal the curvature is that value divided by "
    "sqrt(13t^2+4t+8), so kappa(1e-4) = 56.53 and the > 100 threshold is not met"
)


@pytest.mark.parametrize("k", [k for k in TITLES if k != 4])
def test_criterion(k):
    ok, detail = run_check(k)
    assert ok, detail


@pytest.mark.xfail(strict=True, reason=CURVATURE_XFAIL)
def test_criterion_4_published_curvature():
    ok, detail = run_check(4)
    assert ok, detail


def test_criterion_4_with_unit_normal():
    """The same profile against the unit-normal closed form, plus the divergence itself."""
    F = _catalog()["d4_plus_divergent"].germ
    branch = closed_form_branch(F, ("sqrt(3)*t", "t"))
    ts = np.concatenate([np.linspace(0.01, 0.2, 25), -np.linspace(0.01, 0.2, 25)])
    start = time.perf_counter()
    kappa = np.array([singular_curvature(F, branch, float(t)) for t in ts])
    near = [singular_curvature(F, branch, s * 10.0**-k) for k in range(2, 7) for s in (1, -1)]
    assert time.perf_counter() - start < 1.0
    unit = np.array([divergent_curvature(float(t)) for t in ts])
    assert np.max(np.abs(kappa - unit) / np.abs(unit)) < 1e-6
    plus, minus = near[0::2], near[1::2]
    assert all(k > 0 for k in plus) and all(k < 0 for k in minus)
    assert np.all(np.diff(plus) > 0) and np.all(np.diff(minus) < 0)
    assert plus[-1] > 5000 and minus[-1] < -5000


if __name__ == "__main__":
    for k in TITLES:
        run_check(k)
    print("\n".join(summary_lines()))
