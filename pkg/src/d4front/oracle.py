"""Ground truth for the classifier: model germs, discriminant parameterizations,
random right-left equivalences and a root-counting oracle for cubics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exprlang
from .criteria import Verdict, classify, delta_phi, sign_identity
from .exprlang import BinOp, Expr, Neg, Num, Pow, Var, parse
from .front import FrontError, FrontGerm, sign_of

# ---------------------------------------------------------------------------
# normal-form catalog

_DELTA = "sqrt(4*u^2+v^2+4)"
_D4_NORMAL = (f"2*u/{_DELTA}", f"v/{_DELTA}", f"-2/{_DELTA}")
_DELTA_DIV = "sqrt(4*u^2+(2+v)^2+4)"


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    germ: FrontGerm
    expected: Verdict
    branches: dict = field(default_factory=dict)
    note: str = ""


def _germ(map_, normal="auto", label=""):
    return FrontGerm.from_strings(map_, normal, label)


def _branch(u: str, v: str) -> tuple[Expr, Expr]:
    return (parse(u), parse(v))


def catalog() -> dict[str, CatalogEntry]:
    """Model germs keyed by name."""
    entries = [
        CatalogEntry(
            "cuspidal_edge",
            _germ(["u", "v^2", "v^3"], label="cuspidal edge (u, v^2, v^3)"),
            Verdict.NotD4,
            {"edge": _branch("t", "0")},
        ),
        CatalogEntry(
            "swallowtail",
            _germ(["u", "3*v^4+u*v^2", "4*v^3+2*u*v"], label="swallowtail (u, 3v^4+uv^2, 4v^3+2uv)"),
            Verdict.NotD4,
        ),
        CatalogEntry(
            "d4_plus",
            _germ(["u*v", "u^2+3*v^2", "u^2*v+v^3"], _D4_NORMAL, "D4+ normal form"),
            Verdict.D4Plus,
            {"gamma+": _branch("sqrt(3)*t", "t"), "gamma-": _branch("-sqrt(3)*t", "t")},
        ),
        CatalogEntry(
            "d4_minus",
            _germ(["u*v", "u^2-3*v^2", "u^2*v-v^3"], _D4_NORMAL, "D4- normal form"),
            Verdict.D4Minus,
        ),
        CatalogEntry(
            "d4_plus_divergent",
            # the normal is w / |w| with w = f_u x f_v = (u^2 - 3v^2)(2u, 2+v, -2)
            _germ(
                ["u*v", "u^2+3*v^2", "u^2*(1+v)+v^2*(3+v)"],
                [f"2*u/{_DELTA_DIV}", f"(2+v)/{_DELTA_DIV}", f"-2/{_DELTA_DIV}"],
                "D4+ germ with cuspidal edges of divergent singular curvature",
            ),
            Verdict.D4Plus,
            {"gamma+": _branch("sqrt(3)*t", "t"), "gamma-": _branch("-sqrt(3)*t", "t")},
        ),
        CatalogEntry(
            "fourdim_d4_plus",
            _germ(["u*v", "u^2+2*t*v+3*v^2", "2*u^2*v+t*v^2+2*v^3", "t"], label="4-dimensional D4+"),
            Verdict.FourDimD4Plus,
        ),
        CatalogEntry(
            "fourdim_d4_minus",
            _germ(["u*v", "u^2+2*t*v-3*v^2", "2*u^2*v+t*v^2-2*v^3", "t"], label="4-dimensional D4-"),
            Verdict.FourDimD4Minus,
        ),
    ]
    return {e.name: e for e in entries}


def divergent_curvature_published(t: float) -> float:
    """Published closed form for the singular curvature along gamma+ of ``d4_plus_divergent``.

    It is det(hat', hat'', N)/|hat'|^3 with the non-unit normal N = (2u, 2+v, -2),
    so it exceeds the unit-normal value by the factor |N(gamma(t))|.
    """
    q = t * t * (25 + 24 * t + 12 * t * t)
    return float(np.sign(t)) * t * t * (2 - 11 * t) / abs(q) ** 1.5


def divergent_normal_length(t: float) -> float:
    """|(2u, 2+v, -2)| along gamma+(t) = (sqrt(3) t, t)."""
    return float(np.sqrt(13 * t * t + 4 * t + 8))


def divergent_curvature(t: float) -> float:
    """Singular curvature along gamma+ of ``d4_plus_divergent`` with the unit normal."""
    return divergent_curvature_published(t) / divergent_normal_length(t)


# ---------------------------------------------------------------------------
# discriminant sets


def discriminant_V0(eps: int, u, v) -> tuple:
    """Discriminant of u^3 + eps u v^2 + x u + y v + z."""
    _check_eps(eps)
    return (-3 * u * u - eps * v * v, -2 * eps * u * v, 2 * u**3 + 2 * eps * u * v * v)


def discriminant_V(eps: int, u, v, t) -> tuple:
    """Discriminant of u^3 + eps u v^2 + u^2 t + x u + y v + z, as (x, y, z, t)."""
    _check_eps(eps)
    return (
        -3 * u * u - eps * v * v - 2 * u * t,
        -2 * eps * u * v,
        2 * u**3 + u * u * t + 2 * eps * u * v * v,
        t,
    )


def _check_eps(eps: int) -> None:
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")


def discriminant_V0_germ(eps: int) -> FrontGerm:
    _check_eps(eps)
    s = "+" if eps > 0 else "-"
    m = "-" if eps > 0 else "+"
    return _germ(
        [f"-3*u^2{m}v^2", f"{'-' if eps > 0 else ''}2*u*v", f"2*u^3{s}2*u*v^2"],
        label=f"discriminant of V0 (eps={eps:+d})",
    )


def discriminant_V_germ(eps: int) -> FrontGerm:
    _check_eps(eps)
    s = "+" if eps > 0 else "-"
    m = "-" if eps > 0 else "+"
    return _germ(
        [f"-3*u^2{m}v^2-2*u*t", f"{'-' if eps > 0 else ''}2*u*v", f"2*u^3+u^2*t{s}2*u*v^2", "t"],
        label=f"discriminant of V (eps={eps:+d})",
    )


# ---------------------------------------------------------------------------
# cubic root counting


def cubic_root_count(a, b, c, d, rtol: float = 1e-6) -> int:
    """Distinct real roots of the binary cubic a u^3 + b u^2 v + c u v^2 + d v^3 on RP^1.

    Equivalently the real roots of a t^3 + b t^2 + c t + d, with a dropped
    degree counted as roots at infinity.
    """
    coeffs = [float(a), float(b), float(c), float(d)]
    if not any(coeffs):
        raise ValueError("all-zero cubic")
    lead = 0
    while coeffs[lead] == 0:
        lead += 1
    at_infinity = 1 if lead > 0 else 0
    rest = coeffs[lead:]
    roots = np.roots(rest) if len(rest) > 1 else np.array([])
    real = sorted(r.real for r in roots if abs(r.imag) <= rtol * (1 + abs(r)))
    distinct = []
    for r in real:
        if not distinct or abs(r - distinct[-1]) > rtol * (1 + abs(r)):
            distinct.append(r)
    return len(distinct) + at_infinity


@dataclass
class DiscriminantSummary:
    trials: int
    nondegenerate: int
    agree: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def discriminant_suite(seed: int = 0, trials: int = 1000, tol: float = 1e-9) -> DiscriminantSummary:
    """Compare the sign of Delta_phi with real-root counts for random cubics."""
    rng = np.random.default_rng(seed)
    nondeg = agree = 0
    failures = []
    for k in range(trials):
        a, b, c, d = rng.uniform(-1, 1, 4)
        delta = delta_phi((6 * a, 2 * b, 2 * c, 6 * d))
        count = cubic_root_count(a, b, c, d)
        if abs(delta) <= tol:
            if count not in (1, 2):
                failures.append((k, (a, b, c, d), delta, count))
            continue
        nondeg += 1
        if (delta < 0) == (count == 3) and (delta > 0) == (count == 1):
            agree += 1
        else:
            failures.append((k, (a, b, c, d), delta, count))
    return DiscriminantSummary(trials, nondeg, agree, failures)


# ---------------------------------------------------------------------------
# random right-left equivalences


@dataclass(frozen=True)
class PolyMap:
    """Polynomial map germ R^m -> R^m fixing 0; components are {exponent: coeff}."""

    components: tuple

    @property
    def dim(self) -> int:
        return len(self.components)

    def linear_part(self) -> np.ndarray:
        m = self.dim
        return np.array(
            [[float(comp.get(tuple(int(k == j) for k in range(m)), 0)) for j in range(m)] for comp in self.components]
        )

    def partial(self, i: int, j: int) -> dict:
        """d(component i)/d(x_j) as a polynomial."""
        out = {}
        for alpha, c in self.components[i].items():
            if alpha[j]:
                beta = list(alpha)
                beta[j] -= 1
                out[tuple(beta)] = c * alpha[j]
        return out

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return np.array([sum(c * np.prod([xi**k for xi, k in zip(x, a)]) for a, c in comp.items()) for comp in self.components])

    @classmethod
    def identity(cls, m: int) -> "PolyMap":
        return cls(tuple({tuple(int(k == i) for k in range(m)): 1} for i in range(m)))


@dataclass(frozen=True)
class DiffeoPair:
    S: PolyMap
    T: PolyMap


def _exponents(m: int, max_degree: int) -> list[tuple]:
    out = []

    def rec(prefix, left, slots):
        if slots == 0:
            if sum(prefix):
                out.append(tuple(prefix))
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k, slots - 1)

    rec([], max_degree, m)
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def random_polymap(rng: np.random.Generator, m: int, degree: int = 3, min_det: float = 0.1, scale: float = 0.5) -> PolyMap:
    exps = _exponents(m, degree)
    while True:
        comps = tuple({a: float(rng.uniform(-scale, scale)) for a in exps} for _ in range(m))
        pm = PolyMap(comps)
        if abs(np.linalg.det(pm.linear_part())) > min_det:
            return pm


def random_pair(rng: np.random.Generator, n: int, degree: int = 3) -> DiffeoPair:
    return DiffeoPair(random_polymap(rng, n, degree), random_polymap(rng, n + 1, degree))


def identity_pair(n: int) -> DiffeoPair:
    return DiffeoPair(PolyMap.identity(n), PolyMap.identity(n + 1))


def poly_expr(poly: dict, inputs: Sequence[Expr]) -> Expr:
    terms = []
    for alpha, c in poly.items():
        if c == 0:
            continue
        factors = [Pow(x, k) if k > 1 else x for x, k in zip(inputs, alpha) if k]
        term = None
        for f in factors:
            term = f if term is None else BinOp("*", term, f)
        coef = Num(Fraction(c))
        if term is None:
            term = coef
        elif c != 1:
            term = BinOp("*", coef, term)
        terms.append(term)
    if not terms:
        return Num(Fraction(0))
    out = terms[0]
    for t in terms[1:]:
        out = BinOp("+", out, t)
    return out


def _det_expr(rows: list[list[Expr]]) -> Expr:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = None
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = BinOp("*", rows[0][j], _det_expr(minor))
        if total is None:
            total = Neg(term) if j % 2 else term
        else:
            total = BinOp("-" if j % 2 else "+", total, term)
    return total


def transform_front(F: FrontGerm, pair: DiffeoPair, corrupt: bool = False) -> FrontGerm:
    """The germ T o F o S with normal (dT_F)^(-T) nu, pulled back by S.

    ``corrupt`` keeps nu o S untransformed (a deliberately wrong normal, used
    as a negative control).
    """
    n = F.n
    if pair.S.dim != n or pair.T.dim != n + 1:
        raise FrontError("diffeomorphism dimensions do not match the germ")
    names = exprlang.VARIABLES[:n]
    s_exprs = {name: poly_expr(comp, [Var(x) for x in names]) for name, comp in zip(names, pair.S.components)}
    f_s = [exprlang.substitute(e, s_exprs) for e in F.map]
    new_map = tuple(poly_expr(comp, f_s) for comp in pair.T.components)
    if F.auto:
        return FrontGerm(new_map, None, F.label)
    nu_s = [exprlang.substitute(e, s_exprs) for e in F.normal]
    if corrupt:
        return FrontGerm(new_map, tuple(nu_s), F.label)
    m = n + 1
    dT = [[poly_expr(pair.T.partial(i, j), f_s) for j in range(m)] for i in range(m)]
    det = _det_expr(dT)
    # transpose of the inverse = cofactor matrix / det
    new_nu = []
    for i in range(m):
        acc = None
        for j in range(m):
            minor = [[dT[r][c] for c in range(m) if c != j] for r in range(m) if r != i]
            cof = _det_expr(minor)
            term = BinOp("*", cof, nu_s[j])
            if acc is None:
                acc = Neg(term) if (i + j) % 2 else term
            else:
                acc = BinOp("-" if (i + j) % 2 else "+", acc, term)
        new_nu.append(BinOp("/", acc, det))
    return FrontGerm(new_map, tuple(new_nu), F.label)


# ---------------------------------------------------------------------------
# invariance suite

INVARIANCE_ENTRIES = ("d4_plus", "d4_minus", "d4_plus_divergent")


@dataclass
class EntrySummary:
    name: str
    expected: str
    trials: int = 0
    verdict_kept: int = 0
    hess_sign_kept: int = 0
    identity_holds: int = 0
    identity_applicable: int = 0
    sff_holds: int = 0
    sff_checked: int = 0
    valid: int = 0


@dataclass
class InvarianceSummary:
    seed: int
    trials: int
    entries: list[EntrySummary]
    counterexamples: list[dict] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def invariance_suite(
    seed: int = 42,
    trials: int = 100,
    entries: Sequence[str] = INVARIANCE_ENTRIES,
    identity: bool = False,
) -> InvarianceSummary:
    """Apply random right-left equivalences to catalog germs and re-run the criteria."""
    cat = catalog()
    children = np.random.SeedSequence(seed).spawn(trials)
    start = time.perf_counter()
    summaries = []
    counter = []
    for name in entries:
        entry = cat[name]
        F = entry.germ
        base = classify(F, validate=False)
        es = EntrySummary(name, entry.expected.value)
        origin = (0.0,) * F.n
        for k, child in enumerate(children):
            rng = np.random.default_rng(child)
            pair = identity_pair(F.n) if identity else random_pair(rng, F.n)
            G = transform_front(F, pair)
            es.trials += 1
            problems = []
            try:
                report = classify(G, origin)
            except FrontError as exc:
                counter.append({"entry": name, "trial": k, "seed": seed, "error": str(exc)})
                continue
            es.valid += 1
            if report.verdict == base.verdict:
                es.verdict_kept += 1
            else:
                problems.append(f"verdict {report.verdict.value} != {base.verdict.value}")
            if base.hess_det is not None:
                if sign_of(report.hess_det) == sign_of(base.hess_det):
                    es.hess_sign_kept += 1
                else:
                    problems.append("det Hess sign changed")
            if F.n == 2 and report.rank == 0:
                ident = sign_identity(G, origin)
                if ident["applicable"]:
                    es.identity_applicable += 1
                    if ident["holds"]:
                        es.identity_holds += 1
                    else:
                        problems.append("sign identity violated")
                if report.verdict in (Verdict.D4Plus, Verdict.D4Minus):
                    es.sff_checked += 1
                    if report.diagnostics.get("second_fundamental_immersion"):
                        es.sff_holds += 1
                    else:
                        problems.append("second fundamental form not an immersion")
            if problems:
                counter.append({"entry": name, "trial": k, "seed": seed, "problems": problems})
        summaries.append(es)
    return InvarianceSummary(seed, trials, summaries, counter, time.perf_counter() - start)


def identity_suite(seed: int = 7, trials: int = 100) -> dict:
    """Sign relation det Hess lambda vs -Delta_phi on rank-0 germs and random images."""
    cat = catalog()
    germs = [cat[name].germ for name in INVARIANCE_ENTRIES] + [discriminant_V0_germ(1), discriminant_V0_germ(-1)]
    checked = failures = skipped = 0
    details = []
    for G in germs:
        res = sign_identity(G)
        checked += 1
        if not res["holds"]:
            failures += 1
            details.append({"germ": G.label, "trial": None, **_plain(res)})
    children = np.random.SeedSequence(seed).spawn(trials)
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        F = cat[INVARIANCE_ENTRIES[k % len(INVARIANCE_ENTRIES)]].germ
        G = transform_front(F, random_pair(rng, 2))
        res = sign_identity(G, (0.0, 0.0))
        if not res["applicable"]:
            skipped += 1
            continue
        checked += 1
        if not res["holds"]:
            failures += 1
            details.append({"germ": F.label, "trial": k, **_plain(res)})
    return {"checked": checked, "failures": failures, "skipped": skipped, "details": details, "ok": failures == 0}


def _plain(d: dict) -> dict:
    return {k: (float(v) if isinstance(v, Fraction) else v) for k, v in d.items()}
