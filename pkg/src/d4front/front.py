"""Front germs: the map f, its unit normal, and the signed volume density."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exprlang, jets
from .exprlang import Expr
from .jets import Jet, JetError

AUTO = "auto"
RANK_TOL = 1e-8
RANK_ATOL = 1e-12
FRONT_TOL = 1e-10


class FrontError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FrontGerm:
    """A map-germ f: R^n -> R^(n+1) with either explicit normal components or AUTO."""

    map: tuple[Expr, ...]
    normal: tuple[Expr, ...] | None = None
    label: str = ""

    def __post_init__(self):
        n = len(self.map) - 1
        if n not in (2, 3):
            raise FrontError(f"map needs 3 or 4 components, got {len(self.map)}")
        if self.normal is not None and len(self.normal) != n + 1:
            raise FrontError(f"normal needs {n + 1} components, got {len(self.normal)}")
        allowed = set(exprlang.VARIABLES[:n])
        for e in self.map + (self.normal or ()):
            extra = exprlang.variables(e) - allowed
            if extra:
                raise FrontError(f"variables {sorted(extra)} not allowed in a {n}-dimensional germ")

    @property
    def n(self) -> int:
        return len(self.map) - 1

    @property
    def auto(self) -> bool:
        return self.normal is None

    @classmethod
    def from_strings(cls, map: Sequence[str], normal: Sequence[str] | str = AUTO, label: str = "") -> "FrontGerm":
        pool: dict = {}
        nu = None if isinstance(normal, str) and normal == AUTO else tuple(exprlang.parse(s, pool) for s in normal)
        return cls(tuple(exprlang.parse(s, pool) for s in map), nu, label)

    def with_normal(self, normal: Sequence[Expr] | None) -> "FrontGerm":
        return FrontGerm(self.map, None if normal is None else tuple(normal), self.label)

    def flipped(self) -> "FrontGerm":
        """Same germ with the opposite normal (explicit normals only)."""
        if self.normal is None:
            raise FrontError("cannot flip an AUTO normal")
        return self.with_normal(tuple(exprlang.Neg(e) for e in self.normal))


@dataclass
class DensityJet:
    lam: Jet
    base_point: tuple


@dataclass
class KernelFrame:
    xi: tuple
    eta: tuple
    tau: tuple | None = None


@dataclass
class LocalJets:
    """Jets of f (one order above ``order``), nu and lambda at one base point."""

    f: tuple[Jet, ...]
    nu: tuple[Jet, ...]
    lam: Jet
    order: int

    @property
    def df(self) -> list[tuple[Jet, ...]]:
        n = self.f[0].nvars
        return [tuple(jets.diff(c, i) for c in self.f) for i in range(n)]


@dataclass
class FrontValidation:
    ok: bool
    worst_unit_norm: float
    worst_orthogonality: float
    min_lift_rank: int
    failures: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# helpers


def _point(point, n: int) -> tuple:
    if point is None:
        return (0,) * n
    point = tuple(point)
    if len(point) != n:
        raise FrontError(f"point needs {n} coordinates, got {len(point)}")
    return point


def _exactness(point) -> bool:
    return all(jets.is_exact(x) for x in point)


def map_jets(F: FrontGerm, point, order: int, exact: bool | None = None) -> tuple[Jet, ...]:
    point = _point(point, F.n)
    return exprlang.eval_jets(F.map, point, order, exact=exact)


def _normalize(N: Sequence[Jet]) -> tuple[Jet, ...]:
    norm = jets.jet_sqrt(jets.dot(N, N))
    inv = jets.jet_recip(norm)
    return tuple(c * inv for c in N)


# Normal recovery works in coordinates y with x = base + ZOOM * y, so that
# tolerances compare coefficients of different degrees on a common footing.
ZOOM = Fraction(1, 10)


def _zoom_radius(a: Jet):
    return ZOOM if a.is_exact() else float(ZOOM)


def _rescale(a: Jet, r) -> Jet:
    """Jet of y -> a(base + r y) given the jet of a at base."""
    deg = a.basis.degree
    return Jet(a.nvars, a.order, [c * r ** deg[i] if not jets.is_zero(c) else c for i, c in enumerate(a.coeffs)],
               a.base_point)


def _zoom(f: Sequence[Jet]) -> tuple[Jet, ...]:
    return tuple(_rescale(c, _zoom_radius(c)) for c in f)


def _tangent_cross(f: Sequence[Jet]) -> tuple[Jet, ...]:
    n = f[0].nvars
    return jets.cross(*[tuple(jets.diff(c, i) for c in f) for i in range(n)])


def sign_of(x, tol: float = 0.0) -> int:
    if jets.is_exact(x):
        return (x > 0) - (x < 0)
    if abs(x) <= tol:
        return 0
    return 1 if x > 0 else -1


# ---------------------------------------------------------------------------
# normal recovery and the signed volume density


def recover_normal(F: FrontGerm, base_point=None, order: int = jets.DEFAULT_ORDER, exact: bool | None = None, rtol: float = 1e-9):
    """Recover (nu, lambda) from f alone by factoring w = cross(f_u, ...) = lambda * nu.

    The sign is fixed so that the first non-negligible component of nu at the
    base point is positive.  Returns ``(nu, lam, f)`` with nu and lam of order
    ``order`` and f of order ``order + 1``.
    """
    point = _point(base_point, F.n)
    low = None
    # |w|^2 vanishes to order 4 at D4 points; smaller probes would judge
    # the vanishing order from round-off alone
    probe_order = max(order + 1, 5)
    while low is None and probe_order <= order + 9:
        probe = _tangent_cross(_zoom(map_jets(F, point, probe_order, exact)))
        s = jets.dot(probe, probe)
        scale = max(abs(float(c)) for c in s.coeffs)
        low = s.lowest_degree(0.0 if s.is_exact() else rtol * scale)
        probe_order += 2
    if low is None:
        raise FrontError("tangent cross product vanishes to all computed orders; germ is not a front here")
    if low % 2:
        raise FrontError("|w|^2 vanishes to odd order; germ is not frontal at this point")
    d = low // 2
    f = map_jets(F, point, order + 1 + 2 * d, exact)
    w = _tangent_cross(_zoom(f))
    try:
        mu, _ = jets.jet_sqrt_factor(jets.dot(w, w), rtol)
        nu = tuple(jets.jet_divide_exact(c, mu, rtol) for c in w)
    except JetError as exc:
        raise FrontError(f"normal recovery failed: {exc}") from exc
    r = _zoom_radius(mu)
    nu = tuple(_rescale(c.truncate(order), 1 / r) for c in nu)
    lam = _rescale(mu.truncate(order), 1 / r) * (1 / r) ** F.n
    for c in nu:
        v = c.value
        if abs(float(v)) > 1e-9:
            if v < 0:
                nu = tuple(-x for x in nu)
                lam = -lam
            break
    return nu, lam, tuple(c.truncate(order + 1) for c in f)


def local_jets(F: FrontGerm, point=None, order: int = jets.DEFAULT_ORDER, exact: bool | None = None) -> LocalJets:
    point = _point(point, F.n)
    if F.auto:
        nu, lam, f = recover_normal(F, point, order, exact)
        return LocalJets(f, nu, lam, order)
    f = map_jets(F, point, order + 1, exact)
    raw = exprlang.eval_jets(F.normal, point, order, exact=exact)
    try:
        nu = _normalize(raw)
    except JetError as exc:
        raise FrontError(f"normal vanishes at {point}") from exc
    lam = jets.dot(_tangent_cross(f), nu)
    return LocalJets(f, nu, lam, order)


def lambda_jet(F: FrontGerm, base_point=None, order: int = jets.DEFAULT_ORDER, exact: bool | None = None) -> DensityJet:
    """Jet of lambda = det(f_u1, ..., f_un, nu) at the base point."""
    point = _point(base_point, F.n)
    return DensityJet(local_jets(F, point, order, exact).lam, point)


def support_function_jet(F: FrontGerm, base_point=None, order: int = jets.DEFAULT_ORDER, exact: bool | None = None) -> Jet:
    """Jet of phi = <f - f(base), nu>."""
    loc = local_jets(F, base_point, order, exact)
    shifted = tuple(c.truncate(order) - c.value for c in loc.f)
    return jets.dot(shifted, loc.nu)


# ---------------------------------------------------------------------------
# rank and kernel


def jacobian(F: FrontGerm, point) -> np.ndarray:
    f = map_jets(F, point, 1)
    n = F.n
    return np.array([[float(jets.derivative(c, tuple(int(k == i) for k in range(n)))) for i in range(n)] for c in f])


def numerical_rank(matrix, tol: float = RANK_TOL, atol: float = RANK_ATOL) -> int:
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] <= atol:
        return 0
    return int(np.sum(s > max(tol * s[0], atol)))


def rank_df(F: FrontGerm, point=None, tol: float = RANK_TOL) -> int:
    """Numerical rank of df at ``point`` (singular values relative to the largest)."""
    return numerical_rank(jacobian(F, _point(point, F.n)), tol)


def _tidy(vec) -> tuple:
    # keep coordinate vectors exact so exact-mode jets stay exact
    out = []
    for x in vec:
        x = float(x)
        if x == 0.0:
            x = 0.0
        out.append(int(x) if x.is_integer() else x)
    return tuple(out)


def kernel_frame(F: FrontGerm, point=None, tol: float = RANK_TOL) -> KernelFrame:
    point = _point(point, F.n)
    J = jacobian(F, point)
    r = numerical_rank(J, tol)
    if F.n == 2:
        if r != 0:
            raise FrontError(f"kernel frame needs rank 0 for a surface germ, got rank {r}")
        return KernelFrame((1, 0), (0, 1), None)
    if r != 1:
        raise FrontError(f"kernel frame needs rank 1 for a 3-dimensional germ, got rank {r}")
    _, _, vt = np.linalg.svd(J)
    return KernelFrame(_tidy(vt[1]), _tidy(vt[2]), _tidy(vt[0]))


# ---------------------------------------------------------------------------
# validation


def validate_front(
    F: FrontGerm,
    sample_points: Sequence[Sequence],
    tol: float = FRONT_TOL,
    check_unit_norm: bool = True,
) -> FrontValidation:
    """Check unit norm, orthogonality and the Legendrian immersion condition.

    ``check_unit_norm`` looks at the normal as supplied; everything else uses
    the normalized one.  Explicit normals are evaluated at all samples at once.
    """
    n = F.n
    points = [_point(p, n) for p in sample_points]
    failures: list[str] = []
    if F.auto:
        records = []
        for p in points:
            try:
                nu, _, f = recover_normal(F, p, 1)
            except (FrontError, JetError, exprlang.ExprError) as exc:
                failures.append(f"{p}: {exc}")
                continue
            records.append((f, nu, nu))
    else:
        base = tuple(np.array([float(p[i]) for p in points]) for i in range(n))
        try:
            f = exprlang.eval_jets(F.map, base, 1)
            raw = exprlang.eval_jets(F.normal, base, 1)
            nu = _normalize(raw)
        except (JetError, exprlang.ExprError) as exc:
            failures.append(f"normal or map undefined on the samples: {exc}")
            records = []
        else:
            records = [(f, raw if check_unit_norm else nu, nu)]
    worst_norm = worst_orth = 0.0
    min_rank = n
    e = [tuple(int(k == i) for k in range(n)) for i in range(n)]
    for f, supplied, nu in records:
        norm2 = np.asarray(_as_array(jets.dot(supplied, supplied).value), dtype=float)
        worst_norm = max(worst_norm, float(np.max(np.abs(norm2 - 1.0))))
        nu0 = [np.asarray(_as_array(c.value), dtype=float) for c in nu]
        cols = []
        for i in range(n):
            fi = [np.asarray(_as_array(jets.derivative(c, e[i])), dtype=float) for c in f]
            worst_orth = max(worst_orth, float(np.max(np.abs(sum(a * b for a, b in zip(fi, nu0))))))
            dnu = [np.asarray(_as_array(jets.derivative(c, e[i])), dtype=float) for c in nu]
            cols.append(np.broadcast_arrays(*fi, *dnu))
        # cols[i][row] -> array over samples
        count = np.broadcast(*cols[0]).size
        for k in range(count):
            lift = np.array([[np.ravel(cols[i][r])[k] for i in range(n)] for r in range(2 * n + 2)])
            min_rank = min(min_rank, numerical_rank(lift))
    if worst_norm > tol:
        failures.append(f"unit norm residual {worst_norm:.3g}")
    if worst_orth > tol:
        failures.append(f"orthogonality residual {worst_orth:.3g}")
    if min_rank < n:
        failures.append(f"Legendrian lift rank {min_rank} < {n}")
    return FrontValidation(not failures, worst_norm, worst_orth, min_rank, failures)


def _as_array(x):
    return float(x) if not isinstance(x, np.ndarray) else x


def sample_grid(center, radius: float, count: int = 5) -> list[tuple]:
    """count**n points on a cube around ``center``."""
    axes = [np.linspace(float(c) - radius, float(c) + radius, count) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [tuple(float(m.flat[i]) for m in mesh) for i in range(mesh[0].size)]
