"""D4+/- criteria for fronts in R^3 and R^4, and the cubic invariant of the support function."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets
from .front import (
    FrontError,
    FrontGerm,
    LocalJets,
    RANK_TOL,
    kernel_frame,
    local_jets,
    numerical_rank,
    rank_df,
    sample_grid,
    sign_of,
    validate_front,
)
from .jets import Jet

DEFAULT_TOL = 1e-9
VALIDATION_RADIUS = 1e-2


class Verdict(str, enum.Enum):
    D4Plus = "D4Plus"
    D4Minus = "D4Minus"
    FourDimD4Plus = "FourDimD4Plus"
    FourDimD4Minus = "FourDimD4Minus"
    NotD4 = "NotD4"
    Indeterminate = "Indeterminate"

    @property
    def definite(self) -> bool:
        return self is not Verdict.Indeterminate


LABELS = {
    Verdict.D4Plus: "D4+",
    Verdict.D4Minus: "D4-",
    Verdict.FourDimD4Plus: "4D-D4+",
    Verdict.FourDimD4Minus: "4D-D4-",
    Verdict.NotD4: "NotD4",
    Verdict.Indeterminate: "Indeterminate",
}


class CubicType(str, enum.Enum):
    D4PlusType = "D4PlusType"  # right equivalent to u^3 + u v^2
    D4MinusType = "D4MinusType"  # right equivalent to u^3 - u v^2
    Degenerate = "Degenerate"


@dataclass
class ClassificationReport:
    n: int
    point: tuple
    rank: int
    verdict: Verdict
    reason: str = ""
    hess: list | None = None
    hess_det: object = None
    delta_phi: object = None
    immersion_ok: bool | None = None
    tol: float = DEFAULT_TOL
    rank_tol: float = RANK_TOL
    diagnostics: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        text = LABELS[self.verdict]
        if self.reason and self.verdict in (Verdict.NotD4, Verdict.Indeterminate):
            text += f" ({self.reason})"
        return text


# ---------------------------------------------------------------------------
# cubic invariant


def delta_phi(phi3: Sequence) -> object:
    """The quartic invariant of (phi_uuu, phi_uuv, phi_uvv, phi_vvv).

    Positive for cubics equivalent to u^3 + u v^2 (one real root line),
    negative for u^3 - u v^2 (three).
    """
    a, b, c, d = phi3
    return (
        a * a * d * d
        - 6 * a * b * c * d
        - 3 * b * b * c * c
        + 4 * b**3 * d
        + 4 * a * c**3
    )


def third_derivatives(phi: Jet) -> tuple:
    return tuple(jets.derivative(phi, alpha) for alpha in ((3, 0), (2, 1), (1, 2), (0, 3)))


def _below(x, tol: float) -> bool:
    if jets.is_exact(x):
        return x == 0
    return abs(x) <= tol


def classify_cubic(phi: Jet, tol: float = DEFAULT_TOL) -> CubicType:
    """Right-equivalence class of a function germ with vanishing 2-jet."""
    if phi.nvars != 2 or phi.order < 3:
        raise ValueError("classify_cubic needs a 2-variable jet of order >= 3")
    for i in range(phi.basis.starts[3]):
        if not _below(phi.coeffs[i], tol):
            raise ValueError("2-jet of phi does not vanish")
    delta = delta_phi(third_derivatives(phi))
    if _below(delta, tol):
        return CubicType.Degenerate
    return CubicType.D4PlusType if delta > 0 else CubicType.D4MinusType


# ---------------------------------------------------------------------------
# helpers


def _e(i: int, n: int) -> tuple:
    return tuple(int(k == i) for k in range(n))


def _directional(a: Jet, vec) -> Jet:
    out = None
    for i, c in enumerate(vec):
        if c == 0:
            continue
        term = jets.diff(a, i) * c
        out = term if out is None else out + term
    if out is None:
        return jets.constant(0, a.nvars, a.order - 1, a.base_point)
    return out


def _vec_directional(vs: Sequence[Jet], vec) -> tuple[Jet, ...]:
    return tuple(_directional(c, vec) for c in vs)


def _gradient_matrix(gs: Sequence[Jet]) -> np.ndarray:
    n = gs[0].nvars
    return np.array([[float(jets.derivative(g, _e(i, n))) for i in range(n)] for g in gs])


def _hessian(lam: Jet, frame: Sequence) -> list:
    first = [_directional(lam, x) for x in frame]
    return [[_directional(first[i], frame[j]).value for j in range(len(frame))] for i in range(len(frame))]


def _det2(h) -> object:
    return h[0][0] * h[1][1] - h[0][1] * h[1][0]


def _support(loc: LocalJets) -> Jet:
    k = loc.order
    shifted = tuple(c.truncate(k) - c.value for c in loc.f)
    return jets.dot(shifted, loc.nu)


def _check_front(F: FrontGerm, point, validate: bool) -> None:
    if not validate:
        return
    samples = sample_grid(point, VALIDATION_RADIUS, 3)
    report = validate_front(F, samples, check_unit_norm=False)
    if not report.ok:
        raise FrontError("front validation failed: " + "; ".join(report.failures))


def _point(F: FrontGerm, point) -> tuple:
    if point is None:
        return (0,) * F.n
    point = tuple(point)
    if len(point) != F.n:
        raise FrontError(f"point needs {F.n} coordinates")
    return point


def _verdict_from_det(det, tol: float, plus: Verdict, minus: Verdict) -> tuple[Verdict, str]:
    if _below(det, tol):
        return Verdict.Indeterminate, "det Hess within tolerance of 0"
    return (plus, "") if det < 0 else (minus, "")


# ---------------------------------------------------------------------------
# surfaces in R^3


def second_fundamental_immersion(F: FrontGerm, point=None, loc: LocalJets | None = None) -> bool:
    """Whether (h11, h12, h22), h_ij = <f_ij, nu>, is an immersion at ``point``."""
    if F.n != 2:
        raise FrontError("second fundamental form check is for surface germs")
    point = _point(F, point)
    r = rank_df(F, point)
    if r != 0:
        raise FrontError(f"second fundamental form check needs rank df = 0, got {r}")
    if loc is None:
        loc = local_jets(F, point)
    df = loc.df
    h = []
    for i, j in ((0, 0), (0, 1), (1, 1)):
        fij = tuple(jets.diff(c, j) for c in df[i])
        h.append(jets.dot(fij, loc.nu))
    return numerical_rank(_gradient_matrix(h)) == 2


def classify_d4_surface(
    F: FrontGerm,
    point=None,
    tol: float = DEFAULT_TOL,
    validate: bool = True,
    order: int = jets.DEFAULT_ORDER,
) -> ClassificationReport:
    """Criterion for D4+/- of a front germ R^2 -> R^3: rank df = 0 and the sign of det Hess lambda."""
    if F.n != 2:
        raise FrontError("classify_d4_surface needs a germ R^2 -> R^3")
    point = _point(F, point)
    _check_front(F, point, validate)
    r = rank_df(F, point)
    if r != 0:
        return ClassificationReport(2, point, r, Verdict.NotD4, f"rank={r}", tol=tol)
    loc = local_jets(F, point, order)
    lam = loc.lam
    hess = _hessian(lam, ((1, 0), (0, 1)))
    det = _det2(hess)
    phi = _support(loc)
    delta = delta_phi(third_derivatives(phi))
    verdict, reason = _verdict_from_det(det, tol, Verdict.D4Plus, Verdict.D4Minus)
    diagnostics = {
        "lambda_value": lam.value,
        "lambda_gradient": [jets.derivative(lam, (1, 0)), jets.derivative(lam, (0, 1))],
        "phi_third_derivatives": list(third_derivatives(phi)),
        "second_fundamental_immersion": second_fundamental_immersion(F, point, loc),
        "sign_identity": sign_of(det, tol) == -sign_of(delta, tol),
    }
    return ClassificationReport(2, point, 0, verdict, reason, hess, det, delta, None, tol, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# hypersurfaces in R^4


def immersion_jacobian(loc: LocalJets, xi, eta) -> np.ndarray:
    """Jacobian of (<f_xi, nu_xi>, <f_xi, nu_eta>, <f_eta, nu_eta>)."""
    f = tuple(c.truncate(loc.order) for c in loc.f)
    f_xi, f_eta = _vec_directional(f, xi), _vec_directional(f, eta)
    nu_xi, nu_eta = _vec_directional(loc.nu, xi), _vec_directional(loc.nu, eta)
    g = (jets.dot(f_xi, nu_xi), jets.dot(f_xi, nu_eta), jets.dot(f_eta, nu_eta))
    return _gradient_matrix(g)


def classify_d4_space(
    F: FrontGerm,
    point=None,
    tol: float = DEFAULT_TOL,
    validate: bool = True,
    order: int = jets.DEFAULT_ORDER,
    frame=None,
) -> ClassificationReport:
    """Criterion for 4-dimensional D4+/- of a front germ R^3 -> R^4.

    ``frame`` optionally overrides the kernel basis (xi, eta); the verdict does
    not depend on that choice.
    """
    if F.n != 3:
        raise FrontError("classify_d4_space needs a germ R^3 -> R^4")
    point = _point(F, point)
    _check_front(F, point, validate)
    r = rank_df(F, point)
    if r != 1:
        return ClassificationReport(3, point, r, Verdict.NotD4, f"rank={r}", tol=tol)
    if frame is None:
        kf = kernel_frame(F, point)
        xi, eta = kf.xi, kf.eta
    else:
        xi, eta = frame
    loc = local_jets(F, point, order)
    hess = _hessian(loc.lam, (xi, eta))
    asym = hess[0][1] - hess[1][0]
    if not _below(asym, tol):
        raise FrontError(f"kernel Hessian is not symmetric (difference {asym})")
    det = _det2(hess)
    J = immersion_jacobian(loc, xi, eta)
    jrank = numerical_rank(J)
    immersion_ok = jrank == 3
    diagnostics = {
        "kernel_xi": list(xi),
        "kernel_eta": list(eta),
        "immersion_rank": jrank,
        "immersion_det": float(np.linalg.det(J)),
    }
    if not immersion_ok:
        return ClassificationReport(
            3, point, 1, Verdict.NotD4, f"lift immersion condition fails: rank={jrank}",
            hess, det, None, False, tol, diagnostics=diagnostics,
        )
    verdict, reason = _verdict_from_det(det, tol, Verdict.FourDimD4Plus, Verdict.FourDimD4Minus)
    return ClassificationReport(3, point, 1, verdict, reason, hess, det, None, True, tol, diagnostics=diagnostics)


def classify(F: FrontGerm, point=None, tol: float = DEFAULT_TOL, validate: bool = True) -> ClassificationReport:
    """Dispatch on the source dimension."""
    if F.n == 2:
        return classify_d4_surface(F, point, tol, validate)
    return classify_d4_space(F, point, tol, validate)


def sign_identity(F: FrontGerm, point=None, tol: float = DEFAULT_TOL) -> dict:
    """Compare sign(det Hess lambda) with -sign(Delta_phi) at a rank-0 point.

    ``applicable`` is False when nu, nu_u, nu_v are dependent at the point,
    where the identity is not claimed.
    """
    point = _point(F, point)
    loc = local_jets(F, point)
    det = _det2(_hessian(loc.lam, ((1, 0), (0, 1))))
    delta = delta_phi(third_derivatives(_support(loc)))
    frame = np.array(
        [[float(c.value) for c in loc.nu]]
        + [[float(jets.derivative(c, _e(i, 2))) for c in loc.nu] for i in range(2)]
    )
    applicable = numerical_rank(frame) == 3
    return {
        "hess_det": det,
        "delta_phi": delta,
        "applicable": applicable,
        "holds": sign_of(det, tol) == -sign_of(delta, tol) and sign_of(det, tol) != 0,
    }
