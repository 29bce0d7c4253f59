import math

import numpy as np
import pytest

from d4front.criteria import classify
from d4front.front import FrontGerm
from d4front.oracle import (
    catalog,
    divergent_curvature,
    divergent_curvature_published,
    divergent_normal_length,
)
from d4front.singular import (
    CurvaturePole,
    NotCuspidalEdge,
    SingularError,
    closed_form_branch,
    curvature_profile,
    d4_divergence_check,
    is_cuspidal_edge,
    lambda_values,
    null_field,
    singular_curvature,
    third_order_det,
    through_curve,
    trace_singular_set,
)

CAT = catalog()
DIV = CAT["d4_plus_divergent"].germ
GAMMA_PLUS = ("sqrt(3)*t", "t")
SQRT3 = math.sqrt(3)


@pytest.fixture(scope="module")
def d4_plus_set():
    return trace_singular_set(CAT["d4_plus"].germ, (-0.3, 0.3, -0.3, 0.3), 400)


@pytest.fixture(scope="module")
def divergent_set():
    return trace_singular_set(DIV)


def _angle_to_lines(direction):
    """Smallest angle in degrees between a direction and the lines u = +-sqrt(3) v."""
    d = np.asarray(direction, dtype=float)
    d /= np.linalg.norm(d)
    best = 180.0
    for line in ((SQRT3, 1.0), (-SQRT3, 1.0)):
        c = abs(d @ np.array(line)) / 2.0
        best = min(best, math.degrees(math.acos(min(1.0, c))))
    return best


# -- tracing ----------------------------------------------------------------


def test_d4_plus_has_four_branches(d4_plus_set):
    assert len(d4_plus_set) == 4
    assert len(d4_plus_set.through((0, 0))) == 4
    assert d4_plus_set.isolated == []
    for b in d4_plus_set:
        assert _angle_to_lines(b.tangent) < 1.0
        assert _angle_to_lines(b.hessian_tangent) < 1e-6
        assert np.max(np.abs(b.residual)) <= 1e-9
    # one branch in each half of each line
    signs = {(np.sign(b.tangent[0]), np.sign(b.tangent[1])) for b in d4_plus_set}
    assert len(signs) == 4


def test_d4_minus_is_an_isolated_point():
    s = trace_singular_set(CAT["d4_minus"].germ)
    assert len(s) == 0
    assert s.isolated == [(0.0, 0.0)]


def test_d4_minus_on_a_fine_grid():
    s = trace_singular_set(CAT["d4_minus"].germ, (-0.3, 0.3, -0.3, 0.3), 601)
    assert len(s) == 0 and len(s.isolated) == 1


def test_cuspidal_edge_single_branch():
    s = trace_singular_set(CAT["cuspidal_edge"].germ)
    assert len(s) == 1
    assert np.max(np.abs(s[0].points[:, 1])) < 1e-9
    assert s[0].points[:, 0].min() == pytest.approx(-0.3)
    assert s[0].points[:, 0].max() == pytest.approx(0.3)


def test_divergent_branches_lie_on_the_lines(divergent_set):
    assert len(divergent_set) == 4
    for b in divergent_set:
        u, v = b.points[:, 0], b.points[:, 1]
        assert np.max(np.abs(u * u - 3 * v * v)) < 1e-8


def test_plane_has_empty_singular_set():
    s = trace_singular_set(FrontGerm.from_strings(["u", "v", "0"], ["0", "0", "1"]))
    assert len(s) == 0 and s.isolated == []


def test_lambda_changes_sign_between_sectors():
    F = CAT["d4_plus"].germ
    angles = np.radians([0, 60, 90, 120, 180, 240, 270, 300])
    r = 0.1
    vals = lambda_values(F, r * np.cos(angles), r * np.sin(angles))
    signs = np.sign(vals)
    assert set(signs) == {-1.0, 1.0}
    # sectors around u = 0 and around v = 0 carry opposite signs
    assert signs[0] == signs[4] and signs[2] == signs[6] and signs[0] != signs[2]


def test_through_curve_joins_opposite_rays(d4_plus_set):
    curves = through_curve(d4_plus_set, (0, 0))
    assert len(curves) == 2
    for c in curves:
        k = c.special[0]
        assert c.t[k] == 0.0 and tuple(c.points[k]) == (0.0, 0.0)
        assert np.all(np.diff(c.t) > 0)


# -- null vector field --------------------------------------------------------


def test_null_field_on_cuspidal_edge():
    F = CAT["cuspidal_edge"].germ
    b = null_field(F, closed_form_branch(F, ("t", "0")))
    assert np.allclose(b.eta, [[0.0, 1.0]] * len(b))
    r = null_field(F, closed_form_branch(F, ("t", "0")).reversed())
    assert np.allclose(r.eta, [[0.0, -1.0]] * len(r))


def test_null_field_along_divergent_branch():
    b = null_field(DIV, closed_form_branch(DIV, GAMMA_PLUS))
    k0 = b.special[0]
    assert np.all(np.isnan(b.eta[k0]))
    rest = np.delete(b.eta, k0, axis=0)
    assert np.allclose(np.linalg.norm(rest, axis=1), 1.0)
    # continuous on each side of the D4 point
    for part in (b.eta[:k0], b.eta[k0 + 1:]):
        assert np.min(np.sum(part[1:] * part[:-1], axis=1)) > 0.99


def test_null_field_rejects_rank_two_samples():
    F = CAT["d4_plus"].germ
    with pytest.raises(SingularError):
        null_field(F, closed_form_branch(F, ("t", "0.2")))


def test_is_cuspidal_edge():
    assert is_cuspidal_edge(CAT["cuspidal_edge"].germ, (0.37, 0.0))
    assert is_cuspidal_edge(CAT["cuspidal_edge"].germ, (-1.5, 0.0))
    assert not is_cuspidal_edge(CAT["d4_plus"].germ, (0.0, 0.0))
    assert not is_cuspidal_edge(CAT["d4_minus"].germ, (0.0, 0.0))
    assert is_cuspidal_edge(DIV, (0.1 * SQRT3, 0.1))


# -- singular curvature ----------------------------------------------------------


def test_published_form_uses_an_unnormalized_normal():
    assert divergent_curvature_published(0.1) == pytest.approx(0.009 / 0.2752**1.5, rel=1e-12)
    for t in (-0.2, -0.03, 0.05, 0.2):
        ratio = divergent_curvature_published(t) / divergent_curvature(t)
        assert ratio == pytest.approx(divergent_normal_length(t), rel=1e-12)


def test_divergent_curvature_matches_closed_form():
    branch = closed_form_branch(DIV, GAMMA_PLUS)
    ts = np.concatenate([np.linspace(0.01, 0.2, 25), -np.linspace(0.01, 0.2, 25)])
    prof = curvature_profile(DIV, branch, ts)
    want = np.array([divergent_curvature(t) for t in ts])
    assert np.all(np.abs(prof.kappa - want) / np.abs(want) < 1e-6)


def test_curvature_sign_follows_t_near_the_point():
    branch = closed_form_branch(DIV, GAMMA_PLUS)
    for t in (1e-3, 1e-2, 0.1):
        assert singular_curvature(DIV, branch, t) > 0
        assert singular_curvature(DIV, branch, -t) < 0


def test_curvature_on_traced_branches(divergent_set):
    curves = through_curve(divergent_set, (0, 0))
    assert len(curves) == 2
    for c in curves:
        d = float(np.dot(c.tangent, (SQRT3 / 2, 0.5)))
        if abs(d) < 0.9:
            continue  # the gamma- line
        # the traced parameter is arclength s = 2|t| along gamma+
        for s in (-0.3, -0.1, -0.02, 0.02, 0.1, 0.3):
            want = divergent_curvature(math.copysign(1, d) * s / 2)
            assert singular_curvature(DIV, c, s) == pytest.approx(want, rel=1e-6)


def test_curvature_pole_at_the_d4_point():
    branch = closed_form_branch(DIV, GAMMA_PLUS)
    with pytest.raises(CurvaturePole):
        singular_curvature(DIV, branch, 0.0)
    prof = curvature_profile(DIV, branch, [-0.1, 0.0, 0.1])
    assert prof.notes == ["", "pole", ""]
    assert math.isnan(prof.kappa[1])


def test_curvature_off_the_singular_set():
    F = CAT["d4_plus"].germ
    with pytest.raises(NotCuspidalEdge):
        singular_curvature(F, closed_form_branch(F, ("t", "0.2")), 0.1)


def test_curvature_of_straight_cuspidal_edge_vanishes():
    F = CAT["cuspidal_edge"].germ
    b = closed_form_branch(F, ("t", "0"))
    for t in (-0.2, 0.0, 0.3):
        assert singular_curvature(F, b, t) == 0.0


@pytest.mark.parametrize("c", [1, -2, 0.5])
def test_circular_cuspidal_edge(c):
    F = FrontGerm.from_strings(["(1+v^2)*cos(u)", "(1+v^2)*sin(u)", f"({c})*v^3"])
    b = closed_form_branch(F, ("t", "0"))
    # independent evaluation: hat gamma is the unit circle, nu = (0, 0, 1)
    # along it, and lambda = det(f_u, f_v, nu) has negative v-derivative
    h = 1e-5

    def lam(u, v):
        fu = np.array([-(1 + v * v) * math.sin(u), (1 + v * v) * math.cos(u), 0.0])
        fv = np.array([2 * v * math.cos(u), 2 * v * math.sin(u), 3 * c * v * v])
        n = np.cross(fu, np.array([2 * math.cos(u), 2 * math.sin(u), 3 * c * v]))
        n = n / np.linalg.norm(n)
        n = n if n[2] > 0 else -n
        return np.linalg.det(np.column_stack([fu, fv, n]))

    for t in (0.0, 0.7, 2.0):
        dlam = (lam(t, h) - lam(t, -h)) / (2 * h)
        hp = np.array([-math.sin(t), math.cos(t), 0.0])
        hpp = np.array([-math.cos(t), -math.sin(t), 0.0])
        want = math.copysign(1, dlam) * np.linalg.det(np.column_stack([hp, hpp, [0, 0, 1]]))
        assert singular_curvature(F, b, t) == pytest.approx(want, rel=1e-9)


def test_curvature_ignores_parameterization():
    base = closed_form_branch(DIV, GAMMA_PLUS)
    double = closed_form_branch(DIV, ("2*sqrt(3)*t", "2*t"))
    rev = base.reversed()
    for t in (0.03, 0.1, -0.15):
        k = singular_curvature(DIV, base, t)
        assert singular_curvature(DIV, double, t / 2) == pytest.approx(k, rel=1e-10)
        assert singular_curvature(DIV, rev, -t) == pytest.approx(k, rel=1e-10)


def test_curvature_ignores_normal_sign_and_isometries():
    base = closed_form_branch(DIV, GAMMA_PLUS)
    flipped = DIV.flipped()
    # rotation about the z axis by a right angle, then a reflection in z
    m, n = DIV.map, DIV.normal
    from d4front.exprlang import Neg

    rotated = FrontGerm((Neg(m[1]), m[0], Neg(m[2])), (Neg(n[1]), n[0], Neg(n[2])))
    for t in (0.05, -0.12):
        k = singular_curvature(DIV, base, t)
        assert singular_curvature(flipped, base, t) == pytest.approx(k, rel=1e-12)
        assert singular_curvature(rotated, base, t) == pytest.approx(k, rel=1e-12)


def test_curvature_with_auto_normal():
    auto = FrontGerm(DIV.map, None)
    branch = closed_form_branch(auto, GAMMA_PLUS)
    for t in (0.05, -0.1):
        assert singular_curvature(auto, branch, t) == pytest.approx(divergent_curvature(t), rel=1e-9)


# -- divergence ---------------------------------------------------------------


def test_third_order_determinant():
    det = third_order_det(DIV, closed_form_branch(DIV, GAMMA_PLUS))
    assert abs(det - (-24 * math.sqrt(6))) < 1e-6


def test_divergence_check():
    rep = d4_divergence_check(DIV, (0, 0), closed_form_branch(DIV, GAMMA_PLUS))
    assert rep.asserted and rep.diverges
    assert rep.third_order_det == pytest.approx(-24 * math.sqrt(6), abs=1e-6)
    assert all(k > 0 for k in rep.kappa_plus)
    assert all(k < 0 for k in rep.kappa_minus)


def test_divergence_check_on_traced_branch(divergent_set):
    for c in through_curve(divergent_set, (0, 0)):
        rep = d4_divergence_check(DIV, (0, 0), c)
        assert rep.asserted and rep.diverges
        # arclength is twice t, so the determinant scales by 2^-5
        assert abs(rep.third_order_det) == pytest.approx(24 * math.sqrt(6) / 32, rel=1e-4)


def test_unit_normal_curvature_near_the_point():
    branch = closed_form_branch(DIV, GAMMA_PLUS)
    k_plus = singular_curvature(DIV, branch, 1e-4)
    k_minus = singular_curvature(DIV, branch, -1e-4)
    assert k_plus == pytest.approx(divergent_curvature(1e-4), rel=1e-6)
    assert k_minus == pytest.approx(divergent_curvature(-1e-4), rel=1e-6)
    assert k_plus > 50 and k_minus < -50


def test_normal_form_branch_has_no_third_order_term():
    F = CAT["d4_plus"].germ
    rep = d4_divergence_check(F, (0, 0), closed_form_branch(F, GAMMA_PLUS))
    assert abs(rep.third_order_det) < 1e-9
    assert not rep.asserted and not rep.diverges


def test_divergence_needs_a_d4_plus_point():
    F = CAT["d4_minus"].germ
    assert classify(F).verdict.value == "D4Minus"
    with pytest.raises(SingularError):
        d4_divergence_check(F, (0, 0), closed_form_branch(F, GAMMA_PLUS))
    with pytest.raises(SingularError):
        d4_divergence_check(DIV, (0, 0), closed_form_branch(DIV, ("sqrt(3)*t", "t+0.1")))
