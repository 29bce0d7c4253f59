"""Truncated multivariate Taylor series ("jets").

A :class:`Jet` holds the Taylor coefficients of a function of 1 to 3 variables
at a base point, truncated at total degree ``order``.  Coefficients are stored
densely in graded order (degree first, then descending lexicographic), so the
coefficients of a lower-order truncation are always a prefix.

Coefficients may be :class:`fractions.Fraction` (exact mode), ``float``, or
numpy arrays (one jet evaluated at many base points at once).  Mixing exact
and float values degrades to float, which is how irrational constants such as
``sqrt(8)`` propagate.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

__all__ = [
    "Jet",
    "JetError",
    "constant",
    "variable",
    "jet_add",
    "jet_mul",
    "jet_recip",
    "jet_sqrt",
    "jet_sqrt_factor",
    "jet_exp",
    "jet_sin",
    "jet_cos",
    "cross",
    "dot",
    "derivative",
    "diff",
    "compose",
    "exact_sqrt",
    "is_exact",
    "is_zero",
]

DEFAULT_ORDER = 4


class JetError(ValueError):
    """Raised for inconsistent operands or undefined series operations."""


# ---------------------------------------------------------------------------
# basis bookkeeping


def _monomials_of_degree(nvars: int, d: int) -> list[tuple[int, ...]]:
    out = []
    for combo in combinations_with_replacement(range(nvars), d):
        alpha = [0] * nvars
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    out.sort(reverse=True)
    return out


class _Basis:
    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.monomials: list[tuple[int, ...]] = []
        self.starts: list[int] = []
        for d in range(order + 1):
            self.starts.append(len(self.monomials))
            self.monomials.extend(_monomials_of_degree(nvars, d))
        self.starts.append(len(self.monomials))
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.degree = [sum(m) for m in self.monomials]
        self.size = len(self.monomials)

    @property
    def partners(self) -> list[list[tuple[int, int]]]:
        # built lazily: only needed by multiplication
        try:
            return self._partners
        except AttributeError:
            pass
        parts: list[list[tuple[int, int]]] = []
        for i, a in enumerate(self.monomials):
            row = []
            room = self.order - self.degree[i]
            for j in range(self.starts[room + 1]):
                b = self.monomials[j]
                row.append((j, self.index[tuple(x + y for x, y in zip(a, b))]))
            parts.append(row)
        self._partners = parts
        return parts

    def slice(self, d: int) -> range:
        return range(self.starts[d], self.starts[d + 1])


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> _Basis:
    if not 1 <= nvars <= 3:
        raise JetError(f"jets support 1 to 3 variables, got {nvars}")
    if order < 0:
        raise JetError(f"negative truncation order {order}")
    return _Basis(nvars, order)


# ---------------------------------------------------------------------------
# scalar helpers


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def is_zero(x) -> bool:
    """True only for a scalar that is exactly zero (arrays are never skipped)."""
    if isinstance(x, np.ndarray):
        return False
    return x == 0


def exact_sqrt(x):
    """Square root that stays rational when ``x`` is a rational perfect square."""
    if isinstance(x, np.ndarray):
        return np.sqrt(x)
    if is_exact(x):
        x = Fraction(x)
        if x < 0:
            raise JetError(f"square root of negative value {x}")
        n, d = x.numerator, x.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return math.sqrt(x)
    if x < 0:
        raise JetError(f"square root of negative value {x}")
    return math.sqrt(x)


def _as_float(x):
    if isinstance(x, np.ndarray):
        return x.astype(float)
    return float(x)


def _magnitude(x) -> float:
    if isinstance(x, np.ndarray):
        return float(np.max(np.abs(x))) if x.size else 0.0
    return abs(float(x))


# ---------------------------------------------------------------------------
# the jet type


class Jet:
    """Truncated Taylor polynomial of a function at ``base_point``."""

    __slots__ = ("nvars", "order", "coeffs", "base_point")

    def __init__(self, nvars: int, order: int, coeffs: Sequence, base_point: Sequence | None = None):
        b = basis(nvars, order)
        coeffs = list(coeffs)
        if len(coeffs) > b.size:
            raise JetError(f"{len(coeffs)} coefficients exceed order {order}")
        coeffs.extend([0] * (b.size - len(coeffs)))
        self.nvars = nvars
        self.order = order
        self.coeffs = coeffs
        if base_point is None:
            base_point = (0,) * nvars
        if len(base_point) != nvars:
            raise JetError("base point dimension does not match nvars")
        self.base_point = tuple(base_point)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dict(cls, nvars: int, order: int, terms: dict, base_point=None) -> "Jet":
        b = basis(nvars, order)
        coeffs = [0] * b.size
        for alpha, c in terms.items():
            if sum(alpha) <= order:
                coeffs[b.index[tuple(alpha)]] = c
        return cls(nvars, order, coeffs, base_point)

    def _like(self, coeffs, order=None) -> "Jet":
        return Jet(self.nvars, self.order if order is None else order, coeffs, self.base_point)

    # -- inspection -----------------------------------------------------------

    @property
    def basis(self) -> _Basis:
        return basis(self.nvars, self.order)

    def coeff(self, alpha) -> object:
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise JetError(f"multi-index {alpha} above truncation order {self.order}")
        return self.coeffs[self.basis.index[alpha]]

    @property
    def value(self):
        return self.coeffs[0]

    def terms(self) -> dict:
        """Nonzero coefficients keyed by multi-index."""
        return {m: c for m, c in zip(self.basis.monomials, self.coeffs) if not is_zero(c)}

    def homogeneous(self, d: int) -> dict:
        b = self.basis
        return {b.monomials[i]: self.coeffs[i] for i in b.slice(d) if not is_zero(self.coeffs[i])}

    def lowest_degree(self, tol: float = 0.0) -> int | None:
        """Smallest degree with a coefficient above ``tol`` (None for the zero jet)."""
        b = self.basis
        for i, c in enumerate(self.coeffs):
            if _magnitude(c) > tol:
                return b.degree[i]
        return None

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetError(f"cannot raise truncation order {self.order} to {order}")
        n = basis(self.nvars, order).size
        return self._like(self.coeffs[:n], order)

    def to_float(self) -> "Jet":
        return self._like([_as_float(c) for c in self.coeffs])

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)

    def __call__(self, *point):
        """Evaluate the Taylor polynomial at ``point`` (absolute coordinates)."""
        if len(point) != self.nvars:
            raise JetError("point dimension does not match nvars")
        h = [p - q for p, q in zip(point, self.base_point)]
        total = 0
        for alpha, c in zip(self.basis.monomials, self.coeffs):
            if is_zero(c):
                continue
            term = c
            for hi, k in zip(h, alpha):
                if k:
                    term = term * hi**k
            total = total + term
        return total

    def __repr__(self) -> str:
        parts = []
        for alpha, c in self.terms().items():
            mono = "*".join(f"{'uvt'[i]}^{k}" if k > 1 else "uvt"[i] for i, k in enumerate(alpha) if k)
            parts.append(f"{c}{'*' + mono if mono else ''}")
        return f"Jet(order={self.order}, at={self.base_point}: {' + '.join(parts) or '0'})"

    # -- compatibility --------------------------------------------------------

    def _check(self, other: "Jet") -> int:
        if self.nvars != other.nvars:
            raise JetError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
        if not _same_point(self.base_point, other.base_point):
            raise JetError("base point mismatch")
        return min(self.order, other.order)

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, Fraction, np.ndarray, np.floating)):
            return constant(other, self.nvars, self.order, self.base_point)
        return NotImplemented

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return jet_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return self._like([-c for c in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return jet_add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        if isinstance(other, (int, float, Fraction, np.ndarray, np.floating)):
            if isinstance(other, Fraction) and not self.is_exact():
                other = float(other)
            return self._like([c * other for c in self.coeffs])
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, jet_recip(other))
        if isinstance(other, (int, float, Fraction, np.ndarray, np.floating)):
            if is_exact(other):
                other = Fraction(other) if self.is_exact() else float(other)
            return self._like([c / other for c in self.coeffs])
        return NotImplemented

    def __rtruediv__(self, other):
        return jet_recip(self) * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise JetError("jets support non-negative integer powers only")
        result = constant(1, self.nvars, self.order, self.base_point)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result


def _same_point(p, q) -> bool:
    if p is q:
        return True
    for a, b in zip(p, q):
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            if not np.array_equal(np.asarray(a), np.asarray(b)):
                return False
        elif a != b and not math.isclose(float(a), float(b), rel_tol=1e-14, abs_tol=1e-14):
            return False
    return True


def constant(c, nvars: int, order: int = DEFAULT_ORDER, base_point=None) -> Jet:
    return Jet(nvars, order, [c], base_point)


def variable(i: int, nvars: int, order: int = DEFAULT_ORDER, base_point=None) -> Jet:
    """Jet of the i-th coordinate function at ``base_point``."""
    if base_point is None:
        base_point = (0,) * nvars
    b = basis(nvars, order)
    coeffs = [0] * b.size
    coeffs[0] = base_point[i]
    if order >= 1:
        e = [0] * nvars
        e[i] = 1
        coeffs[b.index[tuple(e)]] = 1
    return Jet(nvars, order, coeffs, base_point)


# ---------------------------------------------------------------------------
# core operations


def jet_add(a: Jet, b: Jet) -> Jet:
    order = a._check(b)
    n = basis(a.nvars, order).size
    return Jet(a.nvars, order, [x + y for x, y in zip(a.coeffs[:n], b.coeffs[:n])], a.base_point)


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Truncated Cauchy product."""
    order = a._check(b)
    bs = basis(a.nvars, order)
    ac, bc = a.coeffs, b.coeffs
    out = [0] * bs.size
    if isinstance(ac[0], np.ndarray) or isinstance(bc[0], np.ndarray):
        for i, row in enumerate(bs.partners):
            ai = ac[i]
            for j, k in row:
                out[k] = out[k] + ai * bc[j]
    else:
        nz_b = [bj != 0 for bj in bc[: bs.size]]
        for i, row in enumerate(bs.partners):
            ai = ac[i]
            if ai == 0:
                continue
            for j, k in row:
                if nz_b[j]:
                    out[k] += ai * bc[j]
    return Jet(a.nvars, order, out, a.base_point)


def _series(a: Jet, coefficients) -> Jet:
    """Sum of coefficients[k] * h**k where h = a - a(base)."""
    h = a._like([0] + a.coeffs[1:])
    total = constant(coefficients[0], a.nvars, a.order, a.base_point)
    power = None
    for k in range(1, a.order + 1):
        power = h if power is None else power * h
        ck = coefficients[k]
        if not is_zero(ck):
            total = total + power * ck
    return total


def jet_recip(a: Jet) -> Jet:
    a0 = a.value
    if isinstance(a0, np.ndarray):
        if np.any(a0 == 0):
            raise JetError("reciprocal of a jet with zero constant term")
    elif a0 == 0:
        raise JetError("reciprocal of a jet with zero constant term")
    inv = Fraction(1) / a0 if is_exact(a0) else 1.0 / a0
    # 1/(a0 + h) = inv * sum (-h*inv)^k
    coefficients = [inv]
    for _ in range(a.order):
        coefficients.append(-coefficients[-1] * inv)
    return _series(a, coefficients)


def jet_sqrt(a: Jet) -> Jet:
    a0 = a.value
    if isinstance(a0, np.ndarray):
        if np.any(a0 <= 0):
            raise JetError("square root of a jet with non-positive constant term")
    elif a0 <= 0:
        raise JetError("square root of a jet with non-positive constant term")
    s0 = exact_sqrt(a0)
    inv = Fraction(1) / a0 if is_exact(a0) else 1.0 / a0
    # sqrt(a0 + h) = s0 * sum binom(1/2, k) (h/a0)^k
    coefficients = [s0]
    binom = Fraction(1)
    for k in range(1, a.order + 1):
        binom = binom * (Fraction(1, 2) - (k - 1)) / k
        coefficients.append(s0 * (binom if is_exact(a0) else float(binom)) * inv**k)
    return _series(a, coefficients)


def jet_exp(a: Jet) -> Jet:
    a0 = a.value
    if is_exact(a0) and a0 == 0:
        e = Fraction(1)
    else:
        e = np.exp(a0) if isinstance(a0, np.ndarray) else math.exp(a0)
    coefficients = [e]
    for k in range(1, a.order + 1):
        coefficients.append(coefficients[-1] / k)
    return _series(a, coefficients)


def jet_sin(a: Jet) -> Jet:
    return _trig(a, shift=0)


def jet_cos(a: Jet) -> Jet:
    return _trig(a, shift=1)


def _trig(a: Jet, shift: int) -> Jet:
    a0 = a.value
    if is_exact(a0) and a0 == 0:
        s, c = Fraction(0), Fraction(1)
    elif isinstance(a0, np.ndarray):
        s, c = np.sin(a0), np.cos(a0)
    else:
        s, c = math.sin(a0), math.cos(a0)
    # derivatives of sin: sin, cos, -sin, -cos, ...
    cycle = [s, c, -s, -c]
    coefficients = []
    fact = 1
    for k in range(a.order + 1):
        if k:
            fact *= k
        v = cycle[(k + shift) % 4]
        coefficients.append(v / fact if not is_exact(v) else Fraction(v) / fact)
    return _series(a, coefficients)


def diff(a: Jet, i: int) -> Jet:
    """Partial derivative with respect to variable ``i``; drops one order."""
    if a.order == 0:
        raise JetError("cannot differentiate an order-0 jet")
    src = a.basis
    dst = basis(a.nvars, a.order - 1)
    out = [0] * dst.size
    for k, alpha in enumerate(dst.monomials):
        beta = list(alpha)
        beta[i] += 1
        c = a.coeffs[src.index[tuple(beta)]]
        if not is_zero(c):
            out[k] = c * beta[i]
    return Jet(a.nvars, a.order - 1, out, a.base_point)


def derivative(a: Jet, alpha) -> object:
    """Value of the partial derivative d^alpha a at the base point."""
    alpha = tuple(alpha)
    if len(alpha) != a.nvars:
        raise JetError("multi-index length does not match nvars")
    if sum(alpha) > a.order:
        raise JetError(f"derivative of order {sum(alpha)} needs a jet of order >= {sum(alpha)}")
    scale = 1
    for k in alpha:
        scale *= math.factorial(k)
    return a.coeff(alpha) * scale


def compose(a: Jet, inner: Sequence[Jet]) -> Jet:
    """Jet of ``a(g(s))`` where ``inner`` is the jet of g at s0 and g(s0) = a.base_point."""
    if len(inner) != a.nvars:
        raise JetError("composition needs one inner jet per variable")
    first = inner[0]
    order = min(min(g.order for g in inner), a.order)
    for g, p in zip(inner, a.base_point):
        if g.nvars != first.nvars or not _same_point(g.base_point, first.base_point):
            raise JetError("inner jets must share nvars and base point")
        if not _same_point((g.value,), (p,)):
            raise JetError("inner jets must map onto the outer base point")
    hs = [g.truncate(order)._like([0] + g.truncate(order).coeffs[1:]) for g in inner]
    # powers of each increment, reused across monomials
    powers: list[list[Jet]] = []
    for h in hs:
        row = [constant(1, first.nvars, order, first.base_point)]
        for _ in range(order):
            row.append(row[-1] * h)
        powers.append(row)
    total = constant(0, first.nvars, order, first.base_point)
    for alpha, c in zip(a.basis.monomials, a.coeffs):
        if is_zero(c) or sum(alpha) > order:
            continue
        term = None
        for i, k in enumerate(alpha):
            if k:
                term = powers[i][k] if term is None else term * powers[i][k]
        total = total + (c if term is None else term * c)
    return total


# ---------------------------------------------------------------------------
# vectors


def dot(x: Sequence[Jet], y: Sequence[Jet]) -> Jet:
    if len(x) != len(y):
        raise JetError("vector length mismatch")
    total = x[0] * y[0]
    for a, b in zip(x[1:], y[1:]):
        total = total + a * b
    return total


def _det(rows: list[list]) -> object:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def det(columns: Sequence[Sequence]) -> object:
    """Determinant of the matrix whose columns are ``columns`` (jets or scalars)."""
    n = len(columns)
    rows = [[columns[j][i] for j in range(n)] for i in range(n)]
    return _det(rows)


def cross(*vectors: Sequence) -> tuple:
    """Generalized cross product of n vectors in dimension n+1.

    Normalized so that ``dot(cross(a1..an), x) == det(a1, ..., an, x)``.
    """
    n = len(vectors)
    if n not in (1, 2, 3):
        raise JetError("cross product needs 1 to 3 vectors")
    if any(len(v) != n + 1 for v in vectors):
        raise JetError(f"cross product of {n} vectors needs dimension {n + 1}")
    out = []
    for i in range(n + 1):
        # cofactor of entry (i, last column)
        rows = [[vectors[j][r] for j in range(n)] for r in range(n + 1) if r != i]
        m = _det(rows)
        out.append(m if (i + n) % 2 == 0 else -m)
    return tuple(out)


# ---------------------------------------------------------------------------
# square-root factorization


def _mono_div(a: tuple, b: tuple) -> tuple | None:
    q = tuple(x - y for x, y in zip(a, b))
    return q if min(q) >= 0 else None


def _poly_clean(p: dict, tol: float) -> dict:
    return {m: c for m, c in p.items() if _magnitude(c) > tol}


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = out.get(m, 0) + c1 * c2
    return out


def _poly_sub(p: dict, q: dict) -> dict:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0) - c
    return out


def _poly_divide(p: dict, q: dict, tol: float) -> dict:
    """Exact division of homogeneous polynomials; raises when a remainder is left."""
    p = _poly_clean(p, tol)
    lead_q = max(q)
    cq = q[lead_q]
    quotient: dict = {}
    steps = 0
    while p:
        lead_p = max(p)
        m = _mono_div(lead_p, lead_q)
        if m is None:
            raise JetError("series is not divisible: nonzero remainder")
        c = p[lead_p] / cq
        quotient[m] = quotient.get(m, 0) + c
        p = _poly_clean(_poly_sub(p, _poly_mul({m: c}, q)), tol)
        p.pop(lead_p, None)
        steps += 1
        if steps > 10_000:
            raise JetError("division did not terminate")
    return quotient


def _poly_sqrt(p: dict, tol: float) -> dict:
    """Homogeneous polynomial square root by leading-term elimination."""
    p = _poly_clean(p, tol)
    if not p:
        raise JetError("cannot take the square root of a zero polynomial")
    lead = max(p)
    if any(k % 2 for k in lead):
        raise JetError("lowest-order part is not a perfect square")
    c = p[lead]
    if c < 0:
        raise JetError("lowest-order part is negative, not a square")
    root = {tuple(k // 2 for k in lead): exact_sqrt(c)}
    lead_root = max(root)
    two_lead = 2 * root[lead_root]
    for _ in range(10_000):
        rem = _poly_clean(_poly_sub(p, _poly_mul(root, root)), tol)
        if not rem:
            return root
        top = max(rem)
        m = _mono_div(top, lead_root)
        if m is None or m >= lead_root:
            raise JetError("lowest-order part is not a perfect square")
        root[m] = root.get(m, 0) + rem[top] / two_lead
    raise JetError("square root did not terminate")


def jet_sqrt_factor(s: Jet, rtol: float = 1e-9) -> tuple[Jet, bool]:
    """Find mu with mu**2 == s when s vanishes to even order at the base point.

    The returned jet has order ``s.order - d`` where ``2d`` is the vanishing
    order of ``s``; higher coefficients are undetermined by the data.  The
    root is unique up to a global sign, which the second return value
    flags (always True; kept for callers that record the ambiguity).
    """
    exact = s.is_exact()
    scale = max((_magnitude(c) for c in s.coeffs), default=0.0)
    tol = 0.0 if exact else rtol * max(scale, 1e-300)
    low = s.lowest_degree(tol)
    if low is None:
        raise JetError("cannot factor the zero series")
    if low % 2:
        raise JetError(f"series vanishes to odd order {low}; not a square")
    d = low // 2
    lowest = s.homogeneous(low)
    if exact and lowest[max(lowest)] > 0 and not is_exact(exact_sqrt(lowest[max(lowest)])):
        # irrational root: continue in floating point
        s = s.to_float()
        exact = False
        tol = rtol * max(scale, 1e-300)
    out_order = s.order - d
    parts = [_poly_sqrt(s.homogeneous(low), tol)]
    for k in range(1, out_order - d + 1):
        rhs = dict(s.homogeneous(low + k))
        for j in range(1, k):
            rhs = _poly_sub(rhs, _poly_mul(parts[j], parts[k - j]))
        denom = {m: 2 * c for m, c in parts[0].items()}
        parts.append(_poly_divide(rhs, denom, tol) if _poly_clean(rhs, tol) else {})
    terms = {}
    for part in parts:
        terms.update(part)
    mu = Jet.from_dict(s.nvars, out_order, terms, s.base_point)
    residual = jet_add(jet_mul(mu, mu), -s.truncate(out_order))
    worst = max((_magnitude(c) for c in residual.coeffs), default=0.0)
    if worst > tol * 10 and not (exact and worst == 0):
        raise JetError(f"square-root factorization inconsistent (residual {worst:.3g})")
    return mu, True


def jet_divide_exact(a: Jet, mu: Jet, rtol: float = 1e-9) -> Jet:
    """Quotient ``a / mu`` when mu vanishes at the base point but divides a."""
    exact = a.is_exact() and mu.is_exact()
    scale = max((_magnitude(c) for c in list(a.coeffs) + list(mu.coeffs)), default=0.0)
    tol = 0.0 if exact else rtol * max(scale, 1e-300)
    d = mu.lowest_degree(tol)
    if d is None:
        raise JetError("division by the zero series")
    if d == 0:
        return a / mu
    out_order = min(a.order - d, mu.order - d)
    if out_order < 0:
        raise JetError("not enough orders to divide")
    lead = mu.homogeneous(d)
    lead = _poly_clean(lead, tol)
    parts: list[dict] = []
    for k in range(out_order + 1):
        rhs = dict(a.homogeneous(d + k))
        for j in range(1, k + 1):
            rhs = _poly_sub(rhs, _poly_mul(mu.homogeneous(d + j), parts[k - j]))
        parts.append(_poly_divide(rhs, lead, tol) if _poly_clean(rhs, tol) else {})
    terms = {}
    for part in parts:
        terms.update(part)
    return Jet.from_dict(a.nvars, out_order, terms, a.base_point)
