"""FrontFile JSON, classification reports, and the CSV / OBJ writers."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import exprlang
from .criteria import LABELS, ClassificationReport, Verdict
from .front import AUTO, FrontError, FrontGerm

FRONTFILE_KEYS = {"dim", "map", "normal", "label", "branches"}


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# FrontFile


def front_from_dict(doc: dict) -> tuple[FrontGerm, dict]:
    """Build a germ (and its named closed-form branches) from a FrontFile document."""
    if not isinstance(doc, dict):
        raise FormatError("FrontFile must be a JSON object")
    unknown = set(doc) - FRONTFILE_KEYS
    if unknown:
        raise FormatError(f"unknown FrontFile keys: {sorted(unknown)}")
    dim = doc.get("dim")
    if dim not in (2, 3) or isinstance(dim, bool):
        raise FormatError(f"dim must be 2 or 3, got {dim!r}")
    comps = doc.get("map")
    if not isinstance(comps, list) or len(comps) != dim + 1 or not all(isinstance(c, str) for c in comps):
        raise FormatError(f"map must be a list of {dim + 1} expression strings")
    normal = doc.get("normal", AUTO)
    if normal != AUTO:
        if not isinstance(normal, list) or len(normal) != dim + 1 or not all(isinstance(c, str) for c in normal):
            raise FormatError(f'normal must be "auto" or a list of {dim + 1} expression strings')
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise FormatError("label must be a string")
    try:
        germ = FrontGerm.from_strings(comps, normal, label)
    except exprlang.ExprError as exc:
        raise FormatError(f"bad expression: {exc}") from exc
    except FrontError as exc:
        raise FormatError(str(exc)) from exc
    branches = {}
    for name, pair in (doc.get("branches") or {}).items():
        if not isinstance(pair, list) or len(pair) != 2 or not all(isinstance(c, str) for c in pair):
            raise FormatError(f"branch {name!r} must be a list of two expression strings in t")
        try:
            branches[name] = tuple(exprlang.parse(c) for c in pair)
        except exprlang.ExprError as exc:
            raise FormatError(f"bad expression in branch {name!r}: {exc}") from exc
    return germ, branches


def front_to_dict(germ: FrontGerm, branches: dict | None = None) -> dict:
    doc = {
        "dim": germ.n,
        "map": [exprlang.to_source(e) for e in germ.map],
        "normal": AUTO if germ.auto else [exprlang.to_source(e) for e in germ.normal],
        "label": germ.label,
    }
    if branches:
        doc["branches"] = {k: [exprlang.to_source(e) for e in v] for k, v in branches.items()}
    return doc


def load_front(path: str | Path) -> tuple[FrontGerm, dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return front_from_dict(doc)


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# values


def fmt(x) -> str:
    """Text for a number: exact rationals as p/q, floats as their shortest repr."""
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x) + 0.0)  # no negative zero
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt(v) for v in x) + "]"
    return str(x)


def jsonable(x):
    """Plain JSON value: exact non-integers become "p/q" strings, NaN becomes null."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) or math.isinf(x) else x
    if isinstance(x, Verdict):
        return x.value
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in x]
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialize {type(x).__name__}")


# ---------------------------------------------------------------------------
# classification reports


def _exact_mode(report: ClassificationReport) -> bool:
    """Whether the numbers in the report are exact rationals."""
    values = list(report.point) if report.hess_det is None else [report.hess_det]
    return all(isinstance(c, (int, Fraction)) and not isinstance(c, bool) for c in values)


def _hess(report: ClassificationReport, exact: bool):
    if report.hess is None or exact:
        return report.hess
    return [[float(x) for x in row] for row in report.hess]


def report_to_dict(report: ClassificationReport, germ: FrontGerm | None = None) -> dict:
    exact = _exact_mode(report)
    return jsonable({
        "front": germ.label if germ is not None else "",
        "dim": report.n,
        "point": list(report.point),
        "mode": "exact" if exact else "float",
        "rank": report.rank,
        "verdict": report.verdict,
        "verdict_label": LABELS[report.verdict],
        "reason": report.reason,
        "hess": _hess(report, exact),
        "hess_det": report.hess_det,
        "delta_phi": report.delta_phi,
        "immersion_ok": report.immersion_ok,
        "tol": report.tol,
        "rank_tol": report.rank_tol,
        "diagnostics": report.diagnostics,
    })


def report_text(report: ClassificationReport, germ: FrontGerm | None = None) -> str:
    exact = _exact_mode(report)
    lines = []
    if germ is not None and germ.label:
        lines.append(f"front: {germ.label}")
    lines += [
        f"dim: {report.n}",
        "point: (" + ", ".join(fmt(c) for c in report.point) + ")",
        f"mode: {'exact' if exact else 'float'}",
        f"rank df: {report.rank}",
        f"verdict: {report.label}",
    ]
    d = report.diagnostics
    if report.n == 3 and "kernel_xi" in d:
        lines.append(f"kernel: xi = {fmt(d['kernel_xi'])}, eta = {fmt(d['kernel_eta'])}")
    if report.hess is not None:
        lines.append(f"Hess λ = {fmt(_hess(report, exact))}")
        lines.append(f"det Hess λ = {fmt(report.hess_det)}")
    if report.delta_phi is not None:
        lines.append(f"Δ_φ = {fmt(report.delta_phi)}")
    if "sign_identity" in d:
        lines.append(f"sign(det Hess λ) = -sign(Δ_φ): {fmt(d['sign_identity'])}")
    if "second_fundamental_immersion" in d:
        lines.append(f"second fundamental form immersion: {fmt(d['second_fundamental_immersion'])}")
    if "immersion_rank" in d:
        lines.append(f"lift immersion Jacobian rank: {d['immersion_rank']} (det = {fmt(d['immersion_det'])})")
    lines.append(f"tolerance: {fmt(report.tol)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CSV and OBJ


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)) and math.isnan(float(x)):
        return ""
    return fmt(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(_csv_escape(_cell(x)) for x in row))
    return "\n".join(out) + "\n"


def _csv_escape(s: str) -> str:
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def obj_text(
    surface_vertices: np.ndarray,
    faces: Sequence[Sequence[int]],
    polylines: Sequence[np.ndarray] = (),
    name: str = "front",
) -> str:
    """OBJ with the surface first, then one ``l`` record per singular polyline.

    ``faces`` use 0-based surface vertex indices; the file is 1-based.
    """
    out = [f"# {name}", "o surface"]
    for p in surface_vertices:
        out.append("v " + " ".join(fmt(float(c)) for c in p))
    for f in faces:
        out.append("f " + " ".join(str(i + 1) for i in f))
    if len(polylines):
        out.append("o singular_set")
        base = len(surface_vertices)
        for line in polylines:
            for p in line:
                out.append("v " + " ".join(fmt(float(c)) for c in p))
        for line in polylines:
            out.append("l " + " ".join(str(base + k + 1) for k in range(len(line))))
            base += len(line)
    return "\n".join(out) + "\n"


def grid_faces(n: int, quads: bool = False) -> list[tuple[int, ...]]:
    """Faces of an n x n vertex grid indexed i * n + j."""
    faces = []
    for i in range(n - 1):
        for j in range(n - 1):
            a, b, c, d = i * n + j, (i + 1) * n + j, (i + 1) * n + j + 1, i * n + j + 1
            if quads:
                faces.append((a, b, c, d))
            else:
                faces.append((a, b, c))
                faces.append((a, c, d))
    return faces
