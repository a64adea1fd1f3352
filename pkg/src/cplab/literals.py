"""Line-oriented text formats.

Distribution::

    # comment
    dim 2
    0 0 0.5
    1 -1 0.5

Polyhedron (``inf`` for an absent constraint)::

    m 2
    1 0 0.5
    0 1 inf

Integer pmf: ``k mass`` per line.

Rare-event model: ``n <count>``, then one entry per observation (a single
entry is repeated n times).  An entry is a line ``p <value>`` followed by an
inline distribution ending with ``end``, or ``p <value> @<path>`` referring to
a distribution file relative to the config::

    n 100
    p 0.01
    dim 1
    1 1
    end

Floats are written with ``repr`` (shortest round-trip decimal), so emitting a
parsed literal reproduces every value bit for bit.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .dist import DiscreteDistribution
from .errors import InvalidInputError, ParseError
from .models import IntegerPmf, RareEventModel
from .polyhedra import NORM_TOL, Polyhedron


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno) from None


def fmt(x: float) -> str:
    x = float(x)
    return "inf" if x == np.inf else repr(x)


def _parse_atoms(rows, dim, header_line):
    pts, masses = [], []
    for lineno, toks in rows:
        if len(toks) != dim + 1:
            raise ParseError(f"expected {dim} coordinates and a mass", lineno)
        vals = [_float(t, lineno) for t in toks]
        pts.append(vals[:-1])
        masses.append(vals[-1])
    if not pts:
        raise ParseError("distribution has no atoms", header_line)
    try:
        return DiscreteDistribution(np.array(pts), np.array(masses))
    except InvalidInputError as exc:
        raise ParseError(str(exc), header_line) from None


def _parse_dim(toks, lineno) -> int:
    if len(toks) != 2 or toks[0] != "dim":
        raise ParseError("expected header 'dim <d>'", lineno)
    try:
        d = int(toks[1])
    except ValueError:
        raise ParseError(f"bad dimension {toks[1]!r}", lineno) from None
    if d < 1:
        raise ParseError("dimension must be positive", lineno)
    return d


def parse_distribution(text: str) -> DiscreteDistribution:
    rows = list(_lines(text))
    if not rows:
        raise ParseError("empty distribution literal", 1)
    lineno, toks = rows[0]
    return _parse_atoms(rows[1:], _parse_dim(toks, lineno), lineno)


def format_distribution(F: DiscreteDistribution) -> str:
    out = [f"dim {F.dim}"]
    for p, m in zip(F.points, F.masses):
        out.append(" ".join([fmt(c) for c in p] + [fmt(m)]))
    return "\n".join(out) + "\n"


def read_distribution(path) -> DiscreteDistribution:
    return parse_distribution(Path(path).read_text())


def parse_polyhedron(text: str) -> Polyhedron:
    rows = list(_lines(text))
    if not rows or rows[0][1][0] != "m" or len(rows[0][1]) != 2:
        raise ParseError("expected header 'm <count>'", rows[0][0] if rows else 1)
    m = int(rows[0][1][1])
    body = rows[1:]
    if len(body) != m:
        raise ParseError(f"header announces {m} halfspaces, found {len(body)}",
                         rows[0][0])
    widths = {len(t) for _, t in body}
    if len(widths) != 1 or widths.pop() < 2:
        raise ParseError("inconsistent halfspace rows", body[0][0] if body else 1)
    dirs = np.array([[_float(t, ln) for t in toks[:-1]] for ln, toks in body])
    b = np.array([_float(toks[-1], ln) for ln, toks in body])
    try:
        if np.all(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) <= NORM_TOL):
            return Polyhedron(dirs, b)
        return Polyhedron.from_raw(dirs, b)
    except InvalidInputError as exc:
        raise ParseError(str(exc), rows[0][0]) from None


def format_polyhedron(P: Polyhedron) -> str:
    out = [f"m {P.m}"]
    for t, b in zip(P.directions, P.thresholds):
        out.append(" ".join([fmt(c) for c in t] + [fmt(b)]))
    return "\n".join(out) + "\n"


def parse_integer_pmf(text: str) -> IntegerPmf:
    masses = {}
    for lineno, toks in _lines(text):
        if len(toks) != 2:
            raise ParseError("expected 'k mass'", lineno)
        try:
            k = int(toks[0])
        except ValueError:
            raise ParseError(f"bad count {toks[0]!r}", lineno) from None
        if k < 0:
            raise ParseError("counts must be non-negative", lineno)
        masses[k] = masses.get(k, 0.0) + _float(toks[1], lineno)
    if not masses:
        raise ParseError("empty integer pmf", 1)
    try:
        return IntegerPmf.from_dict(masses)
    except InvalidInputError as exc:
        raise ParseError(str(exc), 1) from None


def format_integer_pmf(U: IntegerPmf) -> str:
    return "".join(f"{k} {fmt(U.masses[k])}\n" for k in U.support)


def parse_model(text: str, base_dir: Optional[Path] = None) -> RareEventModel:
    rows = list(_lines(text))
    if not rows or rows[0][1][0] != "n" or len(rows[0][1]) != 2:
        raise ParseError("expected header 'n <count>'", rows[0][0] if rows else 1)
    n = int(rows[0][1][1])
    if n < 1:
        raise ParseError("n must be positive", rows[0][0])
    probs, laws = [], []
    i = 1
    while i < len(rows):
        lineno, toks = rows[i]
        if toks[0] != "p" or len(toks) not in (2, 3):
            raise ParseError("expected 'p <value>' or 'p <value> @<path>'", lineno)
        probs.append(_float(toks[1], lineno))
        if len(toks) == 3:
            if not toks[2].startswith("@"):
                raise ParseError("file references start with '@'", lineno)
            ref = Path(toks[2][1:])
            if base_dir is not None and not ref.is_absolute():
                ref = base_dir / ref
            try:
                laws.append(read_distribution(ref))
            except OSError as exc:
                raise ParseError(f"cannot read {ref}: {exc.strerror}", lineno) from None
            i += 1
            continue
        if i + 1 >= len(rows):
            raise ParseError("missing inline distribution", lineno)
        dim = _parse_dim(rows[i + 1][1], rows[i + 1][0])
        j = i + 2
        while j < len(rows) and rows[j][1] != ["end"]:
            j += 1
        if j == len(rows):
            raise ParseError("inline distribution not terminated by 'end'", lineno)
        laws.append(_parse_atoms(rows[i + 2:j], dim, rows[i + 1][0]))
        i = j + 1
    if len(probs) == 1 and n > 1:
        probs, laws = probs * n, laws * n
    if len(probs) != n:
        raise ParseError(f"header announces {n} entries, found {len(probs)}", rows[0][0])
    try:
        return RareEventModel(tuple(probs), tuple(laws))
    except InvalidInputError as exc:
        raise ParseError(str(exc), rows[0][0]) from None


def read_model(path) -> RareEventModel:
    path = Path(path)
    return parse_model(path.read_text(), path.parent)


def format_model(model: RareEventModel) -> str:
    out = [f"n {model.n}"]
    for p, V in zip(model.probs, model.losses):
        out.append(f"p {fmt(p)}")
        out.append(format_distribution(V).rstrip("\n"))
        out.append("end")
    return "\n".join(out) + "\n"

