"""Reading and writing profiles, and rendering exact numbers for reports.

Profiles come as CSV (one voter per line, cells like ``0.25`` or ``1/4``) or
as JSON ``{"votes": [[...], ...], "weights": [...]}``. Decimal literals are
read exactly.
"""
import json
from fractions import Fraction

from .core import BudgetAggError, EntryOutOfRange, Profile, ProfileShapeError, RowNotNormalized


class ParseError(BudgetAggError):
    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


def parse_number(text: str, line=None, col=None) -> Fraction:
    s = text.strip()
    try:
        if not s or s.lower() in ("nan", "inf", "-inf", "infinity"):
            raise ValueError
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not an exact number: {text.strip()!r}", line, col) from None


def _build(rows, positions):
    """Profile from parsed rows; positions[i] is the (line, col) where row i starts."""
    try:
        return Profile(tuple(tuple(r) for r in rows))
    except (RowNotNormalized, EntryOutOfRange) as e:
        line, col = positions[e.row] if e.row < len(positions) else (None, None)
        raise ParseError(str(e), line, col) from None
    except ProfileShapeError as e:
        raise ParseError(str(e), *(positions[-1] if positions else (None, None))) from None


def parse_csv(text: str) -> Profile:
    rows, positions = [], []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        row, col = [], 1
        for cell in line.split(","):
            lead = len(cell) - len(cell.lstrip())
            row.append(parse_number(cell, lineno, col + lead))
            col += len(cell) + 1
        if width is not None and len(row) != width:
            raise ParseError(f"expected {width} cells, found {len(row)}", lineno, 1)
        width = len(row)
        rows.append(row)
        positions.append((lineno, 1))
    if not rows:
        raise ParseError("no votes found", 1, 1)
    return _build(rows, positions)


def _load_json(text: str) -> dict:
    try:
        doc = json.loads(text, parse_float=Fraction, parse_int=Fraction)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(doc, dict) or "votes" not in doc:
        raise ParseError('expected an object with a "votes" array', 1, 1)
    return doc


def _json_profile(doc) -> Profile:
    votes = doc["votes"]
    if not isinstance(votes, list) or not votes:
        raise ParseError('"votes" must be a non-empty array', 1, 1)
    rows = []
    for i, raw in enumerate(votes):
        if not isinstance(raw, list):
            raise ParseError(f"votes[{i}] is not an array")
        row = []
        for j, cell in enumerate(raw):
            if isinstance(cell, Fraction):
                row.append(cell)
            elif isinstance(cell, str):
                row.append(parse_number(cell))
            else:
                raise ParseError(f"votes[{i}][{j}] is not a number or fraction string")
        rows.append(row)
    if len({len(r) for r in rows}) != 1:
        raise ParseError("rows of different lengths")
    return _build(rows, [(None, None)] * len(rows))


def _json_weights(doc, n):
    raw = doc.get("weights")
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != n:
        raise ParseError(f'"weights" must be an array of {n} positive integers')
    out = []
    for w in raw:
        if isinstance(w, str):
            w = parse_number(w)
        if not isinstance(w, Fraction) or w.denominator != 1 or w < 1:
            raise ParseError(f"weight {w} is not a positive integer")
        out.append(int(w))
    return tuple(out)


def parse_profile(text: str) -> tuple[Profile, tuple | None]:
    """Profile and optional weights from CSV or JSON text."""
    if text.lstrip().startswith("{"):
        doc = _load_json(text)
        p = _json_profile(doc)
        return p, _json_weights(doc, p.n)
    return parse_csv(text), None


def parse_weights(text: str) -> tuple:
    out = []
    for k, cell in enumerate(text.split(","), start=1):
        try:
            w = int(cell.strip())
        except ValueError:
            raise ParseError(f"weight {k} is not an integer: {cell.strip()!r}") from None
        if w < 1:
            raise ParseError(f"weight {k} must be positive")
        out.append(w)
    return tuple(out)


def frac(x: Fraction) -> str:
    return str(Fraction(x))


def approx(x: Fraction) -> float:
    return float(round(Fraction(x), 12))


def vec(v) -> list:
    return [frac(x) for x in v]


def mat(rows) -> list:
    return [vec(r) for r in rows]


def profile_to_csv(p: Profile) -> str:
    return "".join(",".join(frac(x) for x in row) + "\n" for row in p.votes)


def profile_to_json(p: Profile, weights=None) -> str:
    doc = {"votes": mat(p.votes)}
    if weights is not None:
        doc["weights"] = list(weights)
    return json.dumps(doc, indent=2) + "\n"
