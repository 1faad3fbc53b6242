"""Brascamp-Lieb data: the pair (L, p) plus validation and built-in families."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DatumFormatError, InvalidDatumError
from .linalg import numerical_rank


@dataclass(frozen=True)
class MapEntry:
    p: float
    matrix: tuple  # tuple of rows, each a tuple of floats

    @property
    def n_j(self):
        return len(self.matrix)

    def array(self):
        return np.array(self.matrix, dtype=float).reshape(len(self.matrix), -1)


@dataclass(frozen=True)
class BLDatum:
    """m linear maps L_j : R^n -> R^{n_j} with exponents p_j.

    Instances are immutable; construct through :func:`make_datum` or
    :meth:`from_dict` to get validation.
    """

    n: int
    maps: tuple

    @property
    def m(self):
        return len(self.maps)

    @property
    def p(self):
        return np.array([e.p for e in self.maps], dtype=float)

    @property
    def dims(self):
        return tuple(e.n_j for e in self.maps)

    def matrices(self):
        return [e.array() for e in self.maps]

    def is_rank1(self):
        return all(d == 1 for d in self.dims)

    def signature(self):
        return (self.n, self.dims, tuple(e.p for e in self.maps))

    def to_dict(self):
        return {
            "n": self.n,
            "maps": [{"p": e.p, "matrix": [list(r) for r in e.matrix]} for e in self.maps],
        }

    def to_json(self, indent=None):
        # json emits floats with repr(), the shortest string that round-trips bit-exactly
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, raw):
        datum = _build_unchecked(raw)
        report = validate_datum(datum)
        if not report.ok:
            raise InvalidDatumError(report)
        return datum

    @classmethod
    def from_json(cls, text):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatumFormatError(f"not valid JSON: {exc}") from exc
        return cls.from_dict(raw)


@dataclass(frozen=True)
class Violation:
    code: str
    index: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(
            f"[{v.code}]" + (f" map {v.index}" if v.index is not None else "") + f": {v.message}"
            for v in self.violations
        )


def _as_float(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise DatumFormatError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _build_unchecked(raw):
    """Parse the JSON-shaped mapping into a BLDatum, checking structure only."""
    if isinstance(raw, BLDatum):
        return raw
    if not isinstance(raw, dict):
        raise DatumFormatError("datum must be a JSON object with keys 'n' and 'maps'")
    if "n" not in raw or "maps" not in raw:
        raise DatumFormatError("datum needs both 'n' and 'maps'")
    n = raw["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise DatumFormatError(f"'n' must be an integer, got {n!r}")
    if not isinstance(raw["maps"], list):
        raise DatumFormatError("'maps' must be a list")
    entries = []
    for j, item in enumerate(raw["maps"]):
        if not isinstance(item, dict) or "p" not in item or "matrix" not in item:
            raise DatumFormatError(f"map {j}: needs keys 'p' and 'matrix'")
        p = _as_float(item["p"], f"map {j} exponent")
        rows = item["matrix"]
        if not isinstance(rows, list) or not rows:
            raise DatumFormatError(f"map {j}: matrix must be a non-empty list of rows")
        mat = []
        for r, row in enumerate(rows):
            if not isinstance(row, list):
                raise DatumFormatError(f"map {j}: row {r} is not a list")
            if len(row) != n:
                raise DatumFormatError(f"map {j}: row {r} has length {len(row)}, expected n={n}")
            mat.append(tuple(_as_float(x, f"map {j} row {r}") for x in row))
        entries.append(MapEntry(p, tuple(mat)))
    return BLDatum(n, tuple(entries))


def validate_datum(raw) -> ValidationReport:
    """Check every BLDatum invariant; structural problems raise DatumFormatError."""
    datum = _build_unchecked(raw)
    out = []
    if datum.n < 1:
        out.append(Violation("dimension", None, f"ambient dimension n={datum.n} must be positive"))
    if datum.m < 1:
        out.append(Violation("no-maps", None, "at least one map is required"))
    for j, e in enumerate(datum.maps):
        if not (0.0 <= e.p <= 1.0):
            out.append(Violation("exponent-out-of-range", j, f"exponent p={e.p!r} outside [0, 1]"))
        if e.n_j > datum.n:
            out.append(Violation("target-dimension", j, f"n_j={e.n_j} exceeds n={datum.n}"))
        A = e.array()
        if not np.all(np.isfinite(A)):
            out.append(Violation("non-finite", j, "matrix has non-finite entries"))
            continue
        r = numerical_rank(A)
        if r < e.n_j:
            out.append(Violation("not-surjective", j, f"rank {r} < n_j={e.n_j}: map is not surjective"))
    return ValidationReport(tuple(out))


def make_datum(n, maps):
    """Build and validate a datum from ``[(p, matrix), ...]``."""
    raw = {"n": n, "maps": [{"p": p, "matrix": np.asarray(M, dtype=float).tolist()} for p, M in maps]}
    return BLDatum.from_dict(raw)


def scaling_defect(datum: BLDatum) -> float:
    """sum_j p_j n_j - n; zero exactly when the scaling condition holds."""
    return float(sum(e.p * e.n_j for e in datum.maps) - datum.n)


# -- built-in families -----------------------------------------------------

FAMILIES = ("holder", "loomis-whitney", "young", "four-linear")


def builtin_datum(name, **params):
    """Canonical data for the classical families.

    holder(m=2, n=2): m identity maps on R^n, p_j = 1/m.
    loomis-whitney(n=3): the n coordinate projections R^n -> R^{n-1}, p_j = 1/(n-1).
    young(p=(2/3, 2/3, 2/3)): rows (1,0), (0,1), (1,-1).
    four-linear(a=1): rows (1,0), (0,1), (1,-1), (1,a), p_j = 1/2.
    """
    if name == "holder":
        m = int(params.pop("m", 2))
        n = int(params.pop("n", 2))
        if m < 1 or n < 1:
            raise ValueError("holder needs m >= 1 and n >= 1")
        p = params.pop("p", None)
        p = [1.0 / m] * m if p is None else [float(x) for x in p]
        if len(p) != m:
            raise ValueError("holder: need one exponent per map")
        maps = [(pj, np.eye(n)) for pj in p]
        dim = n
    elif name == "loomis-whitney":
        n = int(params.pop("n", 3))
        if n < 2:
            raise ValueError("loomis-whitney needs n >= 2")
        maps = []
        for j in range(n):
            keep = [c for c in range(n) if c != n - 1 - j]
            maps.append((1.0 / (n - 1), np.eye(n)[keep]))
        dim = n
    elif name == "young":
        p = params.pop("p", (2 / 3, 2 / 3, 2 / 3))
        p = [float(x) for x in p]
        if len(p) != 3:
            raise ValueError("young needs three exponents")
        rows = ([[1.0, 0.0]], [[0.0, 1.0]], [[1.0, -1.0]])
        maps = list(zip(p, rows))
        dim = 2
    elif name == "four-linear":
        a = float(params.pop("a", 1.0))
        if not math.isfinite(a):
            raise ValueError("four-linear needs a finite parameter a")
        rows = ([[1.0, 0.0]], [[0.0, 1.0]], [[1.0, -1.0]], [[1.0, a]])
        maps = [(0.5, r) for r in rows]
        dim = 2
    else:
        raise ValueError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    if params:
        raise ValueError(f"unexpected parameters for {name}: {sorted(params)}")
    return make_datum(dim, maps)
