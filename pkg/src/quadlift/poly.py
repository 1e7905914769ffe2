"""Sparse multivariate polynomials and polynomial constraint systems.

A polynomial is a map from exponent vectors to float coefficients.  The
module keeps exactly the arithmetic the rest of the package needs: parsing,
printing, ring operations, pointwise and batched evaluation, and extraction
of homogeneous quadratic coefficients for affine-quadratic polynomials.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DegreeError, DimensionMismatchError, PolyParseError

Exponents = Tuple[int, ...]

_COEF_EPS = 0.0  # coefficients are dropped only when exactly zero


def grlex_key(exps: Exponents) -> Tuple[int, Exponents]:
    """Graded-lexicographic sort key: total degree first, then the exponent tuple."""
    return (sum(exps), exps)


class Relation(enum.Enum):
    """Comparison of a polynomial against zero."""

    EQ = "="
    LT = "<"
    GT = ">"
    LE = "<="
    GE = ">="

    def holds(self, value: float, tol: float = 0.0) -> bool:
        """Whether `value rel 0` holds, with `tol` as the boundary band."""
        if self is Relation.EQ:
            return abs(value) <= tol
        if self is Relation.GT:
            return value > tol
        if self is Relation.LT:
            return value < -tol
        if self is Relation.GE:
            return value >= -tol
        return value <= tol  # LE

    def holds_many(self, values: np.ndarray, tol: float = 0.0) -> np.ndarray:
        if self is Relation.EQ:
            return np.abs(values) <= tol
        if self is Relation.GT:
            return values > tol
        if self is Relation.LT:
            return values < -tol
        if self is Relation.GE:
            return values >= -tol
        return values <= tol

    @staticmethod
    def from_symbol(sym: str) -> "Relation":
        for rel in Relation:
            if rel.value == sym:
                return rel
        raise ValueError(f"unknown relation symbol {sym!r}")


@dataclass(frozen=True)
class Polynomial:
    """Sparse real polynomial in `nvars` variables.

    `terms` maps exponent vectors (length `nvars`) to nonzero coefficients.
    Instances are treated as immutable; all operations return new objects.
    """

    nvars: int
    terms: Mapping[Exponents, float] = field(default_factory=dict)

    def __post_init__(self):
        clean: Dict[Exponents, float] = {}
        for exps, coef in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise DimensionMismatchError(
                    f"exponent vector {exps} has length {len(exps)}, expected {self.nvars}"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            coef = float(coef)
            if coef != _COEF_EPS:
                clean[exps] = clean.get(exps, 0.0) + coef
        clean = {e: c for e, c in clean.items() if c != 0.0}
        object.__setattr__(self, "terms", clean)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars, {})

    @staticmethod
    def constant(nvars: int, value: float) -> "Polynomial":
        return Polynomial(nvars, {(0,) * nvars: value})

    @staticmethod
    def variable(nvars: int, index: int) -> "Polynomial":
        exps = [0] * nvars
        exps[index] = 1
        return Polynomial(nvars, {tuple(exps): 1.0})

    @staticmethod
    def monomial(nvars: int, exps: Exponents, coef: float = 1.0) -> "Polynomial":
        return Polynomial(nvars, {tuple(exps): coef})

    # -- structure ---------------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial reports 0."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def items_grlex(self, reverse: bool = True):
        """Terms in graded-lex order (descending by default, for printing)."""
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=reverse)

    def extended(self, nvars: int) -> "Polynomial":
        """The same polynomial viewed in a larger variable space (zero-padded exponents)."""
        if nvars < self.nvars:
            raise DimensionMismatchError("cannot shrink the variable space")
        pad = (0,) * (nvars - self.nvars)
        return Polynomial(nvars, {e + pad: c for e, c in self.terms.items()})

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise DimensionMismatchError("polynomials live in different variable spaces")
            return other
        return Polynomial.constant(self.nvars, float(other))

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        merged = dict(self.terms)
        for e, c in other.terms.items():
            merged[e] = merged.get(e, 0.0) + c
        return Polynomial(self.nvars, merged)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = self._coerce(other)
        prod: Dict[Exponents, float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                prod[e] = prod.get(e, 0.0) + c1 * c2
        return Polynomial(self.nvars, prod)

    __rmul__ = __mul__

    # -- evaluation --------------------------------------------------------

    def evaluate(self, point: Sequence[float]) -> float:
        """Value at a single point."""
        if len(point) != self.nvars:
            raise DimensionMismatchError(
                f"point has dimension {len(point)}, polynomial has {self.nvars} variables"
            )
        total = 0.0
        for exps, coef in self.terms.items():
            val = coef
            for x, e in zip(point, exps):
                if e:
                    val *= x**e
            total += val
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Values at each row of `points` (shape (m, nvars))."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.nvars:
            raise DimensionMismatchError(
                f"expected points of shape (m, {self.nvars}), got {pts.shape}"
            )
        out = np.zeros(pts.shape[0])
        for exps, coef in self.terms.items():
            term = np.full(pts.shape[0], coef)
            for i, e in enumerate(exps):
                if e:
                    term *= pts[:, i] ** e
            out += term
        return out

    def __call__(self, point: Sequence[float]) -> float:
        return self.evaluate(point)

    def __str__(self) -> str:
        return print_poly(self)


@dataclass(frozen=True)
class QuadCoeffs:
    """Homogeneous quadratic coefficients of an affine-quadratic polynomial.

    Keys (i, j) with 0 <= j <= i <= n address the product x_i*x_j of the
    homogenized variables, where x_0 is the homogenizing coordinate: the
    constant sits at (0, 0), the linear coefficient of x_b at (b, 0), the
    square of x_b at (b, b), and a cross term x_i*x_j (i > j >= 1) is stored
    once at (i, j) with its full coefficient.
    """

    n: int
    entries: Mapping[Tuple[int, int], float]

    def __post_init__(self):
        for (i, j), _ in self.entries.items():
            if not (0 <= j <= i <= self.n):
                raise ValueError(f"bad quadratic coefficient key ({i}, {j}) for n={self.n}")

    def to_polynomial(self) -> Polynomial:
        """Dehomogenize at x_0 = 1, recovering the source polynomial exactly."""
        terms: Dict[Exponents, float] = {}
        for (i, j), c in self.entries.items():
            exps = [0] * self.n
            if i > 0:
                exps[i - 1] += 1
            if j > 0:
                exps[j - 1] += 1
            key = tuple(exps)
            terms[key] = terms.get(key, 0.0) + c
        return Polynomial(self.n, terms)


def quad_coeffs(p: Polynomial) -> QuadCoeffs:
    """Quadratic coefficient table of a degree-<=2 polynomial.

    Raises DegreeError when the total degree exceeds 2.
    """
    if p.degree > 2:
        raise DegreeError(f"polynomial has degree {p.degree} > 2")
    entries: Dict[Tuple[int, int], float] = {}
    for exps, coef in p.terms.items():
        support = [b for b, e in enumerate(exps) if e > 0]
        if not support:
            key = (0, 0)
        elif len(support) == 1:
            b = support[0]
            key = (b + 1, b + 1) if exps[b] == 2 else (b + 1, 0)
        else:
            i, j = support[1] + 1, support[0] + 1
            key = (i, j)
        entries[key] = entries.get(key, 0.0) + coef
    return QuadCoeffs(p.nvars, entries)


# ---------------------------------------------------------------------------
# text format


def default_var_names(nvars: int) -> Tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(nvars))


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise PolyParseError(f"unexpected character {stripped[0]!r}", pos)
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    return tokens


def parse_poly(text: str, var_names: Optional[Sequence[str]] = None) -> Polynomial:
    """Parse a sum of terms like ``2*x1^2*x2 - 0.5*x3 + 1``.

    Each term is a product of a numeric coefficient and variables with
    optional nonnegative integer exponents.  `var_names` fixes the variable
    order; unknown names raise PolyParseError.
    """
    if var_names is None:
        raise ValueError("var_names is required")
    names = {name: i for i, name in enumerate(var_names)}
    nvars = len(var_names)
    tokens = _tokenize(text)
    if not tokens:
        raise PolyParseError("empty polynomial text", 0)

    terms: Dict[Exponents, float] = {}
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else (None, None, len(text))

    while idx < len(tokens):
        sign = 1.0
        kind, val, pos = peek()
        while kind == "op" and val in "+-":
            if val == "-":
                sign = -sign
            idx += 1
            kind, val, pos = peek()
        coef = sign
        exps = [0] * nvars
        expect_factor = True
        while expect_factor:
            kind, val, pos = peek()
            if kind == "number":
                coef *= float(val)
                idx += 1
            elif kind == "name":
                if val not in names:
                    raise PolyParseError(f"unknown variable {val!r}", pos)
                var = names[val]
                idx += 1
                kind2, val2, _ = peek()
                power = 1
                if kind2 == "op" and val2 == "^":
                    idx += 1
                    kind3, val3, pos3 = peek()
                    if kind3 != "number" or not val3.isdigit():
                        raise PolyParseError("expected a nonnegative integer exponent", pos3)
                    power = int(val3)
                    idx += 1
                exps[var] += power
            else:
                raise PolyParseError("expected a coefficient or variable", pos)
            kind, val, pos = peek()
            if kind == "op" and val == "*":
                idx += 1
                expect_factor = True
            else:
                expect_factor = False
        key = tuple(exps)
        terms[key] = terms.get(key, 0.0) + coef
        kind, val, pos = peek()
        if kind is not None and not (kind == "op" and val in "+-"):
            raise PolyParseError(f"expected '+' or '-', found {val!r}", pos)

    return Polynomial(nvars, terms)


def _format_coef(c: float) -> str:
    if c == int(c) and abs(c) < 1e15:
        return str(int(c))
    return repr(c)


def print_poly(p: Polynomial, var_names: Optional[Sequence[str]] = None) -> str:
    """Render in the grammar accepted by parse_poly, terms in descending grlex order."""
    if var_names is None:
        var_names = default_var_names(p.nvars)
    if not p.terms:
        return "0"
    parts = []
    for exps, coef in p.items_grlex(reverse=True):
        factors = []
        mag = abs(coef)
        if mag != 1.0 or not any(exps):
            factors.append(_format_coef(mag))
        for name, e in zip(var_names, exps):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        body = "*".join(factors)
        if not parts:
            parts.append(("-" if coef < 0 else "") + body)
        else:
            parts.append(("- " if coef < 0 else "+ ") + body)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class PolySystem:
    """A conjunction of polynomial constraints `p rel 0` over shared variables."""

    nvars: int
    constraints: Tuple[Tuple[Polynomial, Relation], ...]
    var_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for p, _ in self.constraints:
            if p.nvars != self.nvars:
                raise DimensionMismatchError(
                    f"constraint has {p.nvars} variables, system has {self.nvars}"
                )
        if self.var_names is not None and len(self.var_names) != self.nvars:
            raise DimensionMismatchError("var_names length does not match nvars")

    @property
    def names(self) -> Tuple[str, ...]:
        return self.var_names if self.var_names is not None else default_var_names(self.nvars)

    def max_degree(self) -> int:
        return max((p.degree for p, _ in self.constraints), default=0)

    def satisfied(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        return all(rel.holds(p.evaluate(point), tol) for p, rel in self.constraints)

    def satisfied_many(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        mask = np.ones(pts.shape[0], dtype=bool)
        for p, rel in self.constraints:
            mask &= rel.holds_many(p.evaluate_many(pts), tol)
        return mask

    def residuals(self, point: Sequence[float]) -> np.ndarray:
        return np.array([p.evaluate(point) for p, _ in self.constraints])

    # JSON embedding: {"vars": [...], "constraints": [{"poly": "...", "rel": "="}]}

    def to_json(self) -> dict:
        names = list(self.names)
        return {
            "vars": names,
            "constraints": [
                {"poly": print_poly(p, names), "rel": rel.value} for p, rel in self.constraints
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "PolySystem":
        names = list(data["vars"])
        constraints = []
        for item in data["constraints"]:
            p = parse_poly(item["poly"], names)
            constraints.append((p, Relation.from_symbol(item["rel"])))
        return PolySystem(len(names), tuple(constraints), tuple(names))
