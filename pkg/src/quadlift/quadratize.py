"""Degree reduction of polynomial systems to degree <= 2.

Every monomial of degree >= 3 appearing in a constraint is split as
``x_b * u_c`` where x_b is the lowest-indexed variable dividing it and u_c is
an auxiliary variable standing for the quotient monomial.  Auxiliary
variables are defined by quadratic equations ``u_a - x_b * v = 0``, one per
variable dividing the monomial of u_a, and the closure of quotients keeps
every such v available in the extended variable set.  The feasible region of
the rewritten system projects onto that of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError
from .poly import Exponents, Polynomial, PolySystem, Relation, grlex_key, print_poly


def _monomial_degree(exps: Exponents) -> int:
    return sum(exps)


def _lowest_divisor(exps: Exponents) -> int:
    for b, e in enumerate(exps):
        if e > 0:
            return b
    raise ValueError("constant monomial has no divisor")


def _quotient(exps: Exponents, b: int) -> Exponents:
    out = list(exps)
    out[b] -= 1
    return tuple(out)


@dataclass(frozen=True)
class SubstitutionTable:
    """Auxiliary-variable definitions created by quadratize.

    `defs[a]` is the monomial (over the original variables) represented by
    u_{a+1}.  `e_sets[a]` holds one defining polynomial per original variable
    dividing that monomial, over the extended variable space; its length is
    therefore exactly the divisor count of the monomial.
    """

    n_original: int
    defs: Tuple[Exponents, ...]
    e_sets: Tuple[Tuple[Polynomial, ...], ...]

    @property
    def n_aux(self) -> int:
        return len(self.defs)

    def index_of(self, monomial: Exponents) -> int:
        return self.defs.index(monomial)

    def monomial_values(self, point: np.ndarray) -> np.ndarray:
        """Values u_a(point) of every auxiliary monomial."""
        vals = np.empty(len(self.defs))
        for a, exps in enumerate(self.defs):
            v = 1.0
            for x, e in zip(point, exps):
                if e:
                    v *= x**e
            vals[a] = v
        return vals

    def monomial_values_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.ones((pts.shape[0], len(self.defs)))
        for a, exps in enumerate(self.defs):
            for i, e in enumerate(exps):
                if e:
                    out[:, a] *= pts[:, i] ** e
        return out


@dataclass(frozen=True)
class QuadSystem:
    """A degree-<=2 system over (x, u) together with its substitution table."""

    system: PolySystem
    table: SubstitutionTable
    n_original: int

    def __post_init__(self):
        if self.system.nvars != self.n_original + self.table.n_aux:
            raise DimensionMismatchError("system size does not match original + aux count")

    def to_json(self) -> dict:
        x_names = self.system.names[: self.n_original]
        return {
            "n": self.n_original,
            "vars": list(self.system.names),
            "aux": [
                {"monomial": print_poly(Polynomial.monomial(self.n_original, m), x_names)}
                for m in self.table.defs
            ],
            "constraints": [
                {"poly": print_poly(p, self.system.names), "rel": rel.value}
                for p, rel in self.system.constraints
            ],
            "e_sets": [
                [print_poly(p, self.system.names) for p in es] for es in self.table.e_sets
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "QuadSystem":
        from .poly import parse_poly

        n = data["n"]
        names = list(data["vars"])
        x_names = names[:n]
        constraints = tuple(
            (parse_poly(item["poly"], names), Relation.from_symbol(item["rel"]))
            for item in data["constraints"]
        )
        defs = []
        for item in data["aux"]:
            mono = parse_poly(item["monomial"], x_names)
            (exps, coef), = mono.terms.items()
            if coef != 1.0:
                raise ValueError(f"aux monomial {item['monomial']!r} must have coefficient 1")
            defs.append(exps)
        e_sets = tuple(
            tuple(parse_poly(text, names) for text in group) for group in data["e_sets"]
        )
        system = PolySystem(len(names), constraints, tuple(names))
        return QuadSystem(system, SubstitutionTable(n, tuple(defs), e_sets), n)


def _aux_closure(seeds: Sequence[Exponents]) -> List[Exponents]:
    """All degree->=2 quotient monomials reachable from the seeds, grlex-sorted."""
    found = set()
    stack = [m for m in seeds if _monomial_degree(m) >= 2]
    while stack:
        m = stack.pop()
        if m in found:
            continue
        found.add(m)
        for b, e in enumerate(m):
            if e > 0:
                q = _quotient(m, b)
                if _monomial_degree(q) >= 2 and q not in found:
                    stack.append(q)
    return sorted(found, key=grlex_key)


def quadratize(sys: PolySystem) -> QuadSystem:
    """Rewrite `sys` into an equivalent system of total degree <= 2.

    The output contains the rewritten original constraints (same relations)
    followed by the auxiliary defining equations; its feasible region
    projects onto the feasible region of `sys` under the first-n-coordinates
    projection, and any feasible point of `sys` lifts via `lift_point`.
    """
    n = sys.nvars
    seeds = []
    for p, _ in sys.constraints:
        for exps in p.terms:
            if _monomial_degree(exps) >= 3:
                seeds.append(_quotient(exps, _lowest_divisor(exps)))
    defs = tuple(_aux_closure(seeds))
    index: Dict[Exponents, int] = {m: a for a, m in enumerate(defs)}
    m_aux = len(defs)
    n_ext = n + m_aux

    def ext_x(exps: Exponents) -> Exponents:
        return exps + (0,) * m_aux

    def unit(i: int) -> List[int]:
        e = [0] * n_ext
        e[i] = 1
        return e

    # defining equations, one list entry per dividing original variable
    e_sets: List[Tuple[Polynomial, ...]] = []
    for a, mono in enumerate(defs):
        eqs = []
        for b, e in enumerate(mono):
            if e == 0:
                continue
            q = _quotient(mono, b)
            prod = unit(b)
            if _monomial_degree(q) == 1:
                prod[q.index(1)] += 1
            else:
                prod[n + index[q]] += 1
            eqs.append(
                Polynomial(n_ext, {tuple(unit(n + a)): 1.0, tuple(prod): -1.0})
            )
        e_sets.append(tuple(eqs))

    # rewrite the original constraints
    rewritten: List[Tuple[Polynomial, Relation]] = []
    for p, rel in sys.constraints:
        terms: Dict[Exponents, float] = {}
        for exps, coef in p.terms.items():
            if _monomial_degree(exps) <= 2:
                key = ext_x(exps)
            else:
                b = _lowest_divisor(exps)
                key_list = unit(b)
                key_list[n + index[_quotient(exps, b)]] += 1
                key = tuple(key_list)
            terms[key] = terms.get(key, 0.0) + coef
        rewritten.append((Polynomial(n_ext, terms), rel))

    # append the union of the defining equations, deduplicated as polynomials
    seen = set()
    for eqs in e_sets:
        for q in eqs:
            sig = tuple(sorted(q.terms.items()))
            if sig not in seen:
                seen.add(sig)
                rewritten.append((q, Relation.EQ))

    x_names = sys.names
    names = tuple(x_names) + tuple(f"u{a + 1}" for a in range(m_aux))
    quad_sys = PolySystem(n_ext, tuple(rewritten), names)
    table = SubstitutionTable(n, defs, tuple(e_sets))
    return QuadSystem(quad_sys, table, n)


def lift_point(p: Sequence[float], table: SubstitutionTable) -> np.ndarray:
    """Extend a point of the original space by the values of the aux monomials."""
    pt = np.asarray(p, dtype=float)
    if pt.shape != (table.n_original,):
        raise DimensionMismatchError(
            f"point has shape {pt.shape}, expected ({table.n_original},)"
        )
    return np.concatenate([pt, table.monomial_values(pt)])


@dataclass
class EquivalenceReport:
    """Outcome of sampling-based equivalence checking between F and its rewriting."""

    n_samples: int
    n_extended: int
    violations: List[dict] = field(default_factory=list)
    max_equation_residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_equivalence(
    sys: PolySystem,
    quad: QuadSystem,
    samples: Sequence[Sequence[float]],
    extended_samples: Sequence[Sequence[float]] = (),
    tol: float = 1e-9,
) -> EquivalenceReport:
    """Check membership agreement between `sys` and `quad` on sample points.

    For every x-space sample, membership in the original feasible region must
    match membership of the lifted point in the rewritten region.  Extended
    samples already in (x, u)-space are checked in the converse direction:
    when they satisfy the rewritten system, their x-projection must satisfy
    the original one (u-values are re-derived from the monomial identities).
    """
    pts = np.asarray(samples, dtype=float).reshape(-1, sys.nvars)
    report = EquivalenceReport(n_samples=pts.shape[0], n_extended=len(extended_samples))
    if pts.shape[0]:
        mask_orig = sys.satisfied_many(pts, tol)
        lifted = np.hstack([pts, quad.table.monomial_values_many(pts)])
        mask_quad = quad.system.satisfied_many(lifted, tol)
        eq_residual = np.zeros(pts.shape[0])
        for eqs in quad.table.e_sets:
            for q in eqs:
                eq_residual = np.maximum(eq_residual, np.abs(q.evaluate_many(lifted)))
        report.max_equation_residual = float(eq_residual.max(initial=0.0))
        for i in np.nonzero(mask_orig != mask_quad)[0]:
            report.violations.append(
                {
                    "kind": "forward",
                    "index": int(i),
                    "point": pts[i].tolist(),
                    "original": bool(mask_orig[i]),
                    "rewritten": bool(mask_quad[i]),
                    "equation_residual": float(eq_residual[i]),
                }
            )
    for j, ext in enumerate(extended_samples):
        ext = np.asarray(ext, dtype=float)
        if ext.shape != (quad.system.nvars,):
            raise DimensionMismatchError("extended sample has wrong dimension")
        if not quad.system.satisfied(ext, tol):
            continue
        x = ext[: quad.n_original]
        if not sys.satisfied(x, tol):
            report.violations.append(
                {
                    "kind": "converse",
                    "index": int(j),
                    "point": x.tolist(),
                    "residuals": sys.residuals(x).tolist(),
                }
            )
    return report
