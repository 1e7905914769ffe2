"""Semidefinite encoding of quadratic systems as rank-one slices of the PSD cone.

A quadratic system with k strict inequalities f_a > 0 and k equations
q_a = 0 over x in R^n is rewritten with fresh variables y, z, r into the
equation system

    f_a(1, x) = y_a,   y_a - r_a^2 = 0,   y_a * z_a = 1,   q_a(1, x) = 0,

whose solutions embed into symmetric N x N matrices, N = 3k + n + 1, as
rank-one outer products v (x) v with v = (1, x, y, z, r).  Each equation
turns into one affine constraint <X, C> = rhs on the PSD cone, and the
coordinate projection recovers x from the first row of X.  A compact
variant replaces inequalities by square-slack equations and pins trace(X)
to a bound B via one extra slack coordinate.

Matrix position convention: positions are 0-based here; coordinate label
l (the homogenizing coordinate is label 0) lives at position l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegreeError,
    DimensionMismatchError,
    LiftInfeasibleError,
    RelationError,
    TraceBoundError,
)
from .poly import Polynomial, PolySystem, Relation, quad_coeffs
from .quadratize import QuadSystem, lift_point, quadratize

STRICT = "strict"
COMPACT = "compact"


@dataclass(frozen=True)
class VariableLayout:
    """Coordinate slots of the lifted vector v.

    Strict variant: v = (x_0, x_1..x_n, y_1..y_k, z_1..z_k, r_1..r_k) with
    N = 3k + n + 1.  Compact variant: v = (x_0, x, u_1..u_aux, z_1..z_k, w)
    with N = n + n_aux + k + 2, where u are quadratization variables, z are
    square slacks for the inequalities and w absorbs the trace bound.
    """

    variant: str
    n: int
    k: int
    n_aux: int = 0

    def __post_init__(self):
        if self.variant not in (STRICT, COMPACT):
            raise ValueError(f"unknown layout variant {self.variant!r}")
        if self.variant == STRICT and self.n_aux:
            raise ValueError("strict layout has no aux block")

    @property
    def N(self) -> int:
        if self.variant == STRICT:
            return 3 * self.k + self.n + 1
        return self.n + self.n_aux + self.k + 2

    # 0-based positions; a and c are 1-based within their blocks
    def pos_x(self, b: int) -> int:
        return b

    def pos_y(self, a: int) -> int:
        assert self.variant == STRICT
        return self.n + a

    def pos_z(self, a: int) -> int:
        if self.variant == STRICT:
            return self.n + self.k + a
        return self.n + self.n_aux + a

    def pos_r(self, a: int) -> int:
        assert self.variant == STRICT
        return self.n + 2 * self.k + a

    def pos_u(self, c: int) -> int:
        assert self.variant == COMPACT
        return self.n + c

    @property
    def pos_w(self) -> int:
        assert self.variant == COMPACT
        return self.N - 1

    def slots(self) -> Dict[str, List[int]]:
        if self.variant == STRICT:
            return {
                "x0": [0],
                "x": list(range(1, self.n + 1)),
                "y": [self.pos_y(a) for a in range(1, self.k + 1)],
                "z": [self.pos_z(a) for a in range(1, self.k + 1)],
                "r": [self.pos_r(a) for a in range(1, self.k + 1)],
            }
        return {
            "x0": [0],
            "x": list(range(1, self.n + 1)),
            "u": [self.pos_u(c) for c in range(1, self.n_aux + 1)],
            "z": [self.pos_z(a) for a in range(1, self.k + 1)],
            "w": [self.pos_w],
        }

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "n": self.n,
            "k": self.k,
            "n_aux": self.n_aux,
            "N": self.N,
            "slots": self.slots(),
        }

    @staticmethod
    def from_json(data: dict) -> "VariableLayout":
        return VariableLayout(data["variant"], data["n"], data["k"], data.get("n_aux", 0))


def pair_matrix(N: int, i: int, j: int) -> np.ndarray:
    """Symmetric matrix picking out v_i * v_j from a rank-one v (x) v.

    Off-diagonal pairs carry 1/2 at both mirrored entries; i == j gives the
    diagonal unit, so <v (x) v, pair_matrix(N, i, j)> = v_i * v_j exactly.
    """
    A = np.zeros((N, N))
    if i == j:
        A[i, i] = 1.0
    else:
        A[i, j] = A[j, i] = 0.5
    return A


def hom_constraint_matrix(p: Polynomial, N: int, label_offset: int = 0) -> np.ndarray:
    """Matrix C with <v (x) v, C> = p(v_(1+off), ..., v_(nvars+off)) when v_0 = 1.

    The polynomial's variable i (0-based) is laid out at coordinate label
    i + 1 + label_offset; the constant rides on the homogenizing slot 0.
    """
    qc = quad_coeffs(p)
    C = np.zeros((N, N))
    for (i, j), c in qc.entries.items():
        pi = i + label_offset if i > 0 else 0
        pj = j + label_offset if j > 0 else 0
        C += c * pair_matrix(N, pi, pj)
    return C


@dataclass(frozen=True)
class StrictEquations:
    """Equation-only form of an EQ/GT quadratic system, padded to k pairs.

    `f_polys[a]` is the left side of the a-th strict inequality (a trivial 1
    where padded) and `q_polys[a]` the a-th equation (zero where padded);
    both are degree-<=2 polynomials over the original x variables.
    """

    n: int
    k: int
    f_polys: Tuple[Polynomial, ...]
    q_polys: Tuple[Polynomial, ...]

    def equation_system(self) -> PolySystem:
        """The equations over (x, y, z, r), for inspection and sampling checks."""
        n, k = self.n, self.k
        n_ext = n + 3 * k
        layout = VariableLayout(STRICT, n, k)

        def unit(i: int) -> List[int]:
            e = [0] * n_ext
            e[i] = 1
            return e

        eqs: List[Tuple[Polynomial, Relation]] = []
        for a in range(1, k + 1):
            f = self.f_polys[a - 1].extended(n_ext)
            y = Polynomial(n_ext, {tuple(unit(layout.pos_y(a) - 1)): 1.0})
            eqs.append((f - y, Relation.EQ))
        for a in range(1, k + 1):
            q = self.q_polys[a - 1]
            if not q.is_zero():
                eqs.append((q.extended(n_ext), Relation.EQ))
        for a in range(1, k + 1):
            y = unit(layout.pos_y(a) - 1)
            r2 = [0] * n_ext
            r2[layout.pos_r(a) - 1] = 2
            eqs.append((Polynomial(n_ext, {tuple(y): 1.0, tuple(r2): -1.0}), Relation.EQ))
        for a in range(1, k + 1):
            yz = [0] * n_ext
            yz[layout.pos_y(a) - 1] = 1
            yz[layout.pos_z(a) - 1] = 1
            eqs.append(
                (Polynomial(n_ext, {tuple(yz): 1.0, (0,) * n_ext: -1.0}), Relation.EQ)
            )
        names = tuple(
            [f"x{i}" for i in range(1, n + 1)]
            + [f"y{a}" for a in range(1, k + 1)]
            + [f"z{a}" for a in range(1, k + 1)]
            + [f"r{a}" for a in range(1, k + 1)]
        )
        return PolySystem(n_ext, tuple(eqs), names)


def strict_to_equations(q) -> Tuple[StrictEquations, VariableLayout]:
    """Convert an EQ/GT quadratic system into the padded equation form.

    Accepts a QuadSystem or a plain PolySystem of degree <= 2.  Relations
    other than EQ and GT must be normalized away first (see
    normalize_relations).  Inequality and equation counts are padded to a
    common k >= 1 with the trivial inequality 1 > 0 and the zero equation.
    """
    sys = q.system if isinstance(q, QuadSystem) else q
    if sys.max_degree() > 2:
        raise DegreeError("system must be quadratized before encoding")
    gts: List[Polynomial] = []
    eqs: List[Polynomial] = []
    for p, rel in sys.constraints:
        if rel is Relation.GT:
            gts.append(p)
        elif rel is Relation.EQ:
            eqs.append(p)
        else:
            raise RelationError(
                f"relation {rel.value!r} not supported by the strict encoding; "
                "normalize_relations first"
            )
    n = sys.nvars
    k = max(len(gts), len(eqs), 1)
    while len(gts) < k:
        gts.append(Polynomial.constant(n, 1.0))
    while len(eqs) < k:
        eqs.append(Polynomial.zero(n))
    strict = StrictEquations(n, k, tuple(gts), tuple(eqs))
    return strict, VariableLayout(STRICT, n, k)


@dataclass(frozen=True)
class CompactContext:
    """Data needed to lift original points into a compact encoding."""

    quad: QuadSystem
    ge_polys: Tuple[Polynomial, ...]  # over (x, u)
    eq_polys: Tuple[Polynomial, ...]  # over (x, u)


@dataclass
class PseudoSpecEncoding:
    """Affine constraints carving the rank-one feasible slice out of the PSD cone."""

    layout: VariableLayout
    matrices: List[np.ndarray]
    rhs: np.ndarray
    labels: List[str]
    projection_mats: List[np.ndarray]
    B: Optional[float] = None
    compact_ctx: Optional[CompactContext] = None

    def residuals(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != (self.layout.N, self.layout.N):
            raise DimensionMismatchError(
                f"matrix has shape {X.shape}, layout needs ({self.layout.N}, {self.layout.N})"
            )
        return np.array([float(np.vdot(A, X)) - b for A, b in zip(self.matrices, self.rhs)])

    def to_json(self) -> dict:
        def triplets(A):
            out = []
            for i in range(A.shape[0]):
                for j in range(i, A.shape[1]):
                    if A[i, j] != 0.0:
                        out.append({"i": i, "j": j, "v": A[i, j]})
            return out

        data = {
            "layout": self.layout.to_json(),
            "constraints": [
                {"label": lab, "rhs": float(b), "entries": triplets(A)}
                for lab, A, b in zip(self.labels, self.matrices, self.rhs)
            ],
            "projection": [triplets(P) for P in self.projection_mats],
        }
        if self.B is not None:
            data["B"] = self.B
        return data

    @staticmethod
    def from_json(data: dict) -> "PseudoSpecEncoding":
        layout = VariableLayout.from_json(data["layout"])
        N = layout.N

        def from_triplets(entries):
            A = np.zeros((N, N))
            for t in entries:
                A[t["i"], t["j"]] = t["v"]
                A[t["j"], t["i"]] = t["v"]
            return A

        matrices, rhs, labels = [], [], []
        for item in data["constraints"]:
            matrices.append(from_triplets(item["entries"]))
            rhs.append(item["rhs"])
            labels.append(item["label"])
        projection = [from_triplets(entries) for entries in data["projection"]]
        return PseudoSpecEncoding(
            layout, matrices, np.array(rhs), labels, projection, B=data.get("B")
        )


def build_encoding(eqs: StrictEquations, layout: VariableLayout) -> PseudoSpecEncoding:
    """Assemble the constraint matrix families for a strict equation system.

    Per inequality/equation pair a: F_a encodes f_a(1, x) - y_a = 0,
    Q_a encodes q_a(1, x) = 0, G_a = Y_a - g_a encodes y_a - r_a^2 = 0,
    and <X, YZ_a> = 1 encodes y_a * z_a = 1; <X, A_0> = 1 pins the
    homogenizing coordinate.  The projection matrices realize
    X -> (<X, A_{0,1}>, ..., <X, A_{0,n}>).
    """
    if layout.variant != STRICT or layout.n != eqs.n or layout.k != eqs.k:
        raise DimensionMismatchError("layout does not match the equation system")
    n, k, N = layout.n, layout.k, layout.N
    matrices: List[np.ndarray] = []
    rhs: List[float] = []
    labels: List[str] = []

    for a in range(1, k + 1):
        Y_a = pair_matrix(N, 0, layout.pos_y(a))
        F_a = hom_constraint_matrix(eqs.f_polys[a - 1], N) - Y_a
        matrices.append(F_a)
        rhs.append(0.0)
        labels.append(f"F_{a}")
    for a in range(1, k + 1):
        matrices.append(hom_constraint_matrix(eqs.q_polys[a - 1], N))
        rhs.append(0.0)
        labels.append(f"Q_{a}")
    for a in range(1, k + 1):
        Y_a = pair_matrix(N, 0, layout.pos_y(a))
        g_a = pair_matrix(N, layout.pos_r(a), layout.pos_r(a))
        matrices.append(Y_a - g_a)
        rhs.append(0.0)
        labels.append(f"G_{a}")
    matrices.append(pair_matrix(N, 0, 0))
    rhs.append(1.0)
    labels.append("A_0")
    for a in range(1, k + 1):
        matrices.append(pair_matrix(N, layout.pos_y(a), layout.pos_z(a)))
        rhs.append(1.0)
        labels.append(f"YZ_{a}")

    projection = [pair_matrix(N, 0, b) for b in range(1, n + 1)]
    return PseudoSpecEncoding(layout, matrices, np.array(rhs), labels, projection)


def lift(
    x: Sequence[float], eqs: StrictEquations, layout: VariableLayout
) -> Tuple[np.ndarray, np.ndarray]:
    """Rank-one lift of a strictly feasible point.

    v carries (1, x, y, z, r) with y_a = f_a(1, x), z_a = 1/y_a and
    r_a = sqrt(y_a); any a with f_a(1, x) <= 0 raises LiftInfeasibleError.
    Returns (v, v (x) v).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (layout.n,):
        raise DimensionMismatchError(f"point has shape {x.shape}, expected ({layout.n},)")
    v = np.zeros(layout.N)
    v[0] = 1.0
    v[1 : layout.n + 1] = x
    for a in range(1, layout.k + 1):
        y = eqs.f_polys[a - 1].evaluate(x)
        if y <= 0.0:
            raise LiftInfeasibleError(a, y)
        v[layout.pos_y(a)] = y
        v[layout.pos_z(a)] = 1.0 / y
        v[layout.pos_r(a)] = math.sqrt(y)
    return v, np.outer(v, v)


def project(X: np.ndarray, enc: PseudoSpecEncoding) -> np.ndarray:
    """The n coordinate inner products <X, A_{0,b}>."""
    X = np.asarray(X, dtype=float)
    N = enc.layout.N
    if X.shape != (N, N):
        raise DimensionMismatchError(f"matrix has shape {X.shape}, expected ({N}, {N})")
    return np.array([float(np.vdot(P, X)) for P in enc.projection_mats])


@dataclass
class MemberReport:
    ok: bool
    psd_ok: bool
    rank_one_ok: bool
    residual_ok: bool
    min_eig: float
    second_eig: float
    max_residual: float
    worst_constraint: Optional[str] = None


def check_rank_one_member(
    X: np.ndarray, enc: PseudoSpecEncoding, tol: float = 1e-7
) -> MemberReport:
    """PSD + numerically-rank-one + all affine residuals within tol."""
    X = np.asarray(X, dtype=float)
    eigvals = np.linalg.eigvalsh(0.5 * (X + X.T))
    norm = float(np.linalg.norm(X))
    min_eig = float(eigvals[0])
    second = float(eigvals[-2]) if X.shape[0] > 1 else 0.0
    res = enc.residuals(X)
    worst = int(np.argmax(np.abs(res))) if len(res) else None
    psd_ok = min_eig >= -tol
    rank_ok = second <= tol * max(norm, 1e-300)
    res_ok = bool(np.all(np.abs(res) <= tol))
    return MemberReport(
        ok=psd_ok and rank_ok and res_ok,
        psd_ok=psd_ok,
        rank_one_ok=rank_ok,
        residual_ok=res_ok,
        min_eig=min_eig,
        second_eig=second,
        max_residual=float(np.max(np.abs(res))) if len(res) else 0.0,
        worst_constraint=enc.labels[worst] if worst is not None else None,
    )


# ---------------------------------------------------------------------------
# relation normalization (strict path)


@dataclass(frozen=True)
class NormalizedSystem:
    """EQ/GT-only system, with square slacks absorbing GE constraints.

    GE constraints f >= 0 become equations f - s^2 = 0 over an extended
    variable block; `slack_sources[j]` is the GE polynomial (over the input
    variables) that defines slack j, so feasible points extend by
    s_j = sqrt(f_j(x)).
    """

    system: PolySystem
    n_input: int
    slack_sources: Tuple[Polynomial, ...]

    def extend_point(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_input,):
            raise DimensionMismatchError("point dimension mismatch")
        slacks = []
        for j, f in enumerate(self.slack_sources):
            val = f.evaluate(x)
            if val < 0.0:
                raise LiftInfeasibleError(j, val)
            slacks.append(math.sqrt(val))
        return np.concatenate([x, np.array(slacks)])


def normalize_relations(sys: PolySystem) -> NormalizedSystem:
    """Rewrite LT/LE/GE away: LT negates to GT, LE negates to GE, and each GE
    f >= 0 becomes the equation f - s^2 = 0 with a fresh square slack."""
    staged: List[Tuple[Polynomial, Relation]] = []
    for p, rel in sys.constraints:
        if rel is Relation.LT:
            staged.append((-p, Relation.GT))
        elif rel is Relation.LE:
            staged.append((-p, Relation.GE))
        else:
            staged.append((p, rel))
    ge_polys = [p for p, rel in staged if rel is Relation.GE]
    n_ext = sys.nvars + len(ge_polys)
    constraints: List[Tuple[Polynomial, Relation]] = []
    slack_idx = 0
    for p, rel in staged:
        if rel is Relation.GE:
            sq = [0] * n_ext
            sq[sys.nvars + slack_idx] = 2
            slack_idx += 1
            constraints.append(
                (p.extended(n_ext) + Polynomial(n_ext, {tuple(sq): -1.0}), Relation.EQ)
            )
        else:
            constraints.append((p.extended(n_ext), rel))
    names = tuple(sys.names) + tuple(f"s{j + 1}" for j in range(len(ge_polys)))
    return NormalizedSystem(
        PolySystem(n_ext, tuple(constraints), names), sys.nvars, tuple(ge_polys)
    )


# ---------------------------------------------------------------------------
# compact variant


def encode_compact(
    sys: PolySystem,
    B: Optional[float] = None,
    box: Optional[Sequence[Tuple[float, float]]] = None,
    n_samples: int = 10000,
    margin: float = 1.5,
    rng: Optional[np.random.Generator] = None,
) -> PseudoSpecEncoding:
    """Trace-bounded encoding of a compact GE/EQ system.

    The system is quadratized, every inequality f >= 0 becomes the equation
    f(1, x, u) - z_i^2 = 0, and one slack coordinate w plus the constraint
    trace(X) = B realize the norm equation |(x_0, x, u, z, w)|^2 = B.  When B
    is not supplied it is chosen as margin * (1 + max lifted squared norm)
    over feasible points rejection-sampled from `box`.
    """
    for p, rel in sys.constraints:
        if rel not in (Relation.GE, Relation.EQ):
            raise RelationError(
                f"compact encoding accepts GE/EQ constraints only, got {rel.value!r}"
            )
    quad = quadratize(sys)
    ge_polys = tuple(p for p, rel in quad.system.constraints if rel is Relation.GE)
    eq_polys = tuple(p for p, rel in quad.system.constraints if rel is Relation.EQ)
    n, n_aux, k = sys.nvars, quad.table.n_aux, len(ge_polys)
    layout = VariableLayout(COMPACT, n, k, n_aux)
    N = layout.N
    ctx = CompactContext(quad, ge_polys, eq_polys)

    if B is None:
        if box is None:
            raise ValueError("auto B selection needs a sampling box")
        rng = rng if rng is not None else np.random.default_rng(0)
        lo = np.array([b[0] for b in box], dtype=float)
        hi = np.array([b[1] for b in box], dtype=float)
        pts = rng.uniform(lo, hi, size=(n_samples, n))
        feasible = pts[sys.satisfied_many(pts)]
        if feasible.shape[0] == 0:
            raise ValueError("no feasible samples found in the box; pass B explicitly")
        u_vals = quad.table.monomial_values_many(feasible)
        z_sq = np.zeros(feasible.shape[0])
        ext = np.hstack([feasible, u_vals])
        for f in ge_polys:
            z_sq += np.maximum(f.evaluate_many(ext), 0.0)
        sq_norm = 1.0 + np.sum(feasible**2, axis=1) + np.sum(u_vals**2, axis=1) + z_sq
        B = margin * (1.0 + float(sq_norm.max()))

    matrices: List[np.ndarray] = []
    rhs: List[float] = []
    labels: List[str] = []
    for i, f in enumerate(ge_polys, start=1):
        C = hom_constraint_matrix(f, N) - pair_matrix(N, layout.pos_z(i), layout.pos_z(i))
        matrices.append(C)
        rhs.append(0.0)
        labels.append(f"Fz_{i}")
    for j, q in enumerate(eq_polys, start=1):
        matrices.append(hom_constraint_matrix(q, N))
        rhs.append(0.0)
        labels.append(f"Q_{j}")
    matrices.append(pair_matrix(N, 0, 0))
    rhs.append(1.0)
    labels.append("A_0")
    matrices.append(np.eye(N))
    rhs.append(float(B))
    labels.append("trace")

    projection = [pair_matrix(N, 0, b) for b in range(1, n + 1)]
    return PseudoSpecEncoding(
        layout, matrices, np.array(rhs), labels, projection, B=float(B), compact_ctx=ctx
    )


def lift_compact(
    x: Sequence[float], enc: PseudoSpecEncoding, tol: float = 1e-9
) -> Tuple[np.ndarray, np.ndarray]:
    """Lift a feasible point of a compact system into its encoding.

    Requires enc to have been produced by encode_compact.  Raises
    LiftInfeasibleError when an inequality is violated beyond tol and
    TraceBoundError when B cannot absorb the lifted squared norm.
    """
    if enc.compact_ctx is None or enc.B is None:
        raise ValueError("encoding was not built by encode_compact")
    ctx, layout = enc.compact_ctx, enc.layout
    x = np.asarray(x, dtype=float)
    if x.shape != (layout.n,):
        raise DimensionMismatchError(f"point has shape {x.shape}, expected ({layout.n},)")
    ext = lift_point(x, ctx.quad.table)
    v = np.zeros(layout.N)
    v[0] = 1.0
    v[1 : layout.n + 1] = x
    for c in range(1, layout.n_aux + 1):
        v[layout.pos_u(c)] = ext[layout.n + c - 1]
    for i, f in enumerate(ctx.ge_polys, start=1):
        val = f.evaluate(ext)
        if val < -tol * (1.0 + abs(val)):
            raise LiftInfeasibleError(i, val)
        v[layout.pos_z(i)] = math.sqrt(max(val, 0.0))
    partial = float(np.dot(v, v))
    w_sq = enc.B - partial
    if w_sq < -tol * enc.B:
        raise TraceBoundError(partial, enc.B)
    v[layout.pos_w] = math.sqrt(max(w_sq, 0.0))
    return v, np.outer(v, v)
