"""Symmetric-matrix numerics and PSD-cone geometry.

Spectrahedra are handled in two interchangeable forms: slice form (affine
constraints <A_i, X> = a_i on the PSD cone) and pencil form (the PSD locus
of M_0 + sum x_i M_i).  Feasibility uses alternating projections between
the cone and the affine subspace; linear minimization bisects on level-set
feasibility.  Problem sizes are desk scale, so dense eigendecompositions
throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError

_SQRT2 = np.sqrt(2.0)


def sym(M: np.ndarray) -> np.ndarray:
    """Symmetric part (M + M^T) / 2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def frobenius(A: np.ndarray, B: np.ndarray) -> float:
    """Trace pairing <A, B> = trace(A B) for symmetric A, B."""
    return float(np.vdot(A, B))


def eigh(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    return np.linalg.eigh(sym(M))


def svec(M: np.ndarray) -> np.ndarray:
    """Isometric vectorization of a symmetric matrix (off-diagonals scaled by sqrt 2)."""
    N = M.shape[0]
    iu = np.triu_indices(N)
    out = M[iu].copy()
    out[iu[0] != iu[1]] *= _SQRT2
    return out


def unsvec(v: np.ndarray, N: int) -> np.ndarray:
    M = np.zeros((N, N))
    iu = np.triu_indices(N)
    vals = v.copy()
    off = iu[0] != iu[1]
    vals = np.array(vals, dtype=float)
    vals[off] /= _SQRT2
    M[iu] = vals
    M.T[iu] = vals
    return M


@dataclass(frozen=True)
class Pencil:
    """Affine matrix family M0 + sum x_i * mats[i]."""

    M0: np.ndarray
    mats: Tuple[np.ndarray, ...]

    @property
    def N(self) -> int:
        return self.M0.shape[0]

    @property
    def nparams(self) -> int:
        return len(self.mats)

    def at(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        M = self.M0.copy()
        for xi, Mi in zip(x, self.mats):
            M = M + xi * Mi
        return M

    def at_many(self, pts: np.ndarray) -> np.ndarray:
        """Stacked pencil values, shape (m, N, N)."""
        pts = np.asarray(pts, dtype=float)
        out = np.broadcast_to(self.M0, (pts.shape[0],) + self.M0.shape).copy()
        for i, Mi in enumerate(self.mats):
            out += pts[:, i, None, None] * Mi
        return out


@dataclass(frozen=True)
class SpectrahedronSpec:
    """Slice form S_N^+ with constraints <A_i, X> = a_i, optionally born from a pencil."""

    N: int
    constraints: Tuple[Tuple[np.ndarray, float], ...]
    pencil: Optional[Pencil] = None

    def __post_init__(self):
        for A, _ in self.constraints:
            if A.shape != (self.N, self.N):
                raise DimensionMismatchError("constraint matrix size mismatch")


def pencil_to_slice(pencil: Pencil, tol: float = 1e-12) -> SpectrahedronSpec:
    """Constraints pinning X to the affine span of the pencil family."""
    N = pencil.N
    dim = N * (N + 1) // 2
    if pencil.mats:
        rows = np.array([svec(sym(M)) for M in pencil.mats])
        _, s, vt = np.linalg.svd(rows, full_matrices=True)
        rank = int(np.sum(s > tol * max(s.max(initial=1.0), 1.0)))
        complement = vt[rank:]
    else:
        complement = np.eye(dim)
    base = svec(sym(pencil.M0))
    constraints = tuple(
        (unsvec(c, N), float(np.dot(c, base))) for c in complement
    )
    return SpectrahedronSpec(N, constraints, pencil=pencil)


def slice_to_pencil(spec: SpectrahedronSpec, tol: float = 1e-10) -> Pencil:
    """Affine parametrization of a slice's subspace (min-norm base point)."""
    N = spec.N
    if not spec.constraints:
        dim = N * (N + 1) // 2
        basis = np.eye(dim)
        return Pencil(np.zeros((N, N)), tuple(unsvec(b, N) for b in basis))
    R = np.array([svec(sym(A)) for A, _ in spec.constraints])
    a = np.array([b for _, b in spec.constraints])
    x0, residual, _, _ = np.linalg.lstsq(R, a, rcond=None)
    if np.linalg.norm(R @ x0 - a) > tol * (1.0 + np.linalg.norm(a)):
        raise ValueError("slice constraints are inconsistent; no base point exists")
    _, s, vt = np.linalg.svd(R, full_matrices=True)
    rank = int(np.sum(s > tol * max(s.max(initial=1.0), 1.0)))
    null_basis = vt[rank:]
    return Pencil(unsvec(x0, N), tuple(unsvec(b, N) for b in null_basis))


def project_psd(M: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix: eigenvalue clipping."""
    w, V = eigh(M)
    w = np.maximum(w, 0.0)
    return (V * w) @ V.T


def rank_one_factor(X: np.ndarray, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Factor v with X ~ v (x) v, or None when X is not numerically rank one.

    Requires the smallest eigenvalue >= -tol and the second-largest at most
    tol times the largest.  The sign of v makes its first nonzero entry
    positive.  The zero matrix counts as rank 0 and is rejected.
    """
    X = sym(X)
    w, V = eigh(X)
    lam_max = w[-1]
    if lam_max <= tol:
        return None  # rank 0 (or negative semidefinite)
    if w[0] < -tol:
        return None
    if X.shape[0] > 1 and w[-2] > tol * lam_max:
        return None
    v = np.sqrt(lam_max) * V[:, -1]
    thresh = 1e-12 * np.abs(v).max()
    for vi in v:
        if abs(vi) > thresh:
            if vi < 0:
                v = -v
            break
    return v


@dataclass
class FeasibilityResult:
    feasible: bool
    X: np.ndarray
    iterations: int
    max_residual: float
    min_eig: float
    gap: float  # Frobenius distance from the affine iterate to the PSD cone

    def __bool__(self) -> bool:
        return self.feasible


class _AffineProjector:
    """Orthogonal projection onto {X : <A_i, X> = a_i} in svec coordinates."""

    def __init__(self, spec: SpectrahedronSpec):
        self.N = spec.N
        self.R = np.array([svec(sym(A)) for A, _ in spec.constraints])
        self.a = np.array([b for _, b in spec.constraints])
        if self.R.size:
            U, s, Vt = np.linalg.svd(self.R, full_matrices=False)
            keep = s > 1e-13 * max(s.max(initial=1.0), 1.0)
            self.U = U[:, keep]
            self.s = s[keep]
            self.Vt = Vt[keep]
        else:
            self.U = self.s = self.Vt = None

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.U is None:
            return X
        x = svec(X)
        r = self.R @ x - self.a
        x = x - self.Vt.T @ ((self.U.T @ r) / self.s)
        return unsvec(x, self.N)

    def residual(self, X: np.ndarray) -> float:
        if self.U is None:
            return 0.0
        return float(np.abs(self.R @ svec(X) - self.a).max(initial=0.0))


def feasibility(
    spec: SpectrahedronSpec,
    tol: float = 1e-9,
    max_iters: int = 50000,
) -> FeasibilityResult:
    """Search for X ⪰ 0 on the affine slice by alternating projections.

    Projects back and forth between the PSD cone (eigenvalue clipping) and
    the affine subspace (least squares).  Stops when successive affine
    iterates move less than tol/10 in Frobenius norm; the result is audited
    independently by an eigenvalue and residual check.
    """
    if spec.pencil is not None and not spec.constraints:
        spec = pencil_to_slice(spec.pencil)
    proj = _AffineProjector(spec)
    X = proj(np.zeros((spec.N, spec.N)))
    iters = 0
    for iters in range(1, max_iters + 1):
        P = project_psd(X)
        X_next = proj(P)
        delta = float(np.linalg.norm(X_next - X))
        X = X_next
        if delta <= tol / 10.0:
            break
    min_eig = float(np.linalg.eigvalsh(sym(X))[0])
    gap = float(np.linalg.norm(X - project_psd(X)))
    max_res = proj.residual(X)
    feasible = min_eig >= -tol and max_res <= tol
    return FeasibilityResult(feasible, X, iters, max_res, min_eig, gap)


@dataclass
class MinimizeResult:
    status: str  # "ok" | "infeasible" | "unbounded"
    value: Optional[float]
    X: Optional[np.ndarray]
    bisections: int = 0


class _LevelProjector:
    """Exact projection onto {affine slice} ∩ {<C, X> <= t}.

    A subspace-plus-one-halfspace projection has a closed form: project onto
    the subspace; if the halfspace is violated, project onto the subspace
    with the level constraint active.  Both pseudoinverses are precomputed,
    so only the level t changes across bisection steps.
    """

    def __init__(self, spec: SpectrahedronSpec, C: np.ndarray):
        self.N = spec.N
        dim = spec.N * (spec.N + 1) // 2
        self.R = (
            np.array([svec(sym(A)) for A, _ in spec.constraints])
            if spec.constraints
            else np.zeros((0, dim))
        )
        self.a = np.array([b for _, b in spec.constraints])
        self.c = svec(sym(C))
        self.R_pinv = np.linalg.pinv(self.R)
        self.R_aug = np.vstack([self.R, self.c[None, :]])
        self.R_aug_pinv = np.linalg.pinv(self.R_aug)
        self.t = 0.0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        x = svec(X)
        x1 = x + self.R_pinv @ (self.a - self.R @ x)
        if float(np.dot(self.c, x1)) <= self.t:
            return unsvec(x1, self.N)
        rhs = np.concatenate([self.a, [self.t]])
        x2 = x + self.R_aug_pinv @ (rhs - self.R_aug @ x)
        return unsvec(x2, self.N)

    def residual(self, X: np.ndarray) -> float:
        if self.R.shape[0] == 0:
            return 0.0
        return float(np.abs(self.R @ svec(X) - self.a).max(initial=0.0))


def _level_feasible(
    proj: _LevelProjector,
    C: np.ndarray,
    t: float,
    X0: np.ndarray,
    tol: float,
    max_iters: int,
) -> Tuple[bool, np.ndarray]:
    """Douglas-Rachford splitting between the PSD cone and the level slab.

    Consistent instances drive the step to zero; inconsistent ones stabilize
    the step at the gap vector, which is detected as a stall and exits early.
    """
    proj.t = t
    Z = X0.copy()
    prev_step = None
    for _ in range(max_iters):
        X = project_psd(Z)
        Y = proj(2.0 * X - Z)
        step = Y - X
        Z = Z + step
        step_norm = float(np.linalg.norm(step))
        if step_norm <= tol * 1e-3:
            break
        if prev_step is not None and step_norm > 10.0 * tol * (1.0 + abs(t)):
            if float(np.linalg.norm(step - prev_step)) <= 1e-10 * step_norm:
                break  # stalled at a positive gap: inconsistent
        prev_step = step
    X = project_psd(Z)
    cand = proj(X)
    min_eig = float(np.linalg.eigvalsh(sym(cand))[0])
    value = float(np.vdot(C, cand))
    scale = 1.0 + abs(t)
    ok = (
        min_eig >= -tol * scale
        and proj.residual(cand) <= tol * scale
        and value <= t + tol * scale
    )
    return ok, cand


def minimize_linear(
    C: np.ndarray,
    spec: SpectrahedronSpec,
    tol: float = 1e-6,
    trace_bound: Optional[float] = None,
    inner_iters: int = 2500,
    inner_tol: Optional[float] = None,
) -> MinimizeResult:
    """Minimize <C, X> over a bounded spectrahedron by level-set bisection.

    Needs a nonempty bounded feasible set; the initial lower bracket comes
    from -(1 + |C|_F)(1 + B) with B the trace bound when available, and an
    unbounded report is returned when even that level stays feasible.
    """
    if spec.pencil is not None and not spec.constraints:
        spec = pencil_to_slice(spec.pencil)
    C = sym(np.asarray(C, dtype=float))
    if inner_tol is None:
        inner_tol = max(tol / 10.0, 1e-10)
    proj = _LevelProjector(spec, C)
    base = feasibility(spec, tol=min(inner_tol, 1e-9))
    if not base.feasible:
        return MinimizeResult("infeasible", None, None)
    X_best = base.X
    hi = float(np.vdot(C, X_best))
    B_eff = trace_bound if trace_bound is not None else 1.0 + 10.0 * float(
        np.linalg.norm(X_best)
    )
    lo = -(1.0 + float(np.linalg.norm(C))) * (1.0 + B_eff)
    if lo >= hi:
        lo = hi - 1.0
    ok_lo, X_lo = _level_feasible(proj, C, lo, X_best, inner_tol, inner_iters)
    if ok_lo:
        return MinimizeResult("unbounded", None, X_lo)
    steps = 0
    while hi - lo > tol / 2.0 and steps < 80:
        mid = 0.5 * (hi + lo)
        ok, X_mid = _level_feasible(proj, C, mid, X_best, inner_tol, inner_iters)
        if ok:
            hi = mid
            X_best = X_mid
        else:
            lo = mid
        steps += 1
    return MinimizeResult("ok", hi, X_best, bisections=steps)
