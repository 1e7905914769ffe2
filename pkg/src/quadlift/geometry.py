"""Convex-hull machinery: convex combinations, membership, hull distances.

Membership is a phase-1 simplex feasibility LP with Bland's rule (tiny
instances, deterministic, cycling-proof).  Distances to hulls use the
min-norm-point algorithm; in the plane an exact convex-polygon path keeps
large batches cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError


@dataclass(frozen=True)
class SimplexWeights:
    """Nonnegative weights summing to one."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        if t.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(t < -1e-12):
            raise ValueError(f"negative weight {t.min()}")
        if abs(t.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {t.sum()!r}, expected 1")


def caratheodory_combine(points: Sequence[Sequence[float]], weights: SimplexWeights) -> np.ndarray:
    """The convex combination sum t_i * points_i."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise DimensionMismatchError("points must form a 2-d array")
    if pts.shape[0] != weights.t.shape[0]:
        raise DimensionMismatchError(
            f"{pts.shape[0]} points but {weights.t.shape[0]} weights"
        )
    return weights.t @ pts


# ---------------------------------------------------------------------------
# phase-1 simplex


def _phase1_simplex(A: np.ndarray, b: np.ndarray, max_pivots: int = 20000):
    """min sum(artificials) s.t. A x + artificials = b, x >= 0.

    Bland's rule on both the entering and leaving choices.  Returns
    (optimum, x, y) with y the dual vector of the original rows.
    """
    m, p = A.shape
    signs = np.where(b < 0, -1.0, 1.0)
    T = np.empty((m, p + m + 1))
    T[:, :p] = A * signs[:, None]
    T[:, p : p + m] = np.eye(m)
    T[:, -1] = b * signs
    basis = list(range(p, p + m))
    cost = np.zeros(p + m)
    cost[p:] = 1.0
    # reduced costs row for the artificial objective
    z = cost.copy()
    obj = 0.0
    for i in range(m):
        z[: p + m] -= T[i, : p + m]
        obj -= T[i, -1]
    # z holds c_j - sum of tableau rows (since initial basis costs are all 1)

    for _ in range(max_pivots):
        entering = -1
        for j in range(p + m):
            if z[j] < -1e-11:
                entering = j
                break
        if entering < 0:
            break
        col = T[:, entering]
        best_ratio, leaving = None, -1
        for i in range(m):
            if col[i] > 1e-11:
                ratio = T[i, -1] / col[i]
                if (
                    best_ratio is None
                    or ratio < best_ratio - 1e-13
                    or (abs(ratio - best_ratio) <= 1e-13 and basis[i] < basis[leaving])
                ):
                    best_ratio, leaving = ratio, i
        if leaving < 0:
            break  # unbounded; cannot happen for phase 1 but guard anyway
        pivot = T[leaving, entering]
        T[leaving] /= pivot
        for i in range(m):
            if i != leaving and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[leaving]
        z = z - z[entering] * T[leaving, : p + m]
        basis[leaving] = entering

    x = np.zeros(p)
    art = np.zeros(m)
    for i, j in enumerate(basis):
        if j < p:
            x[j] = T[i, -1]
        else:
            art[j - p] = T[i, -1]
    opt = float(art.sum())
    # duals of the scaled rows: y_i = 1 - reduced cost of artificial i; undo scaling
    y = (1.0 - z[p : p + m]) * signs
    return opt, x, y


@dataclass
class MembershipResult:
    inside: bool
    weights: Optional[SimplexWeights]
    separator: Optional[np.ndarray]
    residual: float

    def __bool__(self) -> bool:
        return self.inside

    def to_json(self) -> dict:
        return {
            "inside": self.inside,
            "weights": self.weights.t.tolist() if self.weights is not None else None,
            "separator": self.separator.tolist() if self.separator is not None else None,
            "residual": self.residual,
        }


def hull_membership(
    x: Sequence[float], points: Sequence[Sequence[float]], tol: float = 1e-9
) -> MembershipResult:
    """Is x (within an l1 feasibility residual of tol) in the hull of points?

    Solves the feasibility LP sum t_i p_i = x, sum t_i = 1, t >= 0 by a
    phase-1 simplex.  Inside: returns witnessing weights.  Outside: returns
    a separating functional s with s . x > max_i s . p_i.
    """
    pts = np.asarray(points, dtype=float)
    x = np.asarray(x, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DimensionMismatchError("need a nonempty 2-d point array")
    if x.shape != (pts.shape[1],):
        raise DimensionMismatchError("query point dimension mismatch")
    d = pts.shape[1]
    A = np.vstack([pts.T, np.ones(pts.shape[0])])
    b = np.concatenate([x, [1.0]])
    opt, t, y = _phase1_simplex(A, b)
    if opt <= tol:
        t = np.maximum(t, 0.0)
        total = t.sum()
        if total > 0:
            t = t / total
        return MembershipResult(True, SimplexWeights(t), None, opt)
    return MembershipResult(False, None, y[:d], opt)


# ---------------------------------------------------------------------------
# min-norm point (Wolfe) and hull distances


def _affine_min_norm(Q: np.ndarray) -> np.ndarray:
    """Weights beta (sum 1) minimizing |Q^T beta| over the affine hull of rows."""
    m = Q.shape[0]
    G = Q @ Q.T
    KKT = np.zeros((m + 1, m + 1))
    KKT[:m, :m] = G
    KKT[:m, m] = 1.0
    KKT[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
    return sol[:m]


def min_norm_point(points: np.ndarray, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """Wolfe's algorithm: the smallest-norm point of conv(points).

    Returns (z, weights).  Deterministic: ties break toward lower indices.
    """
    Q = np.asarray(points, dtype=float)
    m = Q.shape[0]
    norms_sq = np.einsum("ij,ij->i", Q, Q)
    scale = 1.0 + float(norms_sq.max(initial=0.0))
    corral = [int(np.argmin(norms_sq))]
    alpha = np.array([1.0])
    z = Q[corral[0]].copy()
    for _ in range(16 * m + 64):
        dots = Q @ z
        j = int(np.argmin(dots))
        if float(z @ z) <= dots[j] + tol * scale:
            break
        if j in corral:
            break
        corral.append(j)
        alpha = np.append(alpha, 0.0)
        while True:
            beta = _affine_min_norm(Q[corral])
            if np.all(beta >= -1e-12):
                alpha = np.maximum(beta, 0.0)
                break
            mask = beta < alpha
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(mask, alpha / (alpha - beta), np.inf)
            theta = min(1.0, float(ratios.min()))
            alpha = theta * beta + (1.0 - theta) * alpha
            keep = alpha > 1e-14
            if keep.all():
                alpha[np.argmin(alpha)] = 0.0
                keep = alpha > 0.0
            corral = [c for c, k in zip(corral, keep) if k]
            alpha = alpha[keep]
        z = alpha @ Q[corral]
    weights = np.zeros(m)
    weights[corral] = alpha
    return z, weights


def dist_to_hull(x: Sequence[float], points: np.ndarray) -> float:
    """Euclidean distance from x to the convex hull of the points."""
    pts = np.asarray(points, dtype=float)
    z, _ = min_norm_point(pts - np.asarray(x, dtype=float))
    return float(np.linalg.norm(z))


def _hull_polygon(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of planar points, counter-clockwise."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: List[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _dists_to_polygon(targets: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distances from target points to a convex polygon (zero inside)."""
    T = np.asarray(targets, dtype=float)
    if poly.shape[0] == 1:
        return np.linalg.norm(T - poly[0], axis=1)
    starts = poly
    ends = np.roll(poly, -1, axis=0)
    seg = ends - starts  # (h, 2)
    seg_len_sq = np.maximum(np.einsum("ij,ij->i", seg, seg), 1e-300)
    diff = T[:, None, :] - starts[None, :, :]  # (t, h, 2)
    u = np.clip(np.einsum("thj,hj->th", diff, seg) / seg_len_sq, 0.0, 1.0)
    proj = starts[None, :, :] + u[..., None] * seg[None, :, :]
    d = np.linalg.norm(T[:, None, :] - proj, axis=2).min(axis=1)
    if poly.shape[0] >= 3:
        # counter-clockwise polygon: inside when every edge cross product >= 0
        crosses = seg[None, :, 0] * diff[:, :, 1] - seg[None, :, 1] * diff[:, :, 0]
        inside = np.all(crosses >= -1e-12, axis=1)
        d[inside] = 0.0
    return d


def _directed_hull_distance(samples: np.ndarray, hull_of: np.ndarray) -> float:
    """max over samples of the distance to conv(hull_of)."""
    if samples.shape[1] == 2:
        poly = _hull_polygon(hull_of)
        return float(_dists_to_polygon(samples, poly).max(initial=0.0))
    return max((dist_to_hull(s, hull_of) for s in samples), default=0.0)


def hull_distance(samples_a: Sequence[Sequence[float]], samples_b: Sequence[Sequence[float]]) -> float:
    """Hausdorff-style distance between the hulls of two sample sets.

    Both directed distances are maxima over generators, which is exact for
    convex hulls since distance-to-a-convex-set is a convex function.
    """
    A = np.asarray(samples_a, dtype=float)
    B = np.asarray(samples_b, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] == 0 or B.shape[0] == 0:
        raise DimensionMismatchError("need nonempty 2-d sample arrays")
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError("sample dimensions differ")
    return max(_directed_hull_distance(A, B), _directed_hull_distance(B, A))
