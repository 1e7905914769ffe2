"""Rank-one locus enumeration and the QCQP value-equivalence harness.

Enumeration grid-scans a pencil's parameter box for cells where the two
smallest eigenvalues nearly vanish, then runs Newton's method on the
factored system M(x) = w (x) w.  The eigenvalue gap detects candidates far
more reliably than minor conditions; the factored system gives quadratic
convergence near a root.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .poly import Polynomial, PolySystem, Relation
from .spectra import Pencil, SpectrahedronSpec, eigh, sym

logger = logging.getLogger(__name__)


@dataclass
class RankOneLocus:
    """Parameter points where the pencil is PSD with numerical rank one."""

    points: np.ndarray  # (m, d)
    factors: np.ndarray  # (m, N)

    def __len__(self) -> int:
        return self.points.shape[0]


def _grid_points(box: Sequence[Tuple[float, float]], grid_res: float) -> np.ndarray:
    axes = [np.arange(lo, hi + grid_res * 0.5, grid_res) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _newton_refine(
    pencil: Pencil,
    params0: np.ndarray,
    w0: np.ndarray,
    max_iter: int = 60,
    tol: float = 1e-13,
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Newton on the factored system M(x) - w (x) w = 0 (upper triangle)."""
    N, d = pencil.N, pencil.nparams
    iu, ju = np.triu_indices(N)
    theta = np.concatenate([params0, w0])
    scale = 1.0 + float(np.abs(pencil.M0).max())
    for _ in range(max_iter):
        x, w = theta[:d], theta[d:]
        M = pencil.at(x)
        F = (M - np.outer(w, w))[iu, ju]
        if np.linalg.norm(F) <= tol * scale:
            return x, w
        J = np.zeros((len(F), d + N))
        for l in range(d):
            J[:, l] = pencil.mats[l][iu, ju]
        for row, (i, j) in enumerate(zip(iu, ju)):
            J[row, d + i] -= w[j]
            J[row, d + j] -= w[i]
        try:
            step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        except np.linalg.LinAlgError:
            return None
        theta = theta + step
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > 1e8:
            return None
    x, w = theta[:d], theta[d:]
    if np.linalg.norm((pencil.at(x) - np.outer(w, w))[iu, ju]) <= tol * scale * 10:
        return x, w
    return None


def enumerate_rank_one(
    spec: SpectrahedronSpec,
    box: Sequence[Tuple[float, float]],
    grid_res: float,
    tol: float = 1e-9,
    dedup_radius: float = 1e-5,
) -> RankOneLocus:
    """All isolated rank-one points of a pencil inside the box.

    Every returned point re-verifies as PSD with second eigenvalue at most
    tol times the matrix scale.  An empty result is valid; Newton failures
    at individual cells are logged and skipped.
    """
    if spec.pencil is None:
        raise ValueError("enumeration needs a pencil-form spectrahedron")
    pencil = spec.pencil
    d = pencil.nparams
    if d > 3:
        raise ValueError("enumeration is desk scale: at most 3 pencil parameters")
    if len(box) != d:
        raise ValueError(f"box has {len(box)} intervals, pencil has {d} parameters")

    pts = _grid_points(box, grid_res)
    values = pencil.at_many(pts)
    eigvals = np.linalg.eigvalsh(values)
    lipschitz = sum(float(np.linalg.norm(M, 2)) for M in pencil.mats) or 1.0
    tau = max(1.5 * grid_res * lipschitz, 100.0 * tol)
    candidate_mask = (eigvals[:, 0] >= -tau) & (eigvals[:, 1] <= tau)
    candidates = np.nonzero(candidate_mask)[0]

    scale = 1.0 + float(np.abs(values).max(initial=0.0))
    found: List[Tuple[np.ndarray, np.ndarray]] = []
    n_diverged = 0
    for idx in candidates:
        M = values[idx]
        w_eig, V = eigh(M)
        lam = max(w_eig[-1], 0.0)
        w0 = np.sqrt(lam) * V[:, -1]
        refined = _newton_refine(pencil, pts[idx], w0)
        if refined is None:
            n_diverged += 1
            continue
        x, w = refined
        if not all(lo - 1e-6 <= xi <= hi + 1e-6 for xi, (lo, hi) in zip(x, box)):
            continue
        Mx = pencil.at(x)
        ev = np.linalg.eigvalsh(Mx)
        m_scale = 1.0 + float(np.linalg.norm(Mx))
        if ev[0] < -tol * m_scale or ev[1] > tol * m_scale:
            continue
        found.append((x, w))
    if n_diverged:
        logger.debug("newton diverged at %d of %d candidate cells", n_diverged, len(candidates))

    # deduplicate within the radius, deterministically (lexicographic order)
    if not found:
        return RankOneLocus(np.empty((0, d)), np.empty((0, pencil.N)))
    pts_arr = np.array([x for x, _ in found])
    order = np.lexsort(pts_arr.T[::-1])
    kept_pts: List[np.ndarray] = []
    kept_fac: List[np.ndarray] = []
    for i in order:
        x, w = found[i]
        if any(np.linalg.norm(x - p) <= dedup_radius for p in kept_pts):
            continue
        thresh = 1e-12 * (1.0 + np.abs(w).max())
        for wi in w:
            if abs(wi) > thresh:
                if wi < 0:
                    w = -w
                break
        kept_pts.append(x)
        kept_fac.append(w)
    return RankOneLocus(np.array(kept_pts), np.array(kept_fac))


# ---------------------------------------------------------------------------
# QCQP value equivalence


@dataclass(frozen=True)
class QcqpInstance:
    """Quadratic-equality feasible set with a quadratic objective x^T A x.

    `feasible_points`, when given, replaces rejection sampling (needed for
    finite feasible sets).  Otherwise samples are drawn uniformly from `box`
    and accepted when every equality holds within `band`.
    """

    n: int
    constraints: Tuple[Tuple[Polynomial, Relation], ...]
    objective: np.ndarray
    box: Tuple[Tuple[float, float], ...]
    feasible_points: Optional[np.ndarray] = None
    band: float = 1e-3

    def system(self) -> PolySystem:
        return PolySystem(self.n, self.constraints)


@dataclass
class QcqpReport:
    brute_min: float
    hull_min: float
    gap: float
    n_feasible: int
    pipeline_discrepancy: float  # max |x^T A x - <A, x (x) x>| across routes

    def to_json(self) -> dict:
        return {
            "brute_min": self.brute_min,
            "hull_min": self.hull_min,
            "gap": self.gap,
            "n_feasible": self.n_feasible,
            "pipeline_discrepancy": self.pipeline_discrepancy,
        }


def qcqp_check(
    inst: QcqpInstance, n_samples: int, rng: Optional[np.random.Generator] = None
) -> Optional[QcqpReport]:
    """Compare the feasible-set minimum of x^T A x with the minimum of the
    linear functional <A, .> over the hull of the lifted samples x (x) x.

    The hull minimum is the minimum over the lifted generators (a linear
    functional on a hull is minimized at a generator), so hull_min <=
    brute_min always.  Returns None when no feasible samples are found.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    A = sym(inst.objective)
    if inst.feasible_points is not None:
        accepted = np.asarray(inst.feasible_points, dtype=float)
    else:
        lo = np.array([b[0] for b in inst.box])
        hi = np.array([b[1] for b in inst.box])
        draws = rng.uniform(lo, hi, size=(n_samples, inst.n))
        mask = np.ones(n_samples, dtype=bool)
        for p, rel in inst.constraints:
            vals = p.evaluate_many(draws)
            if rel is Relation.EQ:
                mask &= np.abs(vals) <= inst.band
            else:
                mask &= rel.holds_many(vals, 0.0)
        accepted = draws[mask]
    if accepted.shape[0] == 0:
        return None
    lifted = accepted[:, :, None] * accepted[:, None, :]  # stacked x (x) x
    values = np.einsum("ij,sij->s", A, lifted)
    brute_vals = np.einsum("si,ij,sj->s", accepted, A, accepted)
    brute_min = float(values.min())
    hull_min = float(values.min())
    discrepancy = float(np.abs(values - brute_vals).max())
    return QcqpReport(
        brute_min=brute_min,
        hull_min=hull_min,
        gap=brute_min - hull_min,
        n_feasible=int(accepted.shape[0]),
        pipeline_discrepancy=discrepancy,
    )


# ---------------------------------------------------------------------------
# trace-one slice decomposition


@dataclass
class TraceSliceReport:
    n: int
    n_samples: int
    max_reconstruction_error: float
    max_weight_sum_defect: float
    min_weight: float


def trace_slice_pseudo_check(
    n: int, n_samples: int, rng: Optional[np.random.Generator] = None
) -> TraceSliceReport:
    """Express random trace-1 PSD matrices as convex combinations of rank-one
    trace-1 matrices via their eigendecompositions and report the worst
    reconstruction error."""
    if not 2 <= n <= 6:
        raise ValueError("n must be between 2 and 6")
    rng = rng if rng is not None else np.random.default_rng(0)
    max_err = 0.0
    max_defect = 0.0
    min_weight = np.inf
    for _ in range(n_samples):
        W = rng.normal(size=(n, n))
        X = W @ W.T
        X /= np.trace(X)
        lam, V = eigh(X)
        recon = np.zeros_like(X)
        for i in range(n):
            recon += lam[i] * np.outer(V[:, i], V[:, i])
        max_err = max(max_err, float(np.linalg.norm(X - recon)))
        max_defect = max(max_defect, abs(float(lam.sum()) - 1.0))
        min_weight = min(min_weight, float(lam.min()))
    return TraceSliceReport(n, n_samples, max_err, max_defect, min_weight)


# ---------------------------------------------------------------------------
# boundary rank certificates


@dataclass
class ComboReport:
    min_eig: float
    norm: float
    singular: bool


@dataclass
class BoundaryRankReport:
    combos: List[ComboReport] = field(default_factory=list)

    @property
    def all_singular(self) -> bool:
        return all(c.singular for c in self.combos)

    def to_json(self) -> dict:
        return {
            "all_singular": self.all_singular,
            "combos": [
                {"min_eig": c.min_eig, "norm": c.norm, "singular": c.singular}
                for c in self.combos
            ],
        }


def boundary_rank_check(
    elements: Sequence[Sequence[np.ndarray]],
    weights: Sequence[Sequence[float]],
    tol: float = 1e-9,
) -> BoundaryRankReport:
    """Certify that convex combinations of few rank-one PSD elements are
    singular (hence on the relative boundary when the body has full-rank
    interior points).  Each combo is a group of matrices with weights."""
    report = BoundaryRankReport()
    for group, w in zip(elements, weights):
        w = np.asarray(w, dtype=float)
        X = sum(wi * np.asarray(E, dtype=float) for wi, E in zip(w, group))
        X = sym(X)
        ev = np.linalg.eigvalsh(X)
        norm = float(np.linalg.norm(X))
        report.combos.append(
            ComboReport(
                min_eig=float(ev[0]),
                norm=norm,
                singular=bool(abs(ev[0]) <= tol * max(norm, 1e-300)),
            )
        )
    return report
