import numpy as np
import pytest

from quadlift.poly import Relation, parse_poly
from quadlift.search import (
    QcqpInstance,
    boundary_rank_check,
    enumerate_rank_one,
    qcqp_check,
    trace_slice_pseudo_check,
)
from quadlift.spectra import Pencil, SpectrahedronSpec, rank_one_factor

EXAMPLE2 = Pencil(
    np.eye(3),
    (
        np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),  # x
        np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]]),  # y
        np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),  # z
    ),
)

# derived by the factored-system oracle below; frozen after reproduction
DERIVED_POINTS = np.array(
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [-0.5, 0.5, -0.5]]
)


def assert_same_point_set(got, expected, atol):
    got = np.asarray(got, dtype=float)
    expected = np.asarray(expected, dtype=float)
    assert got.shape == expected.shape
    used = set()
    for e in expected:
        dists = np.linalg.norm(got - e, axis=1)
        i = int(np.argmin(dists))
        assert dists[i] <= atol, f"no match for {e}: nearest at distance {dists[i]}"
        assert i not in used, f"two expected points matched row {i}"
        used.add(i)


def w_oracle_points():
    """Independent oracle for Example 2's rank-one locus.

    Writing M(x, y, z) = w (x) w entrywise gives x+1 = w1^2, 1-y = w2^2,
    z+1 = w3^2, z = w1*w2, y = w1*w3, x = w2*w3; eliminating (x, y, z)
    leaves three quadratics in w alone, solved here by a dense grid of
    Newton starts.  Each solution maps back through the product formulas.
    """
    axis = np.arange(-2.0, 2.0001, 0.25)
    W = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)

    def G(w):
        return np.stack(
            [
                w[:, 0] ** 2 - w[:, 1] * w[:, 2] - 1.0,
                w[:, 1] ** 2 + w[:, 0] * w[:, 2] - 1.0,
                w[:, 2] ** 2 - w[:, 0] * w[:, 1] - 1.0,
            ],
            axis=1,
        )

    for _ in range(60):
        J = np.empty((W.shape[0], 3, 3))
        J[:, 0, 0] = 2 * W[:, 0]
        J[:, 0, 1] = -W[:, 2]
        J[:, 0, 2] = -W[:, 1]
        J[:, 1, 0] = W[:, 2]
        J[:, 1, 1] = 2 * W[:, 1]
        J[:, 1, 2] = W[:, 0]
        J[:, 2, 0] = -W[:, 1]
        J[:, 2, 1] = -W[:, 0]
        J[:, 2, 2] = 2 * W[:, 2]
        dets = np.linalg.det(J)
        bad = np.abs(dets) < 1e-8
        J[bad] = np.eye(3)
        W = W - np.linalg.solve(J, G(W)[..., None])[..., 0]
        W = np.clip(W, -1e3, 1e3)
    residuals = np.linalg.norm(G(W), axis=1)
    sols = W[residuals <= 1e-10]
    params = np.stack(
        [sols[:, 1] * sols[:, 2], sols[:, 0] * sols[:, 2], sols[:, 0] * sols[:, 1]],
        axis=1,
    )
    kept = []
    for p in params:
        if not any(np.linalg.norm(p - q) <= 1e-6 for q in kept):
            kept.append(p)
    return np.array(sorted(map(tuple, kept)))


class TestEnumerateRankOne:
    def test_oracle_reproduces_derived_points(self):
        oracle = w_oracle_points()
        assert oracle.shape == (4, 3)
        assert_same_point_set(oracle, DERIVED_POINTS, atol=1e-9)

    def test_example2_exactly_four(self):
        spec = SpectrahedronSpec(3, (), pencil=EXAMPLE2)
        locus = enumerate_rank_one(spec, [(-2, 2)] * 3, grid_res=0.1, tol=1e-9)
        assert len(locus) == 4
        assert_same_point_set(locus.points, DERIVED_POINTS, atol=1e-6)

    def test_soundness_at_ten_times_tol(self):
        spec = SpectrahedronSpec(3, (), pencil=EXAMPLE2)
        locus = enumerate_rank_one(spec, [(-2, 2)] * 3, grid_res=0.1, tol=1e-9)
        for x, w in zip(locus.points, locus.factors):
            M = EXAMPLE2.at(x)
            ev = np.linalg.eigvalsh(M)
            scale = 1.0 + np.linalg.norm(M)
            assert ev[0] >= -1e-8 * scale and ev[1] <= 1e-8 * scale
            assert np.linalg.norm(M - np.outer(w, w)) <= 1e-8 * scale

    def test_factors_match_rank_one_factorization(self):
        spec = SpectrahedronSpec(3, (), pencil=EXAMPLE2)
        locus = enumerate_rank_one(spec, [(-2, 2)] * 3, grid_res=0.1)
        for x, w in zip(locus.points, locus.factors):
            v = rank_one_factor(EXAMPLE2.at(x), tol=1e-8)
            assert v is not None
            assert np.allclose(v, w, atol=1e-7)

    def test_empty_box_is_valid(self):
        # shift the box away from all four points
        spec = SpectrahedronSpec(3, (), pencil=EXAMPLE2)
        locus = enumerate_rank_one(spec, [(1.5, 2.0)] * 3, grid_res=0.1)
        assert len(locus) == 0

    def test_affine_independence_of_example2_points(self):
        diffs = DERIVED_POINTS[1:] - DERIVED_POINTS[0]
        det = np.linalg.det(diffs)
        assert abs(abs(det) - 0.5) <= 1e-12
        assert abs(abs(det) / 6.0 - 1.0 / 12.0) <= 1e-12

    def test_trace_one_circle_points_are_rank_one(self):
        # 2-parameter pencil of the planar trace-1 slice [[x, y], [y, 1-x]]
        pencil = Pencil(
            np.array([[0.0, 0.0], [0.0, 1.0]]),
            (np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])),
        )
        for theta in np.linspace(0, np.pi, 37):
            c, s = np.cos(theta), np.sin(theta)
            x, y = c * c, c * s
            M = pencil.at([x, y])
            assert abs(x * (1 - x) - y * y) <= 1e-15
            assert rank_one_factor(M, tol=1e-12) is not None


class TestQcqp:
    def test_two_point_set(self):
        inst = QcqpInstance(
            n=1,
            constraints=((parse_poly("x^2 - 1", ["x"]), Relation.EQ),),
            objective=np.array([[1.0]]),
            box=((-2.0, 2.0),),
        )
        report = qcqp_check(inst, 20000, np.random.default_rng(1))
        assert report is not None
        assert report.hull_min <= report.brute_min
        assert report.brute_min == pytest.approx(1.0, abs=3e-3)
        assert report.gap == 0.0
        assert report.pipeline_discrepancy <= 1e-12

    def test_four_point_instance(self):
        inst = QcqpInstance(
            n=3,
            constraints=(),
            objective=np.eye(3),
            box=((-2.0, 2.0),) * 3,
            feasible_points=DERIVED_POINTS,
        )
        report = qcqp_check(inst, 10**5)
        assert report.brute_min == pytest.approx(0.75, abs=1e-12)
        assert report.hull_min <= report.brute_min
        assert report.gap == 0.0

    def test_unit_circle(self):
        inst = QcqpInstance(
            n=2,
            constraints=((parse_poly("x^2 + y^2 - 1", ["x", "y"]), Relation.EQ),),
            objective=np.diag([1.0, -1.0]),
            box=((-2.0, 2.0),) * 2,
        )
        report = qcqp_check(inst, 10**5, np.random.default_rng(2))
        assert report is not None
        assert report.brute_min == pytest.approx(-1.0, abs=5e-3)
        assert report.hull_min <= report.brute_min
        assert report.gap <= 1e-3

    def test_no_feasible_samples(self):
        inst = QcqpInstance(
            n=1,
            constraints=((parse_poly("x^2 + 1", ["x"]), Relation.EQ),),
            objective=np.array([[1.0]]),
            box=((-2.0, 2.0),),
        )
        assert qcqp_check(inst, 1000, np.random.default_rng(3)) is None


class TestTraceSlice:
    def test_reconstruction_error(self):
        for n in range(2, 7):
            report = trace_slice_pseudo_check(n, 25, np.random.default_rng(n))
            assert report.max_reconstruction_error <= 1e-10
            assert report.max_weight_sum_defect <= 1e-12
            assert report.min_weight >= -1e-12

    def test_scaled_identity(self):
        # I/n decomposes into n canonical projectors with equal weights
        n = 4
        X = np.eye(n) / n
        lam, V = np.linalg.eigh(X)
        assert np.allclose(lam, np.full(n, 1 / n))
        recon = sum(lam[i] * np.outer(V[:, i], V[:, i]) for i in range(n))
        assert np.allclose(recon, X, atol=1e-14)

    def test_boundary_of_2x2_slice_is_rank_one(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            u = rng.normal(size=2)
            u /= np.linalg.norm(u)
            X = np.outer(u, u)  # boundary point of the trace-1 slice
            assert abs(np.trace(X) - 1.0) <= 1e-12
            assert rank_one_factor(X, 1e-10) is not None


class TestBoundaryRank:
    def test_all_midpoints_singular(self):
        mats = [EXAMPLE2.at(p) for p in DERIVED_POINTS]
        combos, weights = [], []
        for i in range(4):
            for j in range(i + 1, 4):
                combos.append([mats[i], mats[j]])
                weights.append([0.5, 0.5])
        report = boundary_rank_check(combos, weights, tol=1e-9)
        assert len(report.combos) == 6
        assert report.all_singular

    def test_single_vertex(self):
        report = boundary_rank_check([[EXAMPLE2.at(DERIVED_POINTS[0])]], [[1.0]])
        assert report.all_singular

    def test_rank_additivity_bound(self):
        rng = np.random.default_rng(18)
        n = 4
        for m in range(1, n):  # combinations of up to n-1 rank-one matrices
            group = [np.outer(v, v) for v in rng.normal(size=(m, n))]
            w = rng.uniform(0.1, 1.0, size=m)
            w /= w.sum()
            report = boundary_rank_check([group], [w], tol=1e-9)
            assert report.all_singular
