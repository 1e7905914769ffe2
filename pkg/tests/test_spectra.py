import numpy as np
import pytest

from quadlift.spectra import (
    Pencil,
    SpectrahedronSpec,
    eigh,
    feasibility,
    frobenius,
    minimize_linear,
    pencil_to_slice,
    project_psd,
    rank_one_factor,
    slice_to_pencil,
    svec,
    sym,
    unsvec,
)

EXAMPLE2 = Pencil(
    np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    (
        np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),  # x
        np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]]),  # y
        np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),  # z
    ),
)

TETRA_VERTICES = np.array(
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [-0.5, 0.5, -0.5]]
)


def tetra_pencil(vertices):
    """Diagonal facet pencil of a tetrahedron: diag(n_f . x - c_f) over facets."""
    rows = []
    offsets = []
    for i in range(4):
        tri = np.delete(vertices, i, axis=0)
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        c = np.dot(n, tri[0])
        if np.dot(n, vertices[i]) < c:  # orient inward
            n, c = -n, -c
        rows.append(n)
        offsets.append(c)
    M0 = np.diag(-np.array(offsets))
    mats = tuple(np.diag(np.array(rows)[:, j]) for j in range(3))
    return Pencil(M0, mats)


class TestEigh:
    def test_identity(self):
        w, _ = eigh(np.eye(3))
        assert np.allclose(w, [1.0, 1.0, 1.0])

    def test_diagonal_sorted_ascending(self):
        w, _ = eigh(np.diag([-1.0, 0.0, 2.0]))
        assert np.allclose(w, [-1.0, 0.0, 2.0])

    def test_boundary_matrix_of_trace_one_slice(self):
        w, _ = eigh(np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert np.allclose(w, [0.0, 1.0], atol=1e-15)

    def test_reconstruction(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            M = sym(rng.normal(size=(6, 6)))
            w, V = eigh(M)
            err = np.linalg.norm(M - (V * w) @ V.T)
            assert err <= 1e-10 * (1.0 + np.linalg.norm(M))


class TestSvec:
    def test_pairing_preserved(self):
        rng = np.random.default_rng(2)
        A, B = sym(rng.normal(size=(5, 5))), sym(rng.normal(size=(5, 5)))
        assert np.dot(svec(A), svec(B)) == pytest.approx(frobenius(A, B), rel=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        M = sym(rng.normal(size=(4, 4)))
        assert np.allclose(unsvec(svec(M), 4), M, atol=1e-15)


class TestFrobeniusPairing:
    def test_symmetry_and_linearity(self):
        rng = np.random.default_rng(4)
        A, B, C = (sym(rng.normal(size=(4, 4))) for _ in range(3))
        alpha = 0.37
        assert frobenius(A, B) == pytest.approx(frobenius(B, A), rel=1e-12)
        assert frobenius(A, alpha * B + C) == pytest.approx(
            alpha * frobenius(A, B) + frobenius(A, C), rel=1e-12
        )


class TestRankOneFactor:
    def test_round_trip(self):
        v = np.array([1.0, 4.0, 4.0, 0.25, 2.0])
        got = rank_one_factor(np.outer(v, v), tol=1e-9)
        assert got is not None
        assert np.allclose(got, v, atol=1e-10)

    def test_identity_fails(self):
        assert rank_one_factor(np.eye(2), tol=1e-9) is None

    def test_zero_fails(self):
        assert rank_one_factor(np.zeros((3, 3)), tol=1e-9) is None

    def test_canonical_sign(self):
        v = np.array([0.0, -2.0, 1.0])
        got = rank_one_factor(np.outer(v, v), tol=1e-9)
        assert got is not None and got[1] > 0  # first nonzero coordinate positive


class TestProjectPsd:
    def test_idempotent(self):
        rng = np.random.default_rng(5)
        M = sym(rng.normal(size=(5, 5)))
        P = project_psd(M)
        assert np.allclose(project_psd(P), P, atol=1e-12)
        assert np.linalg.eigvalsh(P)[0] >= -1e-12


class TestFeasibility:
    def test_trace_one_slice(self):
        spec = SpectrahedronSpec(2, ((np.eye(2), 1.0),))
        res = feasibility(spec, tol=1e-9)
        assert res.feasible
        assert np.trace(res.X) == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.eigvalsh(res.X)[0] >= -1e-8  # audit at 10x tol

    def test_negative_trace_infeasible(self):
        spec = SpectrahedronSpec(2, ((np.eye(2), -1.0),))
        res = feasibility(spec, tol=1e-9, max_iters=2000)
        assert not res.feasible
        assert res.gap > 0.1

    def test_example2_pencil_feasible_at_origin(self):
        assert np.linalg.eigvalsh(EXAMPLE2.at([0.0, 0.0, 0.0]))[0] == pytest.approx(1.0)
        spec = pencil_to_slice(EXAMPLE2)
        res = feasibility(spec, tol=1e-9)
        assert res.feasible
        assert np.linalg.eigvalsh(res.X)[0] >= -1e-8


class TestPencilSliceRoundTrip:
    def test_example2_membership_preserved(self):
        rng = np.random.default_rng(6)
        spec = pencil_to_slice(EXAMPLE2)
        pencil_back = slice_to_pencil(spec)
        spec_back = pencil_to_slice(pencil_back)

        def member(s, X):
            res = max(
                (abs(frobenius(A, X) - b) for A, b in s.constraints), default=0.0
            )
            return res <= 1e-9 and np.linalg.eigvalsh(X)[0] >= -1e-9

        agree = 0
        for _ in range(1000):
            if rng.uniform() < 0.7:
                X = EXAMPLE2.at(rng.uniform(-2, 2, size=3))
            else:
                X = sym(rng.normal(size=(3, 3)))
            if member(spec, X) == member(spec_back, X):
                agree += 1
        assert agree == 1000

    def test_parameter_count_preserved(self):
        spec = pencil_to_slice(EXAMPLE2)
        back = slice_to_pencil(spec)
        assert back.nparams == 3


class TestMinimizeLinear:
    def test_trace_objective(self):
        spec = SpectrahedronSpec(2, ((np.eye(2), 1.0),))
        res = minimize_linear(np.eye(2), spec, tol=1e-7, trace_bound=1.0)
        assert res.status == "ok"
        assert res.value == pytest.approx(1.0, abs=1e-6)

    def test_diag_objective(self):
        spec = SpectrahedronSpec(2, ((np.eye(2), 1.0),))
        res = minimize_linear(np.diag([1.0, 0.0]), spec, tol=1e-7, trace_bound=1.0)
        assert res.status == "ok"
        assert res.value == pytest.approx(0.0, abs=1e-6)

    def test_unbounded_reported(self):
        # X = diag(t, 0) stays feasible with value -t for all t
        off = np.zeros((2, 2))
        off[0, 1] = off[1, 0] = 0.5
        spec = SpectrahedronSpec(2, ((off, 0.0),))
        res = minimize_linear(np.diag([-1.0, 0.0]), spec, tol=1e-6)
        assert res.status == "unbounded"

    def test_tetrahedron_matches_vertex_minimum(self):
        rng = np.random.default_rng(7)
        pencil = tetra_pencil(TETRA_VERTICES)
        spec = pencil_to_slice(pencil)
        for _ in range(3):
            C = sym(rng.normal(size=(4, 4)))
            res = minimize_linear(C, spec, tol=1e-7, trace_bound=10.0)
            brute = min(frobenius(C, pencil.at(v)) for v in TETRA_VERTICES)
            assert res.status == "ok"
            assert res.value == pytest.approx(brute, abs=1e-6)
