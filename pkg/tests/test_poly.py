import numpy as np
import pytest

from quadlift.errors import DegreeError, DimensionMismatchError, PolyParseError
from quadlift.poly import (
    Polynomial,
    PolySystem,
    Relation,
    default_var_names,
    parse_poly,
    print_poly,
    quad_coeffs,
)


def rand_poly(rng, nvars, max_degree, n_terms):
    terms = {}
    for _ in range(n_terms):
        exps = tuple(int(e) for e in rng.integers(0, max_degree + 1, size=nvars))
        while sum(exps) > max_degree:
            exps = tuple(int(e) for e in rng.integers(0, max_degree + 1, size=nvars))
        terms[exps] = float(rng.uniform(-3, 3))
    return Polynomial(nvars, terms)


class TestParse:
    def test_basic_terms(self):
        p = parse_poly("x1^2*x2 - 1", ["x1", "x2"])
        assert p.terms == {(2, 1): 1.0, (0, 0): -1.0}

    def test_zero(self):
        p = parse_poly("0", ["x1"])
        assert p.terms == {}

    def test_like_term_merge(self):
        p = parse_poly("x1 + x1", ["x1", "x2"])
        assert p.terms == {(1, 0): 2.0}

    def test_coefficients_and_signs(self):
        p = parse_poly("-2*x1*x2 + 0.5*x1^3 - x2", ["x1", "x2"])
        assert p.terms == {(1, 1): -2.0, (3, 0): 0.5, (0, 1): -1.0}

    def test_unknown_variable(self):
        with pytest.raises(PolyParseError):
            parse_poly("x1 + y", ["x1"])

    def test_syntax_error_position(self):
        with pytest.raises(PolyParseError) as err:
            parse_poly("x1 + * 2", ["x1"])
        assert err.value.position == 5

    def test_repeated_variable_factor(self):
        p = parse_poly("x1*x1", ["x1"])
        assert p.terms == {(2,): 1.0}


class TestEval:
    def test_example_boundary_point(self):
        # x(1-x) - y^2 at (0.5, 0.5) sits exactly on the curve
        p = parse_poly("x - x^2 - y^2", ["x", "y"])
        assert p.evaluate([0.5, 0.5]) == pytest.approx(0.0, abs=1e-15)

    def test_constant_at_origin(self):
        p = parse_poly("3*x1^2 + 7", ["x1"])
        assert p.evaluate([0.0]) == 7.0

    def test_unique_root(self):
        p = parse_poly("x1^2*x2 - 1", ["x1", "x2"])
        assert p.evaluate([1.0, 1.0]) == 0.0

    def test_dimension_mismatch(self):
        p = parse_poly("x1", ["x1"])
        with pytest.raises(DimensionMismatchError):
            p.evaluate([1.0, 2.0])

    def test_evaluate_many_matches_pointwise(self):
        rng = np.random.default_rng(7)
        p = rand_poly(rng, 3, 4, 6)
        pts = rng.uniform(-2, 2, size=(40, 3))
        batch = p.evaluate_many(pts)
        single = np.array([p.evaluate(x) for x in pts])
        assert np.allclose(batch, single, rtol=1e-13, atol=1e-13)


class TestRingProperties:
    def test_add_mul_evaluation_homomorphism(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            p = rand_poly(rng, 2, 3, 4)
            q = rand_poly(rng, 2, 3, 4)
            v = rng.uniform(-2, 2, size=2)
            scale = 1.0 + abs(p.evaluate(v)) + abs(q.evaluate(v))
            assert (p + q).evaluate(v) == pytest.approx(
                p.evaluate(v) + q.evaluate(v), rel=1e-12, abs=1e-12 * scale
            )
            assert (p * q).evaluate(v) == pytest.approx(
                p.evaluate(v) * q.evaluate(v), rel=1e-12, abs=1e-12 * scale * scale
            )

    def test_zero_coefficients_dropped(self):
        p = parse_poly("x1 - x1", ["x1"])
        assert p.is_zero()
        assert p.degree == 0


class TestQuadCoeffs:
    def test_affine(self):
        p = parse_poly("x1 - 1", ["x1"])
        qc = quad_coeffs(p)
        assert qc.entries == {(0, 0): -1.0, (1, 0): 1.0}

    def test_square(self):
        p = parse_poly("x1^2", ["x1"])
        assert quad_coeffs(p).entries == {(1, 1): 1.0}

    def test_cross_and_constant(self):
        p = parse_poly("x1*x2 + 3", ["x1", "x2"])
        assert quad_coeffs(p).entries == {(0, 0): 3.0, (2, 1): 1.0}

    def test_degree_error(self):
        with pytest.raises(DegreeError):
            quad_coeffs(parse_poly("x1^3", ["x1"]))

    def test_round_trip_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rand_poly(rng, 3, 2, 5)
            back = quad_coeffs(p).to_polynomial()
            assert back.terms == p.terms


class TestPrintRoundTrip:
    def test_parse_print_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            p = rand_poly(rng, 3, 5, 6)
            names = default_var_names(3)
            text = print_poly(p, names)
            again = parse_poly(text, names)
            assert again.terms == p.terms

    def test_zero_prints_as_zero(self):
        assert print_poly(Polynomial.zero(2)) == "0"


class TestPolySystem:
    def test_membership(self):
        sys = PolySystem.from_json(
            {
                "vars": ["x", "y"],
                "constraints": [
                    {"poly": "x - x^2 - y^2", "rel": ">="},
                    {"poly": "x - y", "rel": "="},
                ],
            }
        )
        assert sys.satisfied([0.25, 0.25])
        assert not sys.satisfied([0.9, 0.9])

    def test_json_round_trip(self):
        sys = PolySystem.from_json(
            {
                "vars": ["x1", "x2"],
                "constraints": [{"poly": "x1^3 - 1", "rel": "="}],
            }
        )
        data = sys.to_json()
        again = PolySystem.from_json(data)
        assert again.to_json() == data

    def test_satisfied_many_matches_scalar(self):
        rng = np.random.default_rng(13)
        p = rand_poly(rng, 2, 3, 4)
        q = rand_poly(rng, 2, 2, 3)
        sys = PolySystem(2, ((p, Relation.GT), (q, Relation.LE)))
        pts = rng.uniform(-2, 2, size=(100, 2))
        mask = sys.satisfied_many(pts)
        for i, x in enumerate(pts):
            assert mask[i] == sys.satisfied(x)
