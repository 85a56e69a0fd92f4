import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sosg.poly import (
    GramRepresentation,
    Polynomial,
    affine_basis_transform,
    basis_dimension,
    gram_to_poly,
    monomial_basis,
)

x1, x2 = Polynomial.variables(2)


def test_eval_examples():
    p = 4 * x1**4 + 4 * x1**3 * x2 - 3 * x1**2 * x2**2 + 5 * x2**4
    assert p([0, 0]) == 0
    assert p([1, 1]) == 10
    q = 1 + x1**4 * x2**2 + x1**2 * x2**4 - x1**2 * x2**2
    assert q([1, 1]) == 2


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        (x1 + x2)([1.0])


@pytest.mark.parametrize("n,d,expected", [(1, 4, 5), (2, 1, 3), (2, 3, 10), (3, 0, 1)])
def test_basis_dimension(n, d, expected):
    assert basis_dimension(n, d) == expected


def test_basis_dimension_rejects_bad_args():
    with pytest.raises(ValueError):
        basis_dimension(0, 2)
    with pytest.raises(ValueError):
        basis_dimension(1, -1)


def test_graded_lex_order():
    assert monomial_basis(1, 2).monomials == ((0,), (1,), (2,))
    assert monomial_basis(2, 3).monomials == (
        (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3),
    )
    assert monomial_basis(3, 0).monomials == ((0, 0, 0),)


def test_gram_examples():
    b = monomial_basis(1, 1)
    x = Polynomial.variable(1, 0)
    assert gram_to_poly(GramRepresentation(b, [[0.25, -0.5], [-0.5, 1.0]])).allclose(0.25 - x + x * x)
    assert gram_to_poly(GramRepresentation(b, np.zeros((2, 2)))).is_zero
    assert gram_to_poly(GramRepresentation(b, [[0, 0], [0, 1]])) == x * x


def test_gram_shape_and_symmetry_checks():
    with pytest.raises(ValueError):
        GramRepresentation(monomial_basis(1, 1), np.eye(3))
    with pytest.raises(ValueError):
        GramRepresentation(monomial_basis(1, 1), [[1, 2], [0, 1]])


def test_canonical_form_drops_zeros():
    p = (x1 + x2) - x2
    assert p.terms == {(1, 0): 1.0}
    assert Polynomial(2).degree == 0


def test_json_round_trip():
    p = 3 * x1**2 * x2 - 0.5
    assert Polynomial.from_json(p.to_json()) == p
    with pytest.raises(ValueError):
        Polynomial.from_json({"n": 2, "terms": [{"exps": [1], "coef": 1.0}]})


def test_squares_expansion():
    g = GramRepresentation(monomial_basis(1, 1), [[0.25, -0.5], [-0.5, 1.0]])
    sq = g.squares()
    total = sum((q * q for q in sq), Polynomial(1))
    assert total.allclose(g.to_polynomial(), atol=1e-12)


coef = st.floats(-5, 5, allow_nan=False)
small_poly = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=6
).map(lambda t: Polynomial(2, t))
point = st.tuples(st.floats(-2, 2), st.floats(-2, 2))


@given(small_poly, small_poly, point)
def test_eval_is_a_ring_homomorphism(p, q, v):
    for got, want in [((p + q)(v), p(v) + q(v)), ((p * q)(v), p(v) * q(v))]:
        assert abs(got - want) <= 1e-10 * max(1.0, abs(want)) + 1e-10


@given(st.integers(1, 3), st.integers(0, 4))
def test_basis_length_and_uniqueness(n, d):
    b = monomial_basis(n, d)
    assert len(b) == basis_dimension(n, d) == len(set(b.monomials))


@settings(max_examples=50)
@given(st.integers(0, 10_000), st.integers(1, 2), st.integers(0, 3))
def test_gram_evaluation_matches_quadratic_form(seed, n, d):
    rng = np.random.default_rng(seed)
    b = monomial_basis(n, d)
    A = rng.normal(size=(len(b), len(b)))
    Q = A + A.T
    v = rng.uniform(-1.5, 1.5, size=n)
    vd = b.evaluate(v)
    assert abs(gram_to_poly(GramRepresentation(b, Q))(v) - vd @ Q @ vd) <= 1e-9 * (1 + abs(vd @ Q @ vd))


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_gram_to_poly_is_linear(seed):
    rng = np.random.default_rng(seed)
    b = monomial_basis(2, 2)
    big = monomial_basis(2, 4)
    Q1, Q2 = (rng.normal(size=(6, 6)) for _ in range(2))
    Q1, Q2 = Q1 + Q1.T, Q2 + Q2.T
    a = rng.normal()
    c = lambda Q: gram_to_poly(GramRepresentation(b, Q)).coefficients(big)
    assert np.allclose(c(Q1 + a * Q2), c(Q1) + a * c(Q2), atol=1e-10)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_affine_transform_maps_gram_matrices(seed):
    rng = np.random.default_rng(seed)
    b = monomial_basis(1, 2)
    A = rng.normal(size=(3, 3))
    Q = A @ A.T
    s, t0 = rng.uniform(0.5, 3), rng.uniform(-2, 2)
    T = affine_basis_transform(b, [s], [t0])
    p = gram_to_poly(GramRepresentation(b, Q)).compose_affine([s], [t0])
    assert p.allclose(gram_to_poly(GramRepresentation(b, T.T @ Q @ T)), atol=1e-9)
