import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sosg.cones import (
    CheckStatus,
    MomentVector,
    SemiAlgebraicSet,
    XiCertificate,
    apply_functional,
    localizing_matrix,
    moment_matrix,
    sos_check,
    sos_decompose,
    xi_certificate,
    xi_check,
)
from sosg.poly import GramRepresentation, Polynomial, gram_to_poly, monomial_basis

x = Polynomial.variable(1, 0)
x1, x2 = Polynomial.variables(2)
unit = SemiAlgebraicSet(1, (x, 1 - x))


def test_quarter_gram_is_pinned():
    g = sos_decompose(0.25 - x * (1 - x), 1)
    assert np.allclose(g.Q, [[0.25, -0.5], [-0.5, 1.0]], atol=1e-6)


def test_quartic_form_is_sos():
    p = 4 * x1**4 + 4 * x1**3 * x2 - 3 * x1**2 * x2**2 + 5 * x2**4
    g = sos_decompose(p, 2)
    assert g is not None
    assert g.to_polynomial().allclose(p, atol=1e-6) and g.min_eigenvalue() >= -1e-7


@pytest.mark.parametrize("p", [
    x1**2 * x2**2 * (x1**2 + x2**2 - 1) + 1,
    1 + x1**4 * x2**2 + x1**2 * x2**4 - x1**2 * x2**2,
])
def test_positive_non_sos(p):
    res = sos_check(p, 3)
    assert res.status is CheckStatus.NOT_SOS
    assert apply_functional(res.witness, p) < 0
    assert np.linalg.eigvalsh(moment_matrix(res.witness))[0] >= -1e-7


def test_xi_example_certificate():
    cert = xi_certificate(2 * x + x * x, unit, 1)
    assert np.allclose(cert.sigma0.Q, [[0, 0], [0, 1]], atol=1e-5)
    assert abs(cert.sigmas[0].Q[0, 0] - 2) < 1e-5 and abs(cert.sigmas[1].Q[0, 0]) < 1e-5


def test_xi_absent_when_negative_inside():
    assert xi_certificate(0.125 - x * (1 - x), unit, 1) is None


def test_constant_one():
    cert = xi_certificate(Polynomial.constant(1, 1.0), unit, 1)
    assert cert.reconstruct(unit).allclose(Polynomial.constant(1, 1.0), atol=1e-6)
    # the split between sigma0 and x + (1 - x) is not unique, only the total is
    assert cert.min_eigenvalue() >= -1e-7


def test_empty_domain_coincides_with_sos():
    p = (x - 1) ** 2 * (x + 2) ** 2 + 0.1
    assert xi_check(p, SemiAlgebraicSet.whole(1), 2).status is sos_check(p, 2).status is CheckStatus.SOS


def test_degree_below_minimum_rejected():
    with pytest.raises(ValueError):
        sos_check(x**4, 1)


def test_certificate_json_round_trip():
    cert = xi_certificate(2 * x + x * x, unit, 1)
    again = XiCertificate.from_json(1, cert.to_json())
    assert again.verify(2 * x + x * x, unit)


def test_half_degree_validation():
    with pytest.raises(ValueError):
        SemiAlgebraicSet(1, (x**3,), (1,))


def test_moment_matrix_hankel():
    y = MomentVector(1, 2, [1, 2, 3, 4, 5])
    assert np.array_equal(moment_matrix(y), [[1, 2, 3], [2, 3, 4], [3, 4, 5]])


def test_localizing_examples():
    y = MomentVector(1, 1, [1, 0.3, 0.2])
    assert np.allclose(localizing_matrix(x, y), [[0.3]])
    assert np.allclose(localizing_matrix(1 - x, y), [[0.7]])
    y2 = MomentVector(1, 2, [1, 0.3, 0.2, 0.1, 0.05])
    assert np.allclose(localizing_matrix(Polynomial.constant(1, 1.0), y2, 0), moment_matrix(y2))
    with pytest.raises(ValueError):
        localizing_matrix(x**5, y)


def test_point_mass_is_rank_one():
    y = MomentVector.point_mass([0.7, -1.3], 3)
    s = np.linalg.svd(moment_matrix(y), compute_uv=False)
    assert s[1] <= 1e-7 * s[0]
    g = 1 + x1**3 - 2 * x1 * x2**2
    assert abs(apply_functional(y, g) - g([0.7, -1.3])) < 1e-12


def test_functional_degree_overflow():
    with pytest.raises(ValueError):
        apply_functional(MomentVector(1, 1, [1, 0, 1]), x**3)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_trace_identity(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    b = monomial_basis(n, d)
    A = rng.normal(size=(len(b), len(b)))
    Q = A + A.T
    y = MomentVector(n, d, rng.normal(size=len(monomial_basis(n, 2 * d))))
    lhs = apply_functional(y, gram_to_poly(GramRepresentation(b, Q)))
    assert abs(lhs - np.trace(Q @ moment_matrix(y))) <= 1e-8 * (1 + abs(lhs))


def test_fejer_spot_check():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(4, 2))
    w = rng.dirichlet(np.ones(4))
    y = MomentVector(2, 2, sum(wi * MomentVector.point_mass(p, 2).y for wi, p in zip(w, pts)))
    M = moment_matrix(y)
    for _ in range(100):
        A = rng.normal(size=M.shape)
        assert np.trace(A @ A.T @ M) >= -1e-8


def test_certified_polynomials_are_nonnegative():
    rng = np.random.default_rng(9)
    A = rng.normal(size=(6, 6))
    p = gram_to_poly(GramRepresentation(monomial_basis(2, 2), A @ A.T))
    g = sos_decompose(p, 2)
    assert g is not None
    pts = rng.uniform(-3, 3, size=(1000, 2))
    vd = np.array([monomial_basis(2, 2).evaluate(v) for v in pts])
    assert np.all(p.eval_many(pts) >= -1e-6 * (1 + (vd**2).sum(axis=1)))


def test_xi_certificate_soundness_random():
    rng = np.random.default_rng(4)
    for _ in range(5):
        coeffs = rng.normal(size=3)
        p = Polynomial(1, {(0,): abs(coeffs[0]) + 2.0, (1,): coeffs[1], (2,): coeffs[2]})
        cert = xi_certificate(p, unit, 1)
        if cert is not None:
            assert cert.verify(p, unit, tol=1e-6, eig_tol=1e-7)
