import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtype_osc.exceptions import AmbiguousClassification, InvalidInvariants, InvalidScale, WitnessNotFound
from dtype_osc.phase import (CPType, DPhase, ExceptionalFamily, a3_membership, classify_all,
                             classify_critical_point, critical_points, degeneracy, derived_sigma0, dilate,
                             find_a3_witness, model_hess_det, paper_sigma0)

finite = st.floats(-1.5, 1.5, allow_nan=False)


def test_origin_is_critical():
    pp = DPhase.model(3).at((0, 0))
    assert np.all(pp.grad((0.0, 0.0)) == 0)
    assert classify_critical_point(pp, (0.0, 0.0)) == CPType.HIGHER_OR_ORIGIN


def test_hessian_determinant_closed_form():
    pp = DPhase.model(3, 1).at((0.2, -0.1))
    rng = np.random.default_rng(0)
    for a in rng.uniform(-1, 1, (100, 2)):
        assert pp.hess_det(a) == pytest.approx(-4 * a[1] ** 2 + 12 * a[0] ** 2, rel=1e-12, abs=1e-14)
        H = pp.hess(a)
        assert H[0, 1] == H[1, 0]


@settings(max_examples=60, deadline=None)
@given(st.tuples(finite, finite), st.tuples(finite, finite), st.sampled_from([3, 4, 5, 7]),
       st.sampled_from([1, -1]))
def test_derivatives_match_finite_differences(x, s, n, sign):
    pp = DPhase.normal_form(n, 2, omega0=0.7, beta0=sign * 1.3, b2_0=0.4).at(s)
    x = np.array(x)
    h = 1e-5
    e = np.eye(2) * h
    g_fd = np.array([(pp.eval(x + e[k]) - pp.eval(x - e[k])) / (2 * h) for k in range(2)])
    H_fd = np.array([(pp.grad(x + e[k]) - pp.grad(x - e[k])) / (2 * h) for k in range(2)])
    np.testing.assert_allclose(pp.grad(x), g_fd, rtol=1e-5, atol=1e-7)
    np.testing.assert_allclose(pp.hess(x), H_fd, rtol=1e-5, atol=1e-7)
    T_fd = np.array([(pp.hess(x + e[k]) - pp.hess(x - e[k])) / (2 * h) for k in range(2)])
    np.testing.assert_allclose(pp.third(x), T_fd, rtol=1e-5, atol=1e-6)


def test_critical_points_model_minus_origin_only():
    cps = critical_points(DPhase.model(3, -1).at((0, 0)))
    assert len(cps) == 1 and np.allclose(cps[0].location, 0, atol=1e-6)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_odd_minus_only_saddles(n):
    rng = np.random.default_rng(n)
    for s in rng.uniform(-1, 1, (40, 2)):
        pp = DPhase.model(n, -1).at(s)
        for cp in classify_all(pp, critical_points(pp, seeds_per_axis=17)):
            assert cp.hess_det < 0 and cp.type == CPType.A1
            assert cp.hess_det == pytest.approx(model_hess_det(n, -1, cp.location), rel=1e-9)


def discriminant_point(a1: float, n: int = 4):
    """s on the caustic of x1 x2^2 + x1^n through the degenerate point (a1, sqrt(n(n-1)/2) a1^((n-1)/2))."""
    a2 = math.sqrt(n * (n - 1) / 2 * a1 ** (n - 1))
    return (a2 * a2 + n * a1 ** (n - 1), 2 * a1 * a2), (a1, a2)


def test_a2_on_discriminant():
    s, a = discriminant_point(0.3)
    pp = DPhase.model(4, 1).at(s)
    assert abs(pp.hess_det(a)) < 1e-14
    assert classify_critical_point(pp, a) == CPType.A2
    cps = critical_points(pp, seeds_per_axis=41)
    degenerate = [c for c in cps if abs(c.hess_det) < 1e-6]
    assert len(degenerate) == 1 and np.allclose(degenerate[0].location, a, atol=1e-6)
    # cubic restriction along the unit kernel v: Phi_3(v) = v1 v2^2 + C(n,3) a1^(n-3) v1^3
    dg = degeneracy(pp, a)
    v = dg.kernel
    assert dg.c3 == pytest.approx(v[0] * v[1] ** 2 + 4 * a[0] * v[0] ** 3, rel=1e-9)
    assert abs(dg.c3) > 1e-3


def test_ambiguous_classification():
    s, a = discriminant_point(0.3)
    pp = DPhase.model(4, 1).at(s)
    # a determinant tolerance just at the Hessian scale makes the verdict ambiguous
    hn = np.linalg.norm(pp.hess(a)) ** 2
    near = (a[0], a[1])
    with pytest.raises(AmbiguousClassification) as exc:
        classify_critical_point(pp, near, tol_deg=abs(1e-15 + pp.hess_det(near)) / hn * 2 + 1e-17,
                                tol_cubic=abs(degeneracy(pp, near).c3))
    assert len(exc.value.candidates) == 2


def test_a3_membership_examples():
    assert a3_membership(Fraction(-1, 40), Fraction(-1, 2), 1, 2)
    assert not a3_membership(5.0, 0.0, 1.0, 2)
    assert not a3_membership(Fraction(1), Fraction(-1, 2), 1, 2)
    # t-grid oracle: beta0 = -t^2/(4m(2m+1)b1), omega0 = -t/(m(m-1)b1)
    for t in np.linspace(-3, 3, 13):
        if t == 0:
            continue
        for m in (2, 3, 4):
            beta = -t * t / (4 * m * (2 * m + 1))
            omega = -t / (m * (m - 1))
            assert a3_membership(beta, omega, 1.0, m)
            assert a3_membership(beta, -omega, 1.0, m)  # t -> -t
    with pytest.raises(InvalidInvariants):
        a3_membership(1, 1, 0, 2)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_a3_witness(m):
    w = find_a3_witness(m)
    assert w.gradient_norm < 1e-10 and abs(w.hess_det) < 1e-9
    assert abs(w.cubic) < 1e-8 and abs(w.quartic) > 1e-4
    assert w.point[1] == pytest.approx(1 / (2 * w.point[0]), rel=1e-12)
    assert w.sigma0[0] == pytest.approx(float(derived_sigma0(m)), rel=1e-10)
    assert w.point == pytest.approx((1.0, 0.5), abs=1e-10)


def test_paper_sigma0_disagrees():
    # the printed constant is negative at m=2 while the witness is 9/8
    assert paper_sigma0(2) < 0 < derived_sigma0(2) == Fraction(9, 8)
    assert find_a3_witness(2).sigma0[0] != pytest.approx(float(paper_sigma0(2)), rel=1e-3)


def test_quartic_finite_difference_m3():
    w = find_a3_witness(3)
    pp = ExceptionalFamily(3).rescaled(w.sigma0[0])
    v = degeneracy(pp, w.point).kernel
    y = np.array(w.point)
    f = lambda t: pp.eval(y + t * v)
    h = 1e-2
    d4 = (f(2 * h) - 4 * f(h) + 6 * f(0) - 4 * f(-h) + f(-2 * h)) / h**4
    d4_exact = np.einsum("ijkl,i,j,k,l->", pp.fourth(y), v, v, v, v)
    assert d4 == pytest.approx(d4_exact, rel=1e-3)
    assert abs(d4) > 1e-4


def test_printed_sign_has_no_witness():
    with pytest.raises(WitnessNotFound):
        find_a3_witness(2, sign=-1, seeds=8)


def test_dilate():
    x = np.array([[0.3, -0.7], [1.2, 2.0]])
    np.testing.assert_array_equal(dilate(x, 1.0, (0.5, 2)), x)
    n, lam = 3, 64.0
    y = dilate(x, 1 / lam, (Fraction(1, n), Fraction(n - 1, 2 * n)))
    np.testing.assert_allclose(y[:, 0], lam ** (-1 / n) * x[:, 0], rtol=1e-15)
    with pytest.raises(InvalidScale):
        dilate(x, 0.0, (1, 1))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.1, 3), st.floats(0.1, 3))
def test_dilate_composition(r, r2, k1, k2):
    x = np.array([0.37, -1.3])
    np.testing.assert_allclose(dilate(dilate(x, r2, (k1, k2)), r, (k1, k2)), dilate(x, r * r2, (k1, k2)),
                               rtol=1e-12)


def test_invalid_invariants():
    with pytest.raises(InvalidInvariants):
        DPhase.model(2)
    with pytest.raises(InvalidInvariants):
        DPhase.normal_form(7, 1)
    with pytest.raises(InvalidInvariants):
        ExceptionalFamily(1)
