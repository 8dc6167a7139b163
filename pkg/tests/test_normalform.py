import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dtype_osc.exceptions import InvalidInvariants, NotDType, ReductionFailed
from dtype_osc.normalform import (IDENTITY, Regime, classify_regime, corank, dtype_linear_change,
                                  extract_b0_b, extract_psi, reduce_to_normal_form)
from dtype_osc.polynomial import PolynomialPhase, model_polynomial, normal_form_polynomial

x1, x2 = PolynomialPhase.x1(), PolynomialPhase.x2()


def test_corank():
    assert corank(model_polynomial(3)) == 2
    assert corank(x1**2 + x2**3) == 1
    assert corank(x1**2 + x2**2) == 0


def test_linear_change_examples():
    M, moved = dtype_linear_change(model_polynomial(3))
    assert M == IDENTITY and moved == model_polynomial(3)
    M, moved = dtype_linear_change(x2 * x1**2 + x2**3)
    assert M == ((0, 1), (1, 0))
    assert moved == model_polynomial(3)
    with pytest.raises(NotDType):
        dtype_linear_change(x2**3 + x1**4)


def test_linear_change_general_cubic():
    # cubic with root lines x1 = 0, x2 = x1, x2 = -2 x1 (all simple)
    phi = x1 * (x2 - x1) * (x2 + 2 * x1) + x1**5
    M, moved = dtype_linear_change(phi)
    cubic = moved.homogeneous_part(3)
    assert cubic.coeff(0, 3) == 0 and cubic.coeff(1, 2) != 0 and cubic.coeff(2, 1) == 0
    assert moved == phi.linear_substitute(M)


def test_irrational_root_lines_only():
    # x2^3 - 2 x1^3 has a single real root line, of irrational slope
    phi = x2**3 - 2 * x1**3 + x1**6
    with pytest.raises(ReductionFailed):
        dtype_linear_change(phi)


def test_extract_psi_examples():
    psi = extract_psi(x1 * (x2 - x1**2) ** 2 + x1**7)
    assert psi.order == 2 and psi.as_dict() == {2: 1}
    assert extract_psi(model_polynomial(5)).order == math.inf
    psi = extract_psi(x1 * (x2 - x1**2 - x1**3) ** 2 + x1**9)
    assert psi.as_dict() == {2: 1, 3: 1} and psi.coefficients[2] == 1
    with pytest.raises(ReductionFailed):
        extract_psi(x2**2 * x1**2 + x1**5)


def test_psi_extends_with_order():
    phi = (x1 + x2**2) * (x2 - x1**2 + 3 * x1**4) ** 2 + x1**9 + x1**3 * x2
    a, b = extract_psi(phi, 10), extract_psi(phi, 16)
    assert b.coefficients[: len(a.coefficients)] == a.coefficients


def test_extract_b0_b_examples():
    nf = reduce_to_normal_form(x1 * (x2 - x1**2) ** 2 + x1**7)
    assert (nf.m, nf.n, nf.beta0, nf.b1_0, nf.regime) == (2, 7, 1, 1, Regime.NLA)
    nf = reduce_to_normal_form(model_polynomial(3))
    assert (nf.m, nf.n, nf.regime) == (math.inf, 3, Regime.LA)
    nf = reduce_to_normal_form(x1 * x2**2)
    assert nf.n == math.inf and nf.regime is None and not any(nf.b0)


def test_extract_b0_b_errors():
    with pytest.raises(NotDType):
        reduce_to_normal_form(x1 * x2**2 + x1**2)  # corank one
    with pytest.raises(NotDType):
        phi = x1 * x2**2 + x2**3 + x1**4  # d2 b(0,0) != 0 without the linear change
        extract_b0_b(phi, extract_psi(phi, 10), 10)


@pytest.mark.parametrize("m,n,regime", [(math.inf, 3, Regime.LA), (2, 5, Regime.EXCEPTIONAL),
                                        (2, 7, Regime.NLA), (3, 5, Regime.LA), (2, math.inf, Regime.D_INF)])
def test_classify_regime(m, n, regime):
    assert classify_regime(m, n) == regime


@pytest.mark.parametrize("m,n", [(2, 2), (1, 5), (math.inf, math.inf)])
def test_classify_regime_rejects(m, n):
    with pytest.raises(InvalidInvariants):
        classify_regime(m, n)


def constructed(rng: random.Random, m: int, n: int):
    nz = lambda: Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 5))
    psi = {m: nz()}
    for k in range(m + 1, m + 3):
        psi[k] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    b0 = {n: nz(), n + 1: Fraction(rng.randint(-3, 3), 2)}
    return normal_form_polynomial(nz(), Fraction(rng.randint(-3, 3), rng.randint(1, 3)), psi, b0), psi, b0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(5, 13), st.integers(0, 10**6))
def test_recovery_and_reconstruction(m, n, seed):
    phi, psi, b0 = constructed(random.Random(seed), m, n)
    nf = reduce_to_normal_form(phi)
    assert (nf.m, nf.n) == (m, n)
    assert nf.omega0 == psi[m] and nf.beta0 == b0[n]
    assert nf.reconstruct() == nf.phase.truncate(nf.order)
