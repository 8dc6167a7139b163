import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtype_osc.exceptions import (AnnulusUnreliable, ConfigError, GammaOutOfRange, InsufficientData,
                                  InvalidInvariants)
from dtype_osc.normalform import Regime
from dtype_osc.oscint import Amplitude, QuadratureConfig
from dtype_osc.phase import CPType, DPhase, classify_all, critical_points
from dtype_osc import randol as R

MODEL = DPhase.model(3, -1)
STARVED = QuadratureConfig(abs_tol=1e-12, max_depth=10, c_osc=1e6, omega=1e9, panel_order=2)


# ---------------------------------------------------------------- exponent table

def test_predicted_examples():
    assert R.predicted_critical_p(1, 3) == 4
    assert R.predicted_critical_p(1, 7, 2) == Fraction(7, 2)
    assert R.predicted_critical_p(1, 5, 2) == 3
    assert R.predicted_critical_p(Fraction(3, 4), math.inf, 2) == 8
    assert R.predicted_critical_p("9/10", 3) == Fraction(40, 7)


@pytest.mark.parametrize("gamma,n,m", [(Fraction(2, 3), 3, math.inf), (1.01, 3, math.inf),
                                       (Fraction(1, 2), math.inf, 2), (Fraction(6, 7), math.inf, 2)])
def test_gamma_out_of_range(gamma, n, m):
    with pytest.raises(GammaOutOfRange):
        R.predicted_critical_p(gamma, n, m)


@pytest.mark.parametrize("m", range(2, 7))
def test_nla_breakpoint(m):
    gb = Fraction(m + 3, 2 * (m + 1))
    for n in range(2 * m + 2, 14):
        a, b = R.nla_branches(gb, n, m)
        assert a == b == 2 * (m + 1)
        assert R.breakpoint_consistency(n, m)


@pytest.mark.parametrize("n", range(5, 14, 2))
def test_exceptional_breakpoint(n):
    gb = Fraction(3 * n - 3, 3 * n - 2)
    a, b = R.exceptional_branches(gb, n)
    assert a == b == Fraction(3 * n - 2, n - 2)
    assert R.breakpoint_consistency(n, (n - 1) // 2)


def test_breakpoint_examples():
    assert R.nla_branches(Fraction(5, 6), 7, 2) == (6, 6)
    assert R.exceptional_branches(Fraction(12, 13), 5) == (Fraction(13, 3), Fraction(13, 3))
    assert R.breakpoint_consistency(3, math.inf)


def test_gamma_one_consistency():
    for n in range(3, 16):
        assert R.predicted_critical_p(1, n) == 3 + Fraction(2, n - 1)
    for m in range(2, 7):
        for n in range(2 * m + 2, 16):
            assert R.predicted_critical_p(1, n, m) == 3 + Fraction(1, m)


def test_monotone_in_gamma():
    cases = [(3, math.inf), (5, math.inf), (5, 2), (7, 3), (9, 2), (11, 3), (math.inf, 2)]
    for n, m in cases:
        lo, hi = R.gamma_range(n, m)
        lattice = [lo + (hi - lo) * Fraction(k, 40) for k in range(1, 41)]
        vals = [R.predicted_critical_p(g, n, m) for g in lattice]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_dinf_limit():
    m, g = 2, Fraction(3, 4)
    limit = 4 / (2 * g - 1)
    for n, tol in ((10**3, 1e-2), (10**6, 1e-5)):
        v = Fraction(2 * (2 * n - m - 1)) / (2 * n * g - n - 1)
        assert abs(float(v - limit)) < tol


def test_scan_exponents():
    assert R.scan_exponents(2, 1) == (Fraction(1, 3), Fraction(2, 3))
    lower = Fraction(6, 10)  # (n+1)/(2n) at n=5
    assert R.scan_exponents(2, lower)[0] == 4 * Fraction(6, 10) / 3 - 1 < 0


# ---------------------------------------------------------------- geometry

def test_quasi_distance_examples():
    assert R.quasi_distance((0, 0), 3) == 0
    assert R.quasi_distance((1, 0), 3) == 1
    assert R.quasi_distance((0.25, 0.25), 3) == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(InvalidInvariants):
        R.quasi_distance((1, 1), math.inf)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([3, 4, 5, 7, 11]))
def test_anisotropic_scaling(t, a, b, n):
    s = np.array([a, b])
    assert R.quasi_distance(R.quasi_dilation(s, t, n), n) == pytest.approx(t * R.quasi_distance(s, n),
                                                                            rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_quasi_triangle(n):
    rng = np.random.default_rng(n)
    s = rng.uniform(-1, 1, (10**4, 2)) * 10.0 ** rng.uniform(-4, 0, (10**4, 1))
    t = rng.uniform(-1, 1, (10**4, 2)) * 10.0 ** rng.uniform(-4, 0, (10**4, 1))
    ratio = R.quasi_distance(s + t, n) / (R.quasi_distance(s, n) + R.quasi_distance(t, n))
    C = float(ratio.max())
    # exponents are below 2, so the constant is at most 2^(2n/(n+1) - 1)
    assert 1.0 <= C <= 2 ** (2 * n / (n + 1) - 1) + 1e-12
    print(f"quasi-triangle constant n={n}: C = {C:.4f}")


def test_lambda_grid():
    g = R.LambdaGrid(2.0, 4)
    assert g.values == (2.0, 4.0, 8.0, 16.0)
    h = R.LambdaGrid(2.0, 2, substeps=4)
    assert h.values == (2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0)
    assert g.with_midpoints().values[1] == pytest.approx(2 * math.sqrt(2))
    assert g.scaled(3.0).values == tuple(3 * v for v in g.values)
    for bad in (dict(lambda0=1.5), dict(levels=0), dict(substeps=0), dict(extra=(0.5,))):
        with pytest.raises(ConfigError):
            R.LambdaGrid(**bad)


@pytest.mark.parametrize("n,K", [(3, 8), (3, 16), (5, 12), (7, 16)])
def test_sgrid_cells(n, K):
    g = R.SGrid.quasi_polar(n, 2, 5, K)
    assert g.annuli == [2, 3, 4, 5]
    for j in g.annuli:
        cells = g.annulus(j)
        assert len(cells) >= K
        for c in cells:
            rho = R.quasi_distance(c.center, n)
            assert 2.0 ** (-j - 1) <= rho <= 2.0 ** -j
            assert np.sign(c.center[0]) == c.quadrant[0] and np.sign(c.center[1]) == c.quadrant[1]
        areas = {round(c.area, 15) for c in cells}
        assert len(areas) == 1  # equal-area bins
    # total area against Monte Carlo over the bounding box
    rng = np.random.default_rng(0)
    hi = (2.0 ** -2) ** np.array([(n - 1) / n, (n + 1) / (2 * n)])
    x = rng.uniform(-1, 1, (400_000, 2)) * hi
    rho = R.quasi_distance(x, n)
    frac = np.mean((rho >= 2.0 ** -6) & (rho <= 2.0 ** -2))
    assert g.total_area() == pytest.approx(frac * 4 * hi[0] * hi[1], rel=0.02)


def test_sgrid_self_similar():
    g = R.SGrid.quasi_polar(3, 2, 3, 8)
    for a, b in zip(g.annulus(2), g.annulus(3)):
        np.testing.assert_allclose(R.quasi_dilation(a.center, 0.5, 3), b.center, rtol=1e-13)
        assert b.area == pytest.approx(a.area * 0.5 ** (4 / 3), rel=1e-12)


def test_sgrid_rejects():
    with pytest.raises(ConfigError):
        R.SGrid.quasi_polar(3, 4, 2)
    with pytest.raises(ConfigError):
        R.SGrid.quasi_polar(3, 2, 4, 2)


def test_gauges():
    assert R.gauge_for(DPhase.model(3)) == 3
    assert R.gauge_for(DPhase.normal_form(7, 2)) == 5
    assert R.family_invariants(DPhase.normal_form(5, 2))[0] == Regime.EXCEPTIONAL


# ---------------------------------------------------------------- sampling

SMALL = R.LambdaGrid(2.0, 6, substeps=2)


def test_randol_value_zero_amplitude():
    e = R.randol_value(MODEL, 1.0, (0.1, 0.1), SMALL, amplitude=Amplitude(0.5, scale=0.0))
    assert e.value == 0.0


def test_randol_monotone_in_gamma():
    e1 = R.randol_value(MODEL, 0.8, (0.05, 0.02), SMALL)
    e2 = R.randol_value(MODEL, 0.9, (0.05, 0.02), SMALL)
    e3 = R.randol_value(MODEL, 1.0, (0.05, 0.02), SMALL)
    assert 0 < e1.value <= e2.value <= e3.value
    assert e1.regamma(1.0).value == e3.value


def test_randol_errors():
    with pytest.raises(GammaOutOfRange):
        R.randol_value(MODEL, 0.6, (0.1, 0.1), SMALL)
    with pytest.raises(ConfigError):
        R.randol_value(MODEL, 1.0, (0.1, 0.1), ())


def test_decay_fit_needs_six():
    with pytest.raises(InsufficientData):
        R.decay_fit(MODEL, (0, 0), [4.0, 8.0, 16.0])


def test_decay_fit_morse_region():
    # rho(s) ~ 0.8: two saddles; an amplitude around one of them isolates a clean lam^-1 term
    s = (0.6, 0.5)
    assert R.quasi_distance(s, 3) == pytest.approx(0.818, abs=1e-3)
    pp = MODEL.at(s)
    cps = classify_all(pp, critical_points(pp, box=((-2, 2), (-2, 2))))
    assert len(cps) == 2 and all(c.type == CPType.A1 for c in cps)
    amp = Amplitude(0.3, center=cps[-1].location)
    fit = R.decay_fit(MODEL, s, [2.0**k for k in range(6, 13)], amplitude=amp)
    assert fit.slope == pytest.approx(-1.0, abs=0.05)


def test_flagged_samples_excluded(tmp_path):
    e = R.randol_value(MODEL, 1.0, (0.0, 0.0), R.LambdaGrid(2.0**16, 1), STARVED)
    assert e.flagged


def test_field_symmetry_and_zero():
    g = R.SGrid.quasi_polar(3, 2, 2, 8)
    fld = R.maximal_field(MODEL, 1.0, g, SMALL)
    by = {(c.quadrant, c.index % 2): e.value for c, e in zip(g.cells, fld.entries)}
    for k in range(2):
        assert by[((1, 1), k)] == pytest.approx(by[((1, -1), 1 - k)], rel=1e-9) or \
            by[((1, 1), k)] == pytest.approx(by[((1, -1), k)], rel=1e-9)
    # s2 -> -s2 mirror pairs, matched by centre
    vals = {c.center: e.value for c, e in zip(g.cells, fld.entries)}
    for (s1, s2), v in vals.items():
        assert vals[(s1, -s2)] == pytest.approx(v, rel=1e-9)
    zero = R.maximal_field(MODEL, 1.0, g, SMALL, amplitude=Amplitude(0.5, scale=0.0))
    assert all(e.value == 0 for e in zero.entries)


def test_field_unreliable():
    g = R.SGrid.quasi_polar(3, 2, 2, 4)
    with pytest.raises(AnnulusUnreliable):
        R.maximal_field(MODEL, 1.0, g, R.LambdaGrid(2.0**16, 1), STARVED)


def synthetic_field(exponent: float, js=range(2, 10), n=3, gamma=1.0, regime=Regime.LA):
    """A field with M = rho^-exponent exactly at the cell centres."""
    g = R.SGrid.quasi_polar(n, js[0], js[-1], 8)
    ents = []
    for c in g.cells:
        v = R.quasi_distance(c.center, n) ** -exponent
        ents.append(R.FieldEntry(c.center, v, 2.0, 0.0, False))
    return R.MaximalField(gamma, g, tuple(ents), R.LambdaGrid(), "synthetic", regime, n, math.inf)


@pytest.mark.parametrize("exponent", [1 / 3, 0.25, 0.5])
def test_lp_probe_synthetic(exponent):
    # rho^-e is in L^q locally iff q e < D = (a + b), the homogeneous dimension of the gauge
    D = 2 / 3 + 2 / 3
    rep = R.lp_probe(synthetic_field(exponent))
    assert rep.p_hat_empirical == pytest.approx(D / exponent, abs=1e-6)
    assert rep.p_star_predicted == 4
    assert (rep.verdict == R.Verdict.CONSISTENT) == (abs(D / exponent - 4) <= 0.35)


def test_lp_probe_bounded_field_inconclusive():
    rep = R.lp_probe(synthetic_field(0.0))
    assert rep.verdict == R.Verdict.INCONCLUSIVE and rep.note == "no blow-up detected"


def test_lp_probe_needs_six_annuli():
    with pytest.raises(InsufficientData):
        R.lp_probe(synthetic_field(1 / 3, js=range(2, 6)))


def test_parse_q_grid():
    assert R.parse_q_grid("1:2:0.5") == (1.0, 1.5, 2.0)
    for bad in ("1:2", "2:1:0.5", "a:b:c", "1:2:0"):
        with pytest.raises(ConfigError):
            R.parse_q_grid(bad)
