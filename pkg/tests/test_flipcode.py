import math

import numpy as np
import pytest

from quantum_reliability import flipcode as fc

GRID = [(a, n) for a in (0.0, 0.2, 0.5, 1 / math.sqrt(2), 0.9, 1.0) for n in (0.0, 0.25, 0.5)]
S2 = 1 / math.sqrt(2)


def P(a, n=0.0):
    return fc.CodeParams(a, n)


def test_params_validation():
    for a, n in [(-0.1, 0.0), (1.01, 0.0), (0.5, -0.1), (0.5, 0.51)]:
        with pytest.raises(ValueError):
            P(a, n)
    assert P(0.6).beta == pytest.approx(0.8)
    assert np.allclose(P(0.6).physical_state(), [0.8, 0.6])


@pytest.mark.parametrize("a,m", [(1.0, 1.0), (0.0, 0.0), (S2, 0.25)])
def test_coeff_m_examples(a, m):
    assert fc.coeff_m(P(a)) == pytest.approx(m, abs=1e-15)


@pytest.mark.parametrize("a,n", GRID)
def test_coeff_m_formula(a, n):
    b2 = 1 - a * a
    assert fc.coeff_m(P(a, n)) == pytest.approx((1 - n) * a**4 + n * b2**2, abs=1e-14)


def test_r_physical_examples():
    assert fc.r_physical(0.0, P(0.3, 0.2)) == 1.0
    assert fc.r_physical(1.0, P(1.0)) == pytest.approx(math.exp(-1))


@pytest.mark.parametrize(
    "a,q",
    [(1.0, (-3, 0, 1, -2)), (S2, (-1.5, 0.75, 0.25, -1)), (0.0, (0, 3, 0, -1))],
)
def test_q_coeffs_examples(a, q):
    # at alpha = 0 the -<sigma- sigma+> term of q4 survives; b never grows because q3 = 0
    assert np.allclose(fc.q_coeffs(P(a)), q, atol=1e-14)


def test_m_coeffs_examples():
    assert np.allclose(fc.m_coeffs((-3, 0, 1, -2)), (-2.5, 0.5, 5))
    assert np.allclose(fc.m_coeffs((-1.5, 0.75, 0.25, -1)), (-1.25, 0.5, 1))
    m1, m2, m3 = fc.m_coeffs((0, 3, 0, 0))
    assert (m1, m2) == (0, 0) and math.isnan(m3)
    cf = fc.closed_form(P(1.0))
    assert cf.m == 1.0 and np.allclose(cf.m123, (-2.5, 0.5, 5))


def test_r_logical_examples():
    t = np.linspace(0, 10, 101)
    assert np.allclose(fc.r_logical_closed(t, P(1.0)), 3 * np.exp(-2 * t) - 2 * np.exp(-3 * t), atol=1e-13)
    assert np.allclose(fc.r_logical_closed(t, P(S2)), np.exp(-0.75 * t), atol=1e-13)
    assert np.allclose(fc.r_logical_closed(t, P(0.0)), 1.0)


@pytest.mark.parametrize("a,n", GRID)
def test_closed_vs_ode(a, n):
    t = np.linspace(0, 5, 51)
    assert np.max(np.abs(fc.r_logical_closed_raw(t, P(a, n)) - fc.r_logical_ode(t, P(a, n)))) <= 1e-12


def test_degenerate_m2_limit():
    # M2 = 0 needs q2 q3 = 0 and q1 = q4; use the limit evaluated on either side
    t = np.linspace(0, 3, 7)
    p = P(0.0)
    assert np.allclose(fc.r_logical_closed_raw(t, p), fc.r_logical_ode(t, p))
    near = fc.r_logical_closed_raw(t, P(1e-9))
    assert np.allclose(near, 1.0, atol=1e-12)


def test_ode_validation():
    assert fc.r_logical_ode([0.0], P(0.4, 0.1))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fc.r_logical_ode([1.0, 0.5], P(0.4))
    with pytest.raises(ValueError):
        fc.r_logical_ode([-1.0], P(0.4))


def test_classical_curve():
    assert fc.classical_curve(1.0) == 1.0
    assert fc.classical_curve(0.5) == pytest.approx(0.5)
    assert fc.classical_curve(0.9) == pytest.approx(0.972)
    with pytest.raises(ValueError):
        fc.classical_curve(1.2)


def test_alpha_one_identity():
    t = np.linspace(0, 10, 1000)
    rp = fc.r_physical(t, P(1.0))
    assert np.max(np.abs(fc.r_logical_closed(t, P(1.0)) - fc.classical_curve(rp))) <= 1e-12


@pytest.mark.parametrize("a,n", GRID)
def test_logical_bounded_and_monotone(a, n):
    r = fc.r_logical_closed_raw(np.linspace(0, 10, 2001), P(a, n))
    assert np.all(r >= -1e-12) and np.all(r <= 1 + 1e-12)
    assert np.all(np.diff(r) <= 1e-12)


@pytest.mark.parametrize("a,n", [(0.9, 0.1), (0.4, 0.3)])
def test_gamma0_rescaling(a, n):
    s = np.linspace(0, 5, 21)
    p = P(a, n)
    for g in (0.5, 3.0):
        assert np.allclose(fc.r_logical_closed(s / g, p, gamma0=g), fc.r_logical_closed(s, p), atol=1e-14)
        assert np.allclose(fc.r_physical(s / g, p, gamma0=g), fc.r_physical(s, p), atol=1e-14)
        assert np.allclose(fc.r_logical_ode(s / g, p, gamma0=g), fc.r_logical_ode(s, p), atol=1e-12)


def test_ft_classify_examples():
    c = fc.ft_classify(P(1.0))
    assert c.fault_tolerant and abs(c.r_c - 0.5) <= 1e-6 and c.label == "FT"
    assert fc.ft_classify(P(0.9)).fault_tolerant
    c = fc.ft_classify(P(0.2))
    assert not c.fault_tolerant and c.r_c is None and c.label == "NFT"


def test_ft_classify_dark_state_vacuous():
    c = fc.ft_classify(P(0.0, 0.0))
    assert c.fault_tolerant and c.r_c == 0.0


def test_ft_boundary_slope_sign_matches_classification():
    for a in (0.8, 0.85, 0.88, 0.9, 0.95):
        slope = fc.ft_boundary_slope(P(a))
        b2 = 1 - a * a
        assert slope == pytest.approx(a**4 - 3 * a * a * b2, abs=1e-14)
        assert (slope > 0) == fc.ft_classify(P(a)).fault_tolerant


def test_phase_diagram_rows_and_boundary():
    alphas = [round(0.1 * i, 10) for i in range(11)]
    rows = fc.phase_diagram(alphas, [0.0])
    assert [r[0] for r in rows] == alphas
    table = {(r[0], r[1]): r for r in rows}
    assert table[(1.0, 0.0)][2] == "FT" and table[(1.0, 0.0)][3] == pytest.approx(0.5, abs=1e-6)
    assert table[(0.2, 0.0)][2] == "NFT"
    classes = [r[2] for r in rows if r[0] > 0]
    flips = sum(a != b for a, b in zip(classes, classes[1:]))
    assert flips == 1 and classes[0] == "NFT" and classes[-1] == "FT"


def test_phase_diagram_parallel_matches_serial():
    a, n = [0.95, 0.3, 0.9], [0.2, 0.0]
    assert fc.phase_diagram(a, n, workers=2) == fc.phase_diagram(a, n, workers=1)


def test_entropy_scan():
    rows = fc.entropy_scan([0.0, 0.6, 1.0], [0.0, 0.5], grid=60)
    assert [(r[0], r[1]) for r in rows] == [(0.0, 0.0), (0.0, 0.5), (0.6, 0.0), (0.6, 0.5), (1.0, 0.0), (1.0, 0.5)]
    assert all(math.isnan(x) for x in rows[0][2:])
    for r in rows[1:]:
        assert r[4] >= -1e-12
        assert r[4] == pytest.approx(r[2] - r[3])
