import numpy as np
import pytest

from quantum_reliability import apparatus as app
from quantum_reliability import flipcode as fc
from quantum_reliability.dynamics import propagator, thermal_qubit, unitary_channel
from quantum_reliability.events import Projector, complement
from quantum_reliability.histories import (
    extended_chain_kets,
    lifetime_family,
    reliability_curve,
    survival_sequence,
    weight,
)
from quantum_reliability.numkernel import kron, ket_projector, unvec, vec

from conftest import random_unitary

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
E0 = Projector(np.diag([1.0, 0.0]))


# --- measurement operators and dilation ----------------------------------------

@pytest.mark.parametrize("k", [1, 2, 4])
def test_measurement_operator_unitary(k, rng):
    e = Projector.onto(random_unitary(rng, 3)[:, 0])
    o = app.measurement_operator(k, e, 5)
    assert np.linalg.norm(o.conj().T @ o - np.eye(15)) <= 1e-12


def test_measurement_operator_limits():
    f2 = app.counter_shift(2, 4)
    assert np.allclose(f2, np.eye(4)[[0, 2, 1, 3]])
    assert np.allclose(app.measurement_operator(2, Projector.identity(2), 4), kron(np.eye(2), f2))
    assert np.allclose(app.measurement_operator(2, Projector.zero(2), 4), np.eye(8))
    with pytest.raises(ValueError):
        app.measurement_operator(4, E0, 4)
    with pytest.raises(ValueError):
        app.counter_shift(0, 3)


def test_dilated_hadamard_family_consistent_and_weight_preserving():
    fam = lifetime_family(KET0, [1.0, 2.0], E0)
    us = [H, H]
    gram = app.dilated_consistency(fam, us, E0)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) <= 1e-12
    plain = [weight(t, us) for t in fam.trajectories]
    assert np.max(np.abs(app.dilated_weights(fam, us, E0) - plain)) <= 1e-12


def test_dilated_two_qubit_family(rng):
    us = [random_unitary(rng, 4) for _ in range(3)]
    events = [Projector.onto(*random_unitary(rng, 4)[:, :2].T) for _ in range(3)]
    psi = random_unitary(rng, 4)[:, 0]
    fam = lifetime_family(psi, [1.0, 2.0, 3.0], events)
    gram = app.dilated_consistency(fam, us, events)
    assert np.max(np.abs(gram - np.diag(np.diag(gram)))) <= 1e-12
    plain = [weight(t, us) for t in fam.trajectories]
    assert np.max(np.abs(np.diag(gram) - plain)) <= 1e-12
    assert np.isclose(sum(plain), 1.0)


def test_dilation_rejects_foreign_projector():
    fam = lifetime_family(KET0, [1.0], Projector.onto([1, 1]))
    with pytest.raises(ValueError):
        app.dilated_weights(fam, [H], E0)


# --- discrete records -------------------------------------------------------

def test_unitary_counter_state_matches_g_relations_and_chain_kets(rng):
    d, f = 3, 5
    us = [random_unitary(rng, d)] * f
    e = Projector.onto(np.eye(d)[0], np.eye(d)[1])
    psi = random_unitary(rng, d)[:, 0]
    full = app.apparatus_matrix_unitary(psi, us, e)
    assert full.shape == (f + 1, f + 1)
    assert np.isclose(np.trace(full).real, 1.0)
    block = app.apparatus_matrix_discrete(unitary_channel(us[0]), e, psi, f, 1.0)
    assert np.allclose(block.entries, full[:f, :f], atol=1e-12)
    fam = lifetime_family(psi, [float(k) for k in range(1, f + 1)], e)
    kets = extended_chain_kets(fam, us)[:f]
    assert np.allclose(kets @ kets.conj().T, block.entries, atol=1e-12)
    r_f = survival_sequence(unitary_channel(us[0]), e, psi, f)[-1]
    assert np.isclose(full[f, f].real, r_f)


def dilated_markov_counter(step, survival, psi, f):
    """Independent oracle: evolve system (x) counter blocks with the channel and O_k."""
    d = survival.dim
    c = f + 1
    joint = np.zeros((c, c, d, d), dtype=complex)
    joint[0, 0] = ket_projector(psi)
    for k in range(1, f + 1):
        for i in range(c):
            for j in range(c):
                joint[i, j] = unvec(step.matrix @ vec(joint[i, j]), d)
        big = joint.transpose(2, 0, 3, 1).reshape(d * c, d * c)
        o = app.measurement_operator(k, survival, c)
        big = o @ big @ o.conj().T
        joint = big.reshape(d, c, d, c).transpose(1, 3, 0, 2)
    return np.einsum("ijss->ij", joint)


@pytest.mark.parametrize("alpha,n", [(1.0, 0.0), (0.8, 0.2), (0.5, 0.4)])
def test_discrete_matrix_matches_dilated_channel(alpha, n):
    params = fc.CodeParams(alpha, n)
    model, e, psi = fc.logical_setup(params)
    step = propagator(model, 0.2)
    f = 6
    oracle = dilated_markov_counter(step, e, psi, f)
    m = app.apparatus_matrix_discrete(step, e, psi, f, 0.2)
    assert np.allclose(m.entries, oracle[:f, :f], atol=1e-12)
    assert np.isclose(oracle[f, f].real, survival_sequence(step, e, psi, f)[-1])


def test_discrete_matrix_structure():
    params = fc.CodeParams(0.85, 0.15)
    model, e, psi = fc.logical_setup(params)
    dt, f = 0.02, 200
    step = propagator(model, dt)
    m = app.apparatus_matrix_discrete(step, e, psi, f, dt)
    r = survival_sequence(step, e, psi, f)
    assert m.hermiticity_error() <= 1e-10
    assert m.min_eigenvalue() >= -1e-10
    assert abs(m.trace - (1 - r[-1])) <= 1e-10
    assert np.max(np.abs(m.diagonal - (r[:-1] - r[1:]))) <= 1e-12
    assert m.violations() == []
    assert np.allclose(m.times, dt * np.arange(1, f + 1))
    r_, u = app.g_table_vectors(step, e, psi, f)
    assert np.isclose(r_[0] @ u[0], 1.0)


def test_dark_state_zero_matrix():
    params = fc.CodeParams(0.0, 0.0)
    model, e, psi = fc.logical_setup(params)
    m = app.apparatus_matrix_discrete(propagator(model, 0.1), e, psi, 20, 0.1)
    assert np.allclose(m.entries, 0, atol=1e-15)
    with pytest.raises(ValueError):
        app.lifetime_mean(m)
    with pytest.raises(ValueError):
        app.entropy_gap(m)


def test_classical_code_state_has_no_interference():
    model, e, psi = fc.logical_setup(fc.CodeParams(1.0, 0.3))
    m = app.apparatus_matrix_discrete(propagator(model, 0.05), e, psi, 60, 0.05)
    assert np.max(np.abs(m.entries - np.diag(np.diag(m.entries)))) <= 1e-14


def test_discrete_diagonal_density_matches_closed_form_derivative():
    params = fc.CodeParams(1.0, 0.0)
    model, e, psi = fc.logical_setup(params)

    def deriv(t):
        return 6 * np.exp(-2 * t) - 6 * np.exp(-3 * t)

    left, mid = [], []
    for dt in (0.01, 0.005):
        f = int(round(5 / dt))
        m = app.apparatus_matrix_discrete(propagator(model, dt), e, psi, f, dt)
        left.append(np.max(np.abs(m.diagonal / dt - deriv(m.at_risk_times))))
        mid.append(np.max(np.abs(m.diagonal / dt - deriv(m.at_risk_times + dt / 2))))
    assert left[0] < 0.05
    assert 1.8 < left[0] / left[1] < 2.2
    # sampled at the cell midpoint the error drops to second order
    assert 3.5 < mid[0] / mid[1] < 4.5


def test_discrete_off_diagonals_converge_to_continuum_kernel():
    params = fc.CodeParams(0.8, 0.1)
    model, e, psi = fc.logical_setup(params)
    blocks = app.d_blocks(0.8, 0.1)
    errs = []
    for dt in (0.02, 0.01):
        f = int(round(1.0 / dt))
        m = app.apparatus_matrix_discrete(propagator(model, dt), e, psi, f, dt)
        i, j = int(round(0.2 / dt)), int(round(0.6 / dt))
        kernel = app.rho_continuous(0.2, 0.4, blocks, form="g_limit")
        errs.append(abs(m.entries[i, j] / dt**2 - kernel))
    assert errs[1] < 0.7 * errs[0]
    assert errs[1] < 0.05 * abs(kernel) + 1e-3


def test_failure_rate():
    model = thermal_qubit(0.0)
    e = Projector.onto(KET1)
    dt = 1e-3
    f = 3000
    m = app.apparatus_matrix_discrete(propagator(model, dt), e, KET1, f, dt)
    curve = reliability_curve(model, e, KET1, f * dt, dt)
    x = app.failure_rate(m, curve)
    assert np.max(np.abs(x / dt - 1)) <= 1e-3

    model3, e3, psi3 = fc.logical_setup(fc.CodeParams(1.0, 0.0))
    m3 = app.apparatus_matrix_discrete(propagator(model3, dt), e3, psi3, 100, dt)
    c3 = reliability_curve(model3, e3, psi3, 0.1, dt)
    x3 = app.failure_rate(m3, c3) / dt
    assert x3[0] < 1e-2 and np.all(np.diff(x3) > 0)

    short = reliability_curve(model, e, KET1, 1.0, dt)
    with pytest.raises(ValueError):
        app.failure_rate(m, short)


def test_failure_rate_marks_dead_records():
    u = np.array([[0, 1], [1, 0]])
    m = app.apparatus_matrix_discrete(unitary_channel(u), E0, KET0, 3, 1.0)
    from quantum_reliability.histories import ReliabilityCurve

    curve = ReliabilityCurve(np.arange(4.0), survival_sequence(unitary_channel(u), E0, KET0, 3), np.zeros(4))
    x = app.failure_rate(m, curve)
    assert x[0] == pytest.approx(1.0) and np.all(np.isnan(x[1:]))


def test_lifetime_mean_single_certain_failure():
    u = np.array([[0, 1], [1, 0]])
    m = app.apparatus_matrix_discrete(unitary_channel(u), E0, KET0, 1, 2.5)
    assert app.lifetime_mean(m) == pytest.approx(2.5)


# --- continuous records ------------------------------------------------------

def test_d_block_examples():
    b = app.d_blocks(1.0, 0.0, "printed")
    assert np.allclose(b.d1, [[-3, 0], [-1, 2]])
    b = app.d_blocks(1.0, 0.0)
    assert np.allclose(b.d1, [[-3, 0], [1, -2]])
    assert np.allclose(b.d4, [[-1.5, 0], [0, -1.5]])
    assert np.allclose(b.d2, 0) and np.allclose(b.d3, 0)
    for bad in [(1.1, 0.0), (0.5, 0.7)]:
        with pytest.raises(ValueError):
            app.d_blocks(*bad)
    with pytest.raises(ValueError):
        app.d_blocks(0.5, 0.1, "typo")


@pytest.mark.parametrize("alpha,n", [(1.0, 0.0), (0.9, 0.25), (0.3, 0.5), (1 / np.sqrt(2), 0.0)])
def test_blocks_reliability_is_closed_form(alpha, n):
    t = np.linspace(0, 5, 41)
    b = app.d_blocks(alpha, n)
    assert np.max(np.abs(app.blocks_reliability(t, b) - fc.r_logical_closed_raw(t, fc.CodeParams(alpha, n)))) <= 1e-10


@pytest.mark.parametrize("variant", app.VARIANTS)
@pytest.mark.parametrize("form", app.FORMS)
def test_phase_invariance(variant, form):
    rng = np.random.default_rng(5)
    for _ in range(5):
        t, tau = rng.uniform(0, 3, size=2)
        alpha, n = rng.uniform(0, 1), rng.uniform(0, 0.5)
        values = [app.rho_continuous(t, tau, app.d_blocks(alpha, n, variant, phi), form) for phi in (0, 1.7, np.pi)]
        assert max(abs(v - values[0]) for v in values) <= 1e-12


@pytest.mark.parametrize("alpha", [0.2, 0.9])
def test_rho_continuous_origin_finite_real(alpha):
    for variant in app.VARIANTS:
        v = app.rho_continuous(0.0, 0.0, app.d_blocks(alpha, 0.1, variant))
        assert np.isfinite(v) and abs(v.imag) <= 1e-14


def test_as_printed_kernel_nonzero_for_classical_state():
    b = app.d_blocks(1.0, 0.0)
    assert abs(app.rho_continuous(0.5, 0.5, b, "as_printed")) > 0.1
    assert abs(app.rho_continuous(0.5, 0.5, b, "g_limit")) <= 1e-14
    with pytest.raises(ValueError):
        app.rho_continuous(0.5, 0.5, b, "other")


@pytest.mark.parametrize("alpha,n", [(0.9, 0.0), (0.6, 0.2), (0.3, 0.5)])
def test_full_model_continuous_matrix_matches_blocks(alpha, n):
    params = fc.CodeParams(alpha, n)
    model, e, psi = fc.logical_setup(params)
    full = app.apparatus_matrix_continuous(model, e, psi, 4.0, 40)
    blocks = app.apparatus_matrix_blocks(app.d_blocks(alpha, n), 4.0, 40)
    assert np.max(np.abs(full.entries - blocks.entries)) <= 1e-10


@pytest.mark.parametrize("alpha,n", [(1.0, 0.0), (0.9, 0.1), (0.4, 0.0), (0.2, 0.5)])
def test_continuous_matrix_structure(alpha, n):
    m = app.apparatus_matrix_blocks(app.d_blocks(alpha, n), 10.0, 200)
    assert m.hermiticity_error() <= 1e-10
    assert m.min_eigenvalue() >= -1e-10
    r_end = fc.r_logical_closed_raw(10.0, fc.CodeParams(alpha, n))
    assert abs(m.trace - (1 - r_end)) <= 1e-10
    s_s, s_v, gap = app.entropy_gap(m)
    assert gap >= -1e-12
    assert app.entropy_gap(m.diagonalized())[2] == pytest.approx(0.0, abs=1e-12)


def test_as_printed_kernel_breaks_positivity():
    m = app.apparatus_matrix_blocks(app.d_blocks(1.0, 0.0), 10.0, 100, form="as_printed")
    assert any("positive" in v for v in m.violations())


def test_continuous_lifetime_means():
    m = app.apparatus_matrix_blocks(app.d_blocks(1.0, 0.0), 15.0, 600)
    assert app.lifetime_mean(m) == pytest.approx(5 / 6, abs=1e-3)
    m1 = app.apparatus_matrix_continuous(thermal_qubit(0.0), Projector.onto(KET1), KET1, 15.0, 600)
    assert app.lifetime_mean(m1) == pytest.approx(1.0, abs=1e-3)


def test_entropy_examples():
    diag = app.ApparatusMatrix(np.diag([0.2, 0.3, 0.5]), np.arange(3.0), np.arange(3.0))
    s_s, s_v, gap = app.entropy_gap(diag)
    assert gap == pytest.approx(0.0, abs=1e-15)
    assert s_s == pytest.approx(-np.sum([p * np.log(p) for p in (0.2, 0.3, 0.5)]))
    v = np.array([1, 1j, -1]) / np.sqrt(3)
    pure = app.ApparatusMatrix(0.5 * np.outer(v, v.conj()), np.arange(3.0), np.arange(3.0))
    s_s, s_v, gap = app.entropy_gap(pure)
    assert s_v == pytest.approx(0.0, abs=1e-12) and s_s == pytest.approx(np.log(3)) and gap > 0
    n = pure.normalize()
    assert n.normalized and n.trace == pytest.approx(1.0)


def test_apparatus_matrix_validation():
    with pytest.raises(ValueError):
        app.ApparatusMatrix(np.zeros((2, 3)), [0, 1], [0, 1])
    with pytest.raises(ValueError):
        app.ApparatusMatrix(np.eye(2), [0, 1, 2], [0, 1, 2])
    with pytest.raises(ValueError):
        app.ApparatusMatrix(np.full((2, 2), np.nan), [0, 1], [0, 1])
    bad = app.ApparatusMatrix(np.array([[0.9, 0.5], [0.1, 0.4]]), [0, 1], [0, 1])
    assert any("Hermitian" in v for v in bad.violations())
    big = app.ApparatusMatrix(np.eye(2), [0, 1], [0, 1])
    assert any("trace" in v for v in big.violations())
