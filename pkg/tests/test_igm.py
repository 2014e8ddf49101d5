import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcflow import igm
from cmcflow.dsgeom import minkowski_metric


def test_eta_from_zeta():
    assert igm.eta_from_zeta(0.0, 2) == 0.0
    assert igm.eta_from_zeta(1.0, 2) == pytest.approx(1.5, abs=1e-15)
    near = -1.0 / 3 + 1e-9
    assert igm.eta_from_zeta(near, 2) < -1e7
    with pytest.raises(igm.DomainError):
        igm.eta_from_zeta(-0.4, 2)


def test_A_at_background_and_inverse():
    assert igm.A_eigen(0.0, 2) == (1.0, 1.0)
    for z in (-0.2, 0.5, 2.0):
        assert np.allclose(igm.A_matrix(z, 2) @ igm.A_inverse(z, 2), np.eye(3), atol=1e-14)


@pytest.mark.parametrize("zeta", [-0.2, 0.1, 0.5, 2.0])
def test_phi_matches_A_minus_identity(zeta):
    d = 2
    A = igm.A_matrix(zeta, d)
    phi = igm.background_phi(zeta, d)
    assert np.allclose(igm.mixed(phi), A - np.eye(d + 1), atol=1e-12)


def test_psi_examples():
    assert np.allclose(igm.psi_from_phi(np.zeros((3, 3))), 0.0)
    g = minkowski_metric(3)
    psi = igm.psi_from_phi(0.1 * g)  # mixed form 0.1 I
    assert np.allclose(igm.mixed(psi), (1 / 1.1 - 1) * np.eye(3), atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.3))
def test_trace_identity_after_projection(seed, size):
    rng = np.random.Generator(np.random.Philox(seed))
    m = rng.normal(size=(3, 3))
    phi = igm.cmc_project(size * (m + m.T) / np.linalg.norm(m + m.T))
    psi = igm.psi_from_phi(phi)
    assert abs(igm.trace(psi)) <= 1e-12
    identity = igm.trace(phi) + np.trace(igm.mixed(phi) @ igm.mixed(psi))
    assert abs(identity) <= 1e-12


def test_pointwise_bounds():
    rep = igm.pointwise_bounds_check(np.zeros((3, 3)))
    assert rep.phi_norm == 0 and rep.trace_phi == 0
    rep = igm.pointwise_bounds_check(igm.background_phi(0.1, 2))
    assert rep.cmc_consistent
    assert rep.c_trace == pytest.approx(1.0569105691, rel=1e-9)


def test_pointwise_constants_stable_under_sweep(rng):
    m = rng.normal(size=(3, 3))
    base = (m + m.T) / np.linalg.norm(m + m.T)
    cs = []
    for s in np.linspace(0.05, 0.45, 9):
        cs.append(igm.pointwise_bounds_check(igm.cmc_project(s * base)).c_trace)
    assert max(cs) / min(cs) < 2.0


def test_zeta_rhs_examples():
    assert igm.zeta_rhs(3.0, 0.0, 2) == 0.0
    assert igm.zeta_rhs(0.0, 0.4, 2) == 0.0
    assert igm.zeta_rhs(1.0, 0.1, 2) == pytest.approx(-0.5 * (1.1 / (1 / 3 + 0.1)) * 0.1, abs=1e-15)
    assert igm.zeta_rhs(1.0, 0.1, 2) == pytest.approx(-0.126923076923, abs=1e-11)


def test_integrate_zeta_fixed_point_and_decay():
    run = igm.integrate_zeta(0.0, 1.0, 100.0, 2)
    assert np.all(run.zeta == 0)
    neg = igm.integrate_zeta(-0.05, 1.0, 1e3, 2, fit_window=(10, 1e3))
    assert neg.exponent == pytest.approx(3.0, abs=0.05)
    pos = igm.integrate_zeta(0.1, 1.0, 1e3, 2, fit_window=(10, 1e3))
    assert 2.9 <= pos.exponent <= 3.0


def test_B_spectrum_zeta_zero_all_two():
    for d in (1, 2, 3):
        assert np.allclose(igm.B_spectrum(0.0, d).eigenvalues, 2.0, atol=1e-14)
        assert np.allclose(igm.B_spectrum_dense(0.0, d), 2.0, atol=1e-12)


@pytest.mark.parametrize("zeta", [-0.2, 0.0, 0.5, 2.0])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_B_closed_form_matches_dense(zeta, d):
    closed = igm.B_spectrum(zeta, d).eigenvalues
    dense = np.sort(igm.B_spectrum_dense(zeta, d))
    assert np.max(np.abs(closed - dense)) <= 1e-10


def test_B_spectrum_values_at_half():
    spec = igm.B_spectrum(0.5, 2)
    assert spec.nu == 2.5
    for v in (2.0, 5.0, 0.8):
        assert np.min(np.abs(spec.eigenvalues - v)) < 1e-12


def test_B_loses_invertibility_as_nu_vanishes():
    small = [np.min(np.abs(igm.B_spectrum(z, 2).eigenvalues)) for z in (-0.3, -0.33, -0.333)]
    assert small[0] > small[1] > small[2]
    assert small[-1] < 0.01


def test_massterm_vanishing_cases_and_decay():
    assert np.allclose(igm.massterm(1.0, 0.0, 2), 0.0)
    assert np.allclose(igm.massterm(0.0, 0.3, 2), 0.0)
    run = igm.integrate_zeta(-0.05, 1.0, 1e3, 2, n_samples=400)
    norms = np.array([np.linalg.norm(igm.massterm(t, z, 2)) for t, z in zip(run.t, run.zeta)])
    p, _ = igm.fit_decay(run.t, norms, (10, 1e3))
    assert p == pytest.approx(3.0, abs=0.1)


def test_mainsystem_background_and_zero():
    run = igm.integrate_zeta(0.3, 0.5, 3.0, 1, n_samples=801, rtol=1e-12, atol=1e-14)
    theta = 2 * np.pi * np.arange(32) / 32
    field = igm.background_field(run.t, theta, run.zeta)
    res = igm.residual_mainsystem(field, run.t, theta, interior=2)
    assert res.curl <= 1e-6 and res.div <= 1e-6
    zero = igm.residual_mainsystem(np.zeros_like(field), run.t, theta)
    assert zero.curl == 0 and zero.div == 0
