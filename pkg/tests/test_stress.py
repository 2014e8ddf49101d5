import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcflow import linmodes as lm
from cmcflow import stress as sx
from cmcflow.dsgeom import minkowski_metric

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 3)


def _gen(seed):
    return np.random.Generator(np.random.Philox(seed))


def test_Z_contractions_at_background():
    for d in (1, 2, 3):
        n = d + 1
        eta = minkowski_metric(n)
        Z = sx.Z_tensor(eta)
        assert np.allclose(np.einsum("mnaa->mn", Z), (d - 1) * eta)
        tl = np.zeros(n)
        tl[0] = -1
        tu = -tl
        lhs = np.einsum("mnac,a,c->mn", Z, tl, tu)
        assert np.allclose(lhs, -eta - 2 * np.outer(tu, tu))


@given(seeds, dims)
def test_Z_symmetric_in_upper_pair(seed, d):
    rng = _gen(seed)
    G = sx.sample_near_metric(rng, 1.0, 1.0, d)
    Z = sx.Z_tensor(G)
    assert np.allclose(Z, np.swapaxes(Z, 0, 1), atol=1e-15)


@given(seeds, dims)
def test_S_zero_scaling_and_pair_symmetry(seed, d):
    rng = _gen(seed)
    G = sx.sample_near_metric(rng, 1.0, 1.0, d)
    phi = sx.random_sym(rng, d + 1)
    assert np.all(sx.S_tensor(G, np.zeros_like(phi)) == 0)
    S = sx.S_tensor(G, phi)
    for s in (2.0, 3.0):
        assert np.allclose(sx.S_tensor(G, s * phi), s * s * S, rtol=1e-13, atol=1e-13)
    assert np.max(np.abs(S - np.transpose(S, (1, 0, 3, 2)))) <= 1e-13 * max(1.0, np.abs(S).max())


@given(seeds, dims)
def test_dual_path_assembly(seed, d):
    rng = _gen(seed)
    A, B = rng.uniform(0.3, 3.0, 2)
    G = sx.sample_near_metric(rng, A, B, d)
    phi = sx.random_sym(rng, d + 1, (5,))
    S1, S2 = sx.S_tensor(G, phi), sx.S_expanded(G, phi)
    assert np.max(np.abs(S1 - S2)) <= 1e-12 * (1 + np.abs(S1).max())


def test_background_energy_density_is_sum_of_squares(rng):
    # at g = gbar, Z^{mn}|^0_0 is the identity, so S_tttt = sum of squared components
    for d in (1, 2, 3):
        phi = sx.random_sym(rng, d + 1, (50,))
        S = sx.S_tensor(minkowski_metric(d + 1), phi)
        assert np.allclose(sx.S_tttt(S), sx.frame_norm_sq(phi), rtol=1e-13)


def test_coercivity_single_component():
    phi = np.zeros((3, 3))
    phi[0, 0] = 1.0
    rep = sx.coercivity_check(minkowski_metric(3), 1.0, 1.0, phi)
    assert rep.hypotheses_hold and rep.holds
    assert rep.lhs == pytest.approx(1.0, abs=1e-15)
    assert rep.bound == 0.5


@given(seeds, dims, st.sampled_from([(1.0, 1.0), (0.5, 2.0), (3.0, 0.7)]))
def test_coercivity_within_margin(seed, d, AB):
    rng = _gen(seed)
    A, B = AB
    for _ in range(20):
        G = sx.sample_near_metric(rng, A, B, d, fraction=0.9)
        rep = sx.coercivity_check(G, A, B, sx.random_sym(rng, d + 1))
        assert rep.hypotheses_hold and rep.holds


def test_coercivity_reports_failed_hypotheses(rng):
    G = minkowski_metric(3) + 0.5
    rep = sx.coercivity_check(G, 1.0, 1.0, sx.random_sym(rng, 3))
    assert not rep.hypotheses_hold and rep.holds is None
    with pytest.raises(sx.DomainError):
        sx.coercivity_check(G, -1.0, 1.0, np.eye(3))


def test_coeff_metric_validation():
    assert sx.CoeffMetric.background(2).near_background
    with pytest.raises(sx.DomainError):
        sx.CoeffMetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(seeds, dims)
def test_deformation_main_terms_trace_free(seed, d):
    rng = _gen(seed)
    eta = minkowski_metric(d + 1)
    phi = sx.trace_free(sx.random_sym(rng, d + 1))
    full = sx.deformation_term(0.7, eta, phi)
    main = sx.deformation_main_terms(phi)
    assert full == pytest.approx(main, abs=1e-12 * (1 + abs(main)))
    assert full == pytest.approx(2 * (d + 1) * sx.phi_tau_sq(phi), abs=1e-12 * (1 + abs(main)))
    assert full >= -1e-12


def test_deformation_zero_and_singular_slice():
    eta = minkowski_metric(3)
    assert sx.deformation_term(1.0, eta, np.zeros((3, 3))) == 0
    with pytest.raises(sx.DomainError):
        sx.deformation_term(0.0, eta, np.eye(3))


def test_tau_supported_deformation_matches_main_terms():
    for d in (1, 2, 3):
        phi = np.zeros((d + 1, d + 1))
        phi[0, 0] = 1.3
        eta = minkowski_metric(d + 1)
        # trace-free only after removing the trace; compare on that part
        tf = sx.trace_free(phi)
        assert sx.deformation_term(2.0, eta, tf) == pytest.approx(sx.deformation_main_terms(tf), abs=1e-13)


def test_brendle_symmetrization(rng):
    for d in (1, 2, 3):
        eta = minkowski_metric(d + 1)
        phi = sx.trace_free(sx.random_sym(rng, d + 1))
        S = sx.S_tensor(eta, phi)
        Q = sx.brendle_Q(S)
        assert sx.symmetry_defect(Q) <= 1e-12
        if d < 3:
            # in low dimension the lowered tensor is already totally symmetric
            assert sx.symmetry_defect(sx.lower_S(S)) <= 1e-12
    # for d = 3 it is not: the symmetrization does real work
    phi = sx.trace_free(sx.random_sym(rng, 4))
    assert sx.symmetry_defect(sx.lower_S(sx.S_tensor(minkowski_metric(4), phi))) > 1e-3


def test_divergence_identity_second_order():
    errs = []
    for n in (32, 64, 128):
        t, th, G, phi = sx.sample_field_d1(n)
        errs.append(sx.S_divergence_identity(G, phi, t, th).discrepancy)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders[-1] == pytest.approx(2.0, abs=0.2)


def _linear_field(n, nt, t0=0.5, t1=1.5):
    th = lm.circle_grid(n)
    f0 = lm.LinearField1D(t0, 0.3 * np.cos(2 * th) + 0.1 * np.sin(3 * th), 0.2 * np.cos(th))
    t = np.linspace(t0, t1, nt)
    traj = lm.evolve_linear_1d(f0, t1, t, rtol=1e-12)
    return t, th, sx.phi_from_linear(traj)


def test_linear_field_is_divergence_free_to_second_order():
    res = []
    for n in (32, 64, 128):
        t, th, phi = _linear_field(n, n // 4 + 1)
        G = np.broadcast_to(minkowski_metric(2), phi.shape)
        r = sx.S_divergence_identity(G, phi, t, th)
        res.append(float(np.max(np.abs(r.fd_div))))
        assert r.discrepancy <= 10 * res[-1] + 1e-12
    assert np.log2(res[1] / res[2]) == pytest.approx(2.0, abs=0.25)


def test_linear_field_trace_free():
    t, th, phi = _linear_field(64, 9)
    tr = np.einsum("ab,...ab->...", minkowski_metric(2), phi)
    assert np.max(np.abs(tr)) <= 1e-10


def test_weighted_energy_properties(rng):
    phi = sx.random_sym(rng, 2, (64,))
    assert sx.weighted_energy(1.0, np.zeros_like(phi)) == 0
    E = sx.weighted_energy(1.3, phi)
    assert sx.weighted_energy(1.3, 2 * phi) == pytest.approx(4 * E, rel=1e-14)
    assert E >= 0.5 * (1 + 1.3**2) * sx.l2_sq_round(phi)


def test_energy_audit_linear_run_and_zero():
    t, th, phi = _linear_field(64, 201, 0.5, 3.0)
    rep = sx.basic_energy_audit(t, phi)
    assert rep.passed
    assert abs(rep.identity_residual) <= 1e-3 * rep.energy[0]
    zero = sx.basic_energy_audit(t, np.zeros_like(phi))
    assert zero.lhs == 0 and zero.passed
