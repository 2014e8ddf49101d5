import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcflow import meanc as mc
from cmcflow.dsgeom import CylCoord, jb, sphere_tangent_basis

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 3)


def _gen(seed):
    return np.random.Generator(np.random.Philox(seed))


def _unit(rng, d):
    w = rng.normal(size=d + 1)
    return w / np.linalg.norm(w)


def _small_jet(rng, d, size=0.05):
    h = rng.normal(size=(d + 1, d + 1))
    return mc.Jet2(size * rng.normal(), size * rng.normal(size=d + 1), size * (h + h.T))


def _e0(d):
    w = np.zeros(d + 1)
    w[0] = 1.0
    return w


def _H(t, omega, jet, d):
    return mc.normal_graph_mean_curvature(mc.NormalGraphPoint(CylCoord(t, omega, d), jet))


# --------------------------------------------------------------- flat chart


def test_flat_graph_examples():
    for d in (1, 2, 3):
        assert mc.graph_mean_curvature(mc.Jet2.zero(d + 1), d) == 0.0
        affine = mc.Jet2(0.3, np.linspace(0.1, 0.2, d + 1), np.zeros((d + 1, d + 1)))
        assert mc.graph_mean_curvature(affine, d) == 0.0
        assert abs(mc.graph_mean_curvature(mc.hyperboloid_chart_jet(d), d)) == pytest.approx(d + 1)


def test_flat_graph_rejects_null_gradient():
    with pytest.raises(mc.TimelikeViolation):
        mc.graph_mean_curvature(mc.Jet2(0.0, [2.0, 0.0], np.zeros((2, 2))), 1)


# ------------------------------------------------------------ normal graphs


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sign_lock(d):
    assert _H(0.4, _e0(d), mc.Jet2.zero(d + 1), d) == pytest.approx(d + 1, abs=1e-13)


@given(seeds, dims, st.floats(-0.5, 0.5))
def test_constant_height_is_scaled_hyperquadric(seed, d, eps):
    rng = _gen(seed)
    jet = mc.Jet2(eps, np.zeros(d + 1), np.zeros((d + 1, d + 1)))
    H = _H(rng.uniform(-3, 3), _unit(rng, d), jet, d)
    assert H == pytest.approx((d + 1) / (1 - eps), abs=1e-10)


@given(seeds, dims)
def test_affine_in_hessian(seed, d):
    rng = _gen(seed)
    t, w = rng.uniform(-2, 2), _unit(rng, d)
    base = _small_jet(rng, d)
    X, Y = _small_jet(rng, d).hess, _small_jet(rng, d).hess
    lhs = _H(t, w, base.with_hess(X + Y), d) + _H(t, w, base.with_hess(0 * X), d)
    rhs = _H(t, w, base.with_hess(X), d) + _H(t, w, base.with_hess(Y), d)
    assert lhs == pytest.approx(rhs, abs=1e-10)


@given(seeds, dims)
def test_rotation_invariance(seed, d):
    rng = _gen(seed)
    t, w = rng.uniform(-2, 2), _unit(rng, d)
    basis = sphere_tangent_basis(w)
    jet = _small_jet(rng, d)
    q, _ = np.linalg.qr(rng.normal(size=(d + 1, d + 1)))
    H0 = mc.mean_curvature_fields(t, w, basis, jet.value, jet.grad, jet.hess)
    H1 = mc.mean_curvature_fields(t, q @ w, basis @ q.T, jet.value, jet.grad, jet.hess)
    assert H1 == pytest.approx(H0, abs=1e-10)
    # translated graphs: rotating (base, shift) together leaves the jet unchanged
    xi = 0.2 * rng.normal(size=d + 2)
    R = np.eye(d + 2)
    R[1:, 1:] = q
    a = mc.translated_ds_jet(xi, t, w, basis)
    b = mc.translated_ds_jet(R @ xi, t, q @ w, basis @ q.T)
    for u, v in zip(a, b):
        assert np.allclose(u, v, atol=1e-10)


@given(seeds, dims, st.floats(0.5, 2.0))
def test_scaling(seed, d, lam):
    rng = _gen(seed)
    t, w = rng.uniform(-2, 2), _unit(rng, d)
    jet = _small_jet(rng, d)
    scaled = mc.Jet2(1 - lam * (1 - jet.value), lam * jet.grad, lam * jet.hess)
    assert _H(t, w, scaled, d) == pytest.approx(_H(t, w, jet, d) / lam, abs=1e-10)


@given(seeds, dims)
def test_translated_ds_is_cpmc(seed, d):
    rng = _gen(seed)
    xi = 0.3 * rng.normal(size=d + 2)
    c = CylCoord(rng.uniform(-3, 3), _unit(rng, d), d)
    jet = mc.translated_ds_graph(xi, c)
    assert mc.normal_graph_mean_curvature(mc.NormalGraphPoint(c, jet)) == pytest.approx(d + 1, abs=1e-8)


def test_translated_graph_examples():
    c = CylCoord(0.0, np.array([1.0, 0.0]), 1)
    assert mc.translated_ds_graph(np.zeros(3), c).value == 0.0
    # time shift tau0 = 0.1 over (t = 0, omega = e1): (1 - s)^2 = 1.01
    assert mc.translated_ds_graph(np.array([0.1, 0, 0]), c).value == pytest.approx(-0.00498756211208895, abs=1e-15)
    for t in (-1.0, 0.5, 3.0):
        s = mc.translated_ds_graph(np.array([0.3, 0, 0]), CylCoord(t, np.array([0.0, 1.0]), 1)).value
        # matches the radial profile <T - tau0> of the shifted pseudo-sphere
        assert (1 - s) * jb(t) == pytest.approx(jb((1 - s) * t - 0.3), abs=1e-13)


def test_translate_rejects_large_shift():
    with pytest.raises(mc.ChartLeft):
        mc.translate_height(np.array([0.0, 0.0, 5.0]), np.array([0.0, -1.0, 0.0]))


def test_finite_difference_jet_agrees_with_closed_form():
    xi = np.array([0.05, 0.1, -0.02])
    t, w = 0.7, np.array([np.cos(0.3), np.sin(0.3)])

    def height(z):
        return float(mc.translate_height(xi, mc.chart_point(z[0], w, z[1:])))

    fd = mc.fd_jet(height, np.array([t, 0.0]))
    v, g, h = mc.translated_ds_jet(xi, t, w)
    assert fd.value == pytest.approx(float(v), abs=1e-15)
    assert np.allclose(fd.grad, g, atol=1e-8)
    assert np.allclose(fd.hess, h, atol=1e-5)


# ------------------------------------------------------------ linearization


def _tcos(t, d):
    b = float(jb(t))
    g = np.zeros(d + 1)
    g[0] = t / b
    h = np.zeros((d + 1, d + 1))
    h[0, 0] = 1 / b**3
    h[1:, 1:] = -b * np.eye(d)
    return mc.Jet2(b, g, h)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_linearized_operator_examples(d):
    for t in (-1.0, 0.3, 2.0):
        base = CylCoord(t, _e0(d), d)
        g = np.zeros(d + 1)
        g[0] = 1.0
        assert mc.linearized_op(mc.NormalGraphPoint(base, mc.Jet2(t, g, np.zeros((d + 1, d + 1))))) == pytest.approx(0, abs=1e-14)
        assert mc.linearized_op(mc.NormalGraphPoint(base, _tcos(t, d))) == pytest.approx(0, abs=1e-12)
        one = mc.Jet2(1.0, np.zeros(d + 1), np.zeros((d + 1, d + 1)))
        assert mc.linearized_op(mc.NormalGraphPoint(base, one)) == d + 1


@pytest.mark.parametrize("t", [0.5, 1.0, -0.8])
def test_fd_linearization(t):
    d = 1
    base = CylCoord(t, _e0(d), d)
    one = mc.fd_linearization_check(mc.NormalGraphPoint(base, mc.Jet2(1.0, [0, 0], np.zeros((2, 2)))))
    assert one.limit == pytest.approx(2.0, abs=1e-9) and one.passed
    kern = mc.fd_linearization_check(mc.NormalGraphPoint(base, _tcos(t, d)))
    assert abs(kern.limit) <= 1e-6 and kern.passed
    cos2 = mc.Jet2(1.0, [0, 0], [[0, 0], [0, -4.0]])
    rep = mc.fd_linearization_check(mc.NormalGraphPoint(base, cos2))
    b2 = 1 + t * t
    assert rep.expected == pytest.approx(-4 / b2 + 2, abs=1e-14)
    assert rep.discrepancy <= 1e-6
    assert rep.order == pytest.approx(2.0, abs=0.2)


def test_degenerate_graph_is_rejected():
    d = 1
    bad = mc.Jet2(0.0, [2.0, 0.0], np.zeros((2, 2)))  # d_t of the height makes the t direction spacelike
    with pytest.raises((mc.TimelikeViolation, mc.DegenerateMetric)):
        _H(0.0, _e0(d), bad, d)
