import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcflow import dsgeom as g

reals = st.floats(-50, 50, allow_nan=False)


def test_jb_values():
    assert g.jb(0.0) == 1.0
    assert g.jb(1.0) == pytest.approx(np.sqrt(2.0), abs=1e-15)
    assert g.jb(-3.0) == pytest.approx(np.sqrt(10.0), abs=1e-15)


@pytest.mark.parametrize("t,expected", [(0, (-1, 1)), (1, (-0.5, 2)), (3, (-0.1, 10))])
def test_metric_components(t, expected):
    assert g.metric_components(t, 2) == pytest.approx(expected, abs=1e-15)


def test_embed_examples():
    assert np.allclose(g.embed(0.0, [1.0, 0.0, 0.0]), [0, 1, 0, 0])
    assert np.allclose(g.embed(1.0, [1.0, 0.0]), [1, np.sqrt(2), 0], atol=1e-15)


@given(reals, st.floats(0, 2 * np.pi), st.floats(0, np.pi))
def test_embedded_points_lie_on_ds(t, a, b):
    omega = np.array([np.sin(b) * np.cos(a), np.sin(b) * np.sin(a), np.cos(b)])
    x = g.embed(t, omega)
    assert g.mink(x, x) == pytest.approx(1.0, abs=1e-12 * (1 + t * t))


def test_cylcoord_rejects_bad_input():
    with pytest.raises(ValueError):
        g.CylCoord(0.0, np.array([1.0, 0.0]), 0)
    with pytest.raises(ValueError):
        g.CylCoord(0.0, np.array([1.0, 1.0]), 1)


def test_grad_tau():
    assert g.grad_tau(0.0) == 0.0
    assert g.grad_tau(1.0) == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    ts = np.linspace(0, 100, 500)
    assert np.all(np.diff(g.grad_tau(ts)) > 0)
    assert g.grad_tau(1e8) == pytest.approx(1.0, abs=1e-12)


def test_static_chart_origin_and_boost():
    x, (gzz, grr, gs) = g.static_chart(0.0, 0.0, [1.0, 0.0])
    assert np.allclose(x, [0, 0, 0, 1])
    assert gzz == -1.0
    x, (gzz, _, _) = g.static_chart(0.7, 0.4, [0.6, 0.8])
    assert g.boost_norm(x, 3) == pytest.approx(-(1 - 0.4**2), abs=1e-14)
    assert gzz == pytest.approx(-(1 - 0.4**2))


@given(st.floats(-3, 3), st.floats(-0.99, 0.99), st.floats(0, 2 * np.pi))
def test_static_chart_on_ds(zeta, rho, a):
    x, _ = g.static_chart(zeta, rho, [np.cos(a), np.sin(a)])
    assert g.mink(x, x) == pytest.approx(1.0, abs=1e-12 * np.cosh(zeta) ** 2)


def test_static_chart_rejects_horizon():
    with pytest.raises(g.ChartError):
        g.static_chart(0.0, 1.0, [1.0])


def test_boost_norm_against_contraction(rng):
    assert g.boost_norm([0, 0, 0, 1], 3) == -1.0
    assert g.boost_norm([2.0, 2.0, 0.3, 0.1], 1) == 0.0
    for _ in range(20):
        x = rng.normal(size=4)
        for i in (1, 2, 3):
            k = g.boost_field(x, i)
            assert g.boost_norm(x, i) == pytest.approx(g.mink(k, k), abs=1e-13)


@pytest.mark.parametrize("t,d,expected", [(0, 2, (1, 1)), (1, 2, (2, 1)), (3, 1, (np.sqrt(10), np.sqrt(10)))])
def test_volume_weights(t, d, expected):
    assert g.volume_weights(t, d) == pytest.approx(expected, abs=1e-14)


def test_frame_is_orthonormal(rng):
    for d in (1, 2, 3):
        w = rng.normal(size=d + 1)
        c = g.CylCoord(0.8, w / np.linalg.norm(w), d)
        fr = g.frame(c)
        vecs = np.vstack([fr.tau, fr.spatial_frame])
        gram = np.array([[g.mink(a, b) for b in vecs] for a in vecs])
        assert np.allclose(gram, g.minkowski_metric(d + 1), atol=1e-13)
        assert np.allclose(fr.tau, g.tau_from_boosts(g.embed_coord(c)), atol=1e-13)
