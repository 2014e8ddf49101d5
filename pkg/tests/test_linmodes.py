import numpy as np
import pytest

from cmcflow import linmodes as lm
from cmcflow.dsgeom import jb


def test_eigenvalues():
    assert lm.eigenvalue(0, 3) == 0
    assert lm.eigenvalue(1, 2) == 2
    assert lm.eigenvalue(2, 1) == 4


@pytest.mark.parametrize("d", [1, 2, 3])
def test_exact_low_modes_have_zero_residual(d):
    for t in (0.0, 0.7, 5.0):
        r0 = lm.mode_residual(t, t, 1.0, 0.0, 0, d)
        b = jb(t)
        r1 = lm.mode_residual(t, b, t / b, 1 / b**3, 1, d)
        assert abs(r0) <= 1e-12 and abs(r1) <= 1e-12


def test_mode_rhs_constant_data():
    for d in (1, 2, 3):
        assert lm.mode_rhs(lm.ModeState(0, d, 0.0, 1.0, 0.0)) == pytest.approx(d + 1)


def test_ell0_exact():
    t = np.linspace(1, 50, 40)
    assert np.allclose(lm.ell0_exact(t, 0.0, 2.5, 1.0, 2), 2.5 * t)
    assert lm.ell0_exact_derivative(1.0, 1.0, 0.0, 1.0, 2) == pytest.approx(1 / 2**1.5, abs=1e-14)
    # second derivative by differencing the closed-form first derivative
    h = 1e-4
    for d in (1, 2):
        psi = lm.ell0_exact(t, 1.0, 0.3, 1.0, d)
        dpsi = lm.ell0_exact_derivative(t, 1.0, 0.3, 1.0, d)
        ddpsi = (lm.ell0_exact_derivative(t + h, 1.0, 0.3, 1.0, d) - lm.ell0_exact_derivative(t - h, 1.0, 0.3, 1.0, d)) / (2 * h)
        res = lm.mode_residual(t, psi, dpsi, ddpsi, 0, d) / (1 + t * t)
        assert np.max(np.abs(res)) <= 1e-7


def test_integrate_exact_modes():
    t = np.linspace(0, 10, 101)
    r0 = lm.integrate_mode(lm.ModeState(0, 2, 0.0, 0.0, 1.0), 10.0, t)
    assert np.max(np.abs(r0.psi - t) / jb(t)) <= 1e-9
    r1 = lm.integrate_mode(lm.ModeState(1, 2, 0.0, 1.0, 0.0), 10.0, t)
    assert np.max(np.abs(r1.psi / jb(t) - 1)) <= 1e-9
    assert np.max(np.abs(r1.energy)) <= 1e-18


def test_higher_mode_converges_after_renormalization():
    run = lm.integrate_mode(lm.ModeState(5, 2, 0.0, 1.0, -0.4), 1e4, [1e3, 2e3, 1e4])
    assert abs(run.u[-1] - run.u[-2]) <= 1e-6 * max(1.0, abs(run.u[-1]))


@pytest.mark.parametrize("ell,d", [(2, 2), (3, 1), (4, 3)])
def test_higher_mode_energy_monotone(ell, d):
    te = np.geomspace(0.1, 100, 300)
    run = lm.integrate_mode(lm.ModeState(ell, d, 0.1, 0.3, 1.0), 100.0, te)
    assert np.all(np.diff(run.energy) <= 1e-12 * run.energy[0])
    late = lm.integrate_mode(lm.ModeState(ell, d, 0.1, 0.3, 1.0), 1e3, [0.1, 1e3])
    assert late.v[-1] ** 2 <= 1e-3 * late.v[0] ** 2


def test_linear_1d_single_mode_matches_integrate_mode():
    n = 64
    th = lm.circle_grid(n)
    f0 = lm.LinearField1D(0.5, np.cos(3 * th), 0.2 * np.cos(3 * th))
    times = np.array([1.0, 5.0, 20.0])
    traj = lm.evolve_linear_1d(f0, 20.0, times)
    mode = lm.integrate_mode(lm.ModeState(3, 1, 0.5, 1.0, 0.2), 20.0, times)
    assert np.allclose(traj.phi[:, 0], mode.psi, rtol=1e-8, atol=1e-10)
    mol = lm.evolve_linear_1d(f0, 20.0, times, method="mol")
    assert np.allclose(mol.phi, traj.phi, atol=1e-7)


def test_bump_interior_grows_like_eps_t():
    mb = lm.multibump_data([0.0], [0.7], t0=4.0)
    traj = lm.evolve_linear_1d(mb.field, 60.0, [20.0, 60.0])
    centre = np.argmin(np.abs(np.angle(np.exp(1j * mb.field.theta))))
    assert traj.phi[:, centre] == pytest.approx(0.7 * np.array([20.0, 60.0]), rel=1e-7)
    assert np.max(np.abs(traj.phi[-1])) >= 0.7 * 60.0 * 0.99


def test_multibump_single_support_and_orthogonality():
    mb = lm.multibump_data([1.0])
    inside = np.abs(np.angle(np.exp(1j * (mb.field.theta - 1.0)))) <= mb.support
    assert np.all(mb.field.phi[~inside] == 0)
    mb3 = lm.multibump_data([0.0, 2.0, 4.2], [1.0, 0.0, 0.0], [(0, 1), (1, 1)])
    assert np.max(np.abs(mb3.projections)) <= 1e-10


def test_light_cone_reach_for_late_start():
    for delta0 in (0.2, 0.5, 1.0):
        assert lm.light_cone_reach(8 / delta0) < delta0 / 4
