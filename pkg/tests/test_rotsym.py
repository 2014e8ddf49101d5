import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmcflow import rotsym as rs
from cmcflow.dsgeom import jb

# collapse time of (f, f') = (0.5, 0), d = 2, from an independent DOP853 run at rtol 1e-13
T_COLLAPSE = 0.8836696537869586
# separatrix slopes for d = 2 (bisection, tol 1e-10; unchanged with horizon 30)
LAMBDA_PLUS = {0.3: 0.8578796241490636, 0.5: 0.4028767567651812, 0.9: -0.3837255161779467, 1.5: -0.7695111497596372}
TAU0_GENERIC = -0.53437174


def test_rhs_examples():
    t = 1.0
    assert rs.rhs(rs.SphSymState(jb(t), t / jb(t), t, 2)) == pytest.approx(2**-1.5, abs=1e-15)
    assert rs.rhs(rs.SphSymState(2 / 3, 0.0, 0.0, 2)) == pytest.approx(0.0, abs=1e-15)
    assert rs.rhs(rs.SphSymState(0.5, 0.0, 0.0, 2)) == pytest.approx(-1.0, abs=1e-15)


def test_invariants_examples():
    for t in (0.0, 0.5, 3.0):
        gam, eta = rs.invariants(rs.SphSymState(jb(t), t / jb(t), t, 2))
        assert (gam, eta) == pytest.approx((t, 1.0), abs=1e-14)
    assert rs.invariants(rs.SphSymState(2 / 3, 0.0, 0.0, 2)) == pytest.approx((0.0, 2 / 3))
    assert rs.invariants(rs.SphSymState(1.0, 0.6, 0.0, 2)) == pytest.approx((0.75, 0.8), abs=1e-15)


def test_state_rejects_spacelike_and_bad_radius():
    with pytest.raises(rs.DomainError):
        rs.SphSymState(1.0, 1.0)
    with pytest.raises(rs.DomainError):
        rs.SphSymState(-1.0, 0.0)


def test_pseudo_sphere_and_cylinder():
    run = rs.integrate(rs.SphSymState(1.0, 0.0, 0.0, 2), 10.0)
    assert run.f[-1] / np.sqrt(101.0) - 1 == pytest.approx(0.0, abs=1e-8)
    cyl = rs.integrate(rs.SphSymState(2 / 3, 0.0, 0.0, 2), 10.0)
    assert np.max(np.abs(cyl.f - 2 / 3)) <= 1e-10


def test_collapse_both_directions():
    fut = rs.integrate(rs.SphSymState(0.5, 0.0, 0.0, 2), 50.0)
    past = rs.integrate(rs.SphSymState(0.5, 0.0, 0.0, 2), -50.0)
    assert fut.termination is rs.Termination.COLLAPSE
    assert fut.T == pytest.approx(T_COLLAPSE, abs=1e-9)
    assert past.T == pytest.approx(-T_COLLAPSE, abs=1e-9)


@pytest.mark.parametrize(
    "f,df,kind",
    [(1.0, 0.0, rs.Kind.EXPANDING), (0.5, 0.0, rs.Kind.BIG_BANG_BIG_CRUNCH), (2 / 3, 0.0, rs.Kind.STATIC_CYLINDER)],
)
def test_classify_examples(f, df, kind):
    assert rs.classify(rs.SphSymState(f, df, 0.0, 2)).kind is kind


def test_classify_mixed_classes():
    assert rs.classify(rs.SphSymState(0.8, 0.9, 0.0, 2)).kind is rs.Kind.COLLAPSE_PAST_EXPAND_FUTURE
    assert rs.classify(rs.SphSymState(0.8, -0.9, 0.0, 2)).kind is rs.Kind.EXPAND_PAST_COLLAPSE_FUTURE


@given(st.floats(0.05, 0.9), st.floats(-3, 3), st.integers(1, 3))
def test_small_eta_collapses_inward(scale, gamma, d):
    # eta below d/(d+1): the inward direction always collapses
    eta = scale * d / (d + 1)
    f = eta * np.sqrt(1 + gamma * gamma)
    df = gamma / np.sqrt(1 + gamma * gamma)
    s = rs.SphSymState(f, df, 0.0, d)
    direction = -1 if df > 0 else 1
    assert rs.classify_direction(s, direction).fate is rs.Fate.COLLAPSE


def test_separatrix_values_and_monotonicity():
    assert rs.separatrix_lambda(2 / 3, 2) == 0.0
    vals = [rs.separatrix_lambda(r, 2, 1) for r in LAMBDA_PLUS]
    assert vals == pytest.approx(list(LAMBDA_PLUS.values()), abs=1e-9)
    assert np.all(np.diff(vals) < 0)


def test_separatrix_time_reversal():
    lp = rs.separatrix_lambda(0.9, 2, 1)
    lm = rs.separatrix_lambda(0.9, 2, -1)
    assert abs(lp + lm) <= 2e-10


def test_tau0_examples():
    run = rs.integrate(rs.SphSymState(1.0, 0.0, 0.0, 2), 200.0)
    assert rs.extract_tau0(run).tau0 == pytest.approx(0.0, abs=1e-8)
    run = rs.integrate(rs.SphSymState(1.0, 0.0, 5.0, 2), 200.0)
    assert rs.extract_tau0(run).tau0 == pytest.approx(5.0, abs=1e-8)
    est = [rs.extract_tau0(rs.integrate(rs.SphSymState(1.2, 0.3, 0.0, 2), T)).tau0 for T in (50, 100, 200)]
    assert np.ptp(est) <= 1e-4
    assert est[-1] == pytest.approx(TAU0_GENERIC, abs=1e-7)


def test_tau0_rejects_collapsing_run():
    with pytest.raises(rs.DomainError):
        rs.extract_tau0(rs.integrate(rs.SphSymState(0.5, 0.0, 0.0, 2), 5.0))


def test_collapse_profile_bounded():
    prof = rs.collapse_profile(rs.integrate(rs.SphSymState(0.5, 0.0, 0.0, 2), 50.0))
    assert prof.bounded
    assert np.max(prof.ratio_tangent) < 1.0
    assert np.max(prof.ratio_sqrt) < 10.0
    assert np.max(prof.ratio_eta) < 10.0


def test_max_principle_cases():
    ds = rs.integrate(rs.SphSymState(1.0, 0.0, 0.0, 2), 5.0)
    cyl = rs.integrate(rs.SphSymState(2 / 3, 0.0, 0.0, 2), 5.0)
    rep = rs.max_principle_check(ds, cyl)
    assert rep.passed and rep.n_critical <= 1
    shifted = rs.integrate(rs.SphSymState(float(jb(0.5)), -0.5 / float(jb(0.5)), 0.0, 2), 5.0)
    assert rs.max_principle_check(ds, shifted).passed
    assert rs.max_principle_check(ds, ds).excluded


def test_general_mean_curvature_constant():
    # with c = 2 and d = 1 the cylinder sits at radius 1/2
    s = rs.SphSymState(0.5, 0.0, 0.0, 1, 2.0)
    assert s.cylinder_radius == 0.5
    assert rs.classify(s).kind is rs.Kind.STATIC_CYLINDER
