"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here as well as inside the battery so that a loosened
battery cannot pass silently.
"""

import pytest

from cmcflow import battery


def test_criterion_01_exact_solutions(report_line):
    c = report_line(battery.exact_solutions())
    assert c.metrics["pseudo_sphere_rel"] <= 1e-8
    assert c.metrics["cylinder_abs"] <= 1e-10
    assert c.passed


def test_criterion_02_trichotomy(report_line):
    c = report_line(battery.trichotomy())
    assert c.metrics["samples"] == 300
    assert c.metrics["misclassified"] == 0
    assert c.metrics["undecided_elsewhere"] == 0
    assert c.passed


def test_criterion_03_light_cone_asymptote(report_line):
    c = report_line(battery.tau0_asymptote())
    assert c.metrics["end_time_spread"] <= 1e-4
    assert c.metrics["translation_error"] <= 1e-4
    assert c.passed


def test_criterion_04_collapse_rate(report_line):
    c = report_line(battery.collapse_rate())
    assert c.passed


def test_criterion_05_separatrix(report_line):
    c = report_line(battery.separatrix())
    assert c.metrics["lambda_at_cylinder"] <= 1e-8
    assert c.metrics["strictly_monotone"]
    assert c.metrics["antisymmetry"] <= 2e-10
    assert c.passed


def test_criterion_06_igm_decay(report_line):
    c = report_line(battery.igm_decay())
    assert c.metrics["negative_worst_error"] <= 0.05
    assert c.metrics["positive_margin"] >= 0.0
    assert c.passed


def test_criterion_07_b_spectrum(report_line):
    # Checked against the eigenvalue list exactly as stated, 1 + 1/nu included.
    c = report_line(battery.b_spectrum())
    assert c.metrics["zeta0_all_two"] <= 1e-10
    assert c.metrics["stated_form_error"] <= 1e-10
    assert c.passed


def test_criterion_08_linear_modes(report_line):
    c = report_line(battery.linear_modes())
    assert c.metrics["exact_mode_error"] <= 1e-9
    assert c.metrics["energy_max_rise"] <= 1e-12
    assert c.metrics["velocity_ratio_1e3"] <= 1e-3
    assert c.passed


def test_criterion_09_linear_horizon(report_line):
    c = report_line(battery.linear_horizon())
    assert c.metrics["sup_at_50"] >= c.metrics["required"]
    assert c.metrics["required"] == pytest.approx(0.9 * max(abs(e) for e in c.metrics["eps"]) * 50.0)
    assert c.metrics["forbidden_projection"] <= 1e-8
    assert c.passed


def test_criterion_10_stress_tensor(report_line):
    c = report_line(battery.stress_audit())
    assert c.metrics["samples"] == 10_000
    assert c.metrics["dual_path"] <= 1e-12
    assert c.metrics["coercivity_violations"] == 0
    assert abs(c.metrics["divergence_order"] - 2.0) <= 0.2
    assert c.passed


def test_criterion_11_linearization(report_line):
    c = report_line(battery.linearization())
    assert c.metrics["fd_discrepancy"] <= 1e-6
    assert c.metrics["constant_height_error"] <= 1e-10
    assert c.passed


def test_criterion_12_nonlinear_stability(report_line):
    c = report_line(battery.nonlinear_stability())
    assert c.metrics["energy_ratio"] <= 2.0
    assert c.metrics["h_residual"] <= 1e-6
    assert abs(c.metrics["quadratic_slope"] - 2.0) <= 0.1
    assert c.passed


def test_criterion_13_nonlinear_horizon(report_line):
    c = report_line(battery.horizon_nonlinear())
    assert c.metrics["tracking_error"] <= 1e-6
    assert c.metrics["relative_deviation"] <= 0.2
    assert c.metrics["u_range"] > 10 * c.metrics["u_error_bar"]
    assert c.metrics["cone_min"] >= c.metrics["cone_threshold"]
    assert c.passed
