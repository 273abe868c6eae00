from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import sympy_symbol_coefficient

from advect_spectra.modified_equation import (
    CONTRAST_HEADER,
    REPORT_HEADER,
    compare_truncation,
    contrast_table,
    contrast_to_csv,
    expand_symbol,
    nu_grid,
    reference_truncation,
    symbol_polynomial,
)
from advect_spectra.schemes import SECOND_ORDER, UnsupportedSchemeError, build_rule
from advect_spectra.stencil import NU, TwoMomentRule

MATCHING = [s for s in SECOND_ORDER if s != "fr-rk2-g2"]


# --- reference polynomials --------------------------------------------------

def test_reference_examples():
    r = reference_truncation("cgks-rk2")
    assert (r.p3(F(1)), r.p4(F(1))) == (F(-1, 4), F(7, 24))
    r = reference_truncation("cgks-s1o2")
    assert (r.p3(F(1)), r.p4(F(1))) == (0, 0)
    assert reference_truncation("dg-rk2").p4(F(1, 3)) == F(-1, 243)


def test_reference_unknown_scheme():
    with pytest.raises(UnsupportedSchemeError):
        reference_truncation("cgks-s2o4")
    with pytest.raises(UnsupportedSchemeError):
        reference_truncation("grp")


# --- exact symbol coefficients ---------------------------------------------

@pytest.mark.parametrize("name", SECOND_ORDER)
@pytest.mark.parametrize("nu", [F(1, 5), F(1, 3), F(7, 10)])
def test_symbol_polynomial_matches_sympy(name, nu):
    rule = build_rule(name)
    for k in range(5):
        assert symbol_polynomial(rule, k)(nu) == sympy_symbol_coefficient(rule, nu, k)


@pytest.mark.parametrize("name", SECOND_ORDER)
def test_symbol_low_orders_vanish(name):
    rule = build_rule(name)
    for k in range(3):
        assert symbol_polynomial(rule, k).is_zero()


@pytest.mark.parametrize("name", MATCHING)
def test_symbol_equals_negated_reference(name):
    rule, ref = build_rule(name), reference_truncation(name)
    assert symbol_polynomial(rule, 3) == -ref.p3
    assert symbol_polynomial(rule, 4) == -ref.p4


def test_g2_quartic_term_differs_from_reference():
    rule, ref = build_rule("fr-rk2-g2"), reference_truncation("fr-rk2-g2")
    assert symbol_polynomial(rule, 3) == -ref.p3
    assert symbol_polynomial(rule, 4) != -ref.p4
    # the shipped rule's quartic term is the one-stage compact scheme's
    assert symbol_polynomial(rule, 4) == -reference_truncation("cgks-s1o2").p4


def test_symbol_polynomial_order_range():
    with pytest.raises(ValueError):
        symbol_polynomial(build_rule("dg-rk2"), 5)


# --- numerical expansion ----------------------------------------------------

@pytest.mark.parametrize("name", SECOND_ORDER)
@pytest.mark.parametrize("nu", [0.1, 0.25, 0.3])
def test_expansion_matches_exact(name, nu):
    rule = build_rule(name)
    exp = expand_symbol(rule, nu)
    c3 = float(symbol_polynomial(rule, 3)(F(nu)))
    c4 = float(symbol_polynomial(rule, 4)(F(nu)))
    assert exp.c3 == pytest.approx(c3, rel=1e-9, abs=1e-12)
    assert exp.c4 == pytest.approx(c4, rel=1e-9, abs=1e-12)
    assert abs(exp.c3 - c3) <= 10 * exp.residual_estimate + 1e-15


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.sampled_from(SECOND_ORDER))
def test_expansion_is_seed_independent(nu, name):
    rule = build_rule(name)
    a, b = expand_symbol(rule, nu, theta0=0.1), expand_symbol(rule, nu, theta0=0.07)
    assert a.c3 == pytest.approx(b.c3, rel=1e-8, abs=1e-11)
    assert a.c4 == pytest.approx(b.c4, rel=1e-8, abs=1e-11)


def test_one_stage_schemes_share_truncation():
    for nu in (0.1, 0.2, 0.3):
        a, b = expand_symbol(build_rule("dg-s1o2"), nu), expand_symbol(build_rule("cgks-s1o2"), nu)
        assert a.c3 == pytest.approx(b.c3, abs=1e-14)
        assert a.c4 == pytest.approx(b.c4, abs=1e-14)


def test_expansion_rejects_bad_nu():
    with pytest.raises(ValueError):
        expand_symbol(build_rule("dg-rk2"), 0.0)


# --- comparison reports -----------------------------------------------------

@pytest.mark.parametrize("name", MATCHING)
def test_compare_passes_with_negative_convention(name):
    report = compare_truncation(build_rule(name), name, [0.1, 0.2, 0.3])
    assert report.passed
    assert report.convention_sign == -1


def test_compare_detects_perturbed_rule():
    rule = build_rule("cgks-s1o2")
    a = dict(rule.a)
    a[0] = a[0] + NU * F(1, 1000)
    a[-1] = a[-1] - NU * F(1, 1000)
    a[-2] = NU * F(1, 1000) - NU * F(1, 1000)
    bad = TwoMomentRule("cgks-s1o2", a, dict(rule.b), dict(rule.c), dict(rule.d))
    assert not compare_truncation(bad, "cgks-s1o2", [0.1, 0.2, 0.3], sign=-1).passed


def test_compare_fixed_sign():
    rep = compare_truncation(build_rule("dg-rk2"), "dg-rk2", [0.2], sign=1)
    assert rep.convention_sign == 1 and not rep.passed


def test_report_csv():
    rep = compare_truncation(build_rule("dg-rk2"), "dg-rk2", [0.1, 0.2])
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(REPORT_HEADER)
    assert len(lines) == 3 and lines[1].endswith(",pass")
    assert rep.to_csv(header=False).splitlines() == lines[1:]


def test_nu_grid():
    assert nu_grid(1.0) == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    assert nu_grid(0.33334) == [0.1, 0.2, 0.3]


# --- contrast table ---------------------------------------------------------

def test_contrast_signs():
    limits = {"cgks-rk2": 1.0, "cgks-s1o2": 1.0, "dg-rk2": 1 / 3, "dg-s1o2": 1 / 3}
    rows = {r.scheme: r for r in contrast_table(build_rule, limits)}
    assert (rows["cgks-rk2"].dispersion, rows["cgks-rk2"].dissipation) == ("+", "+")
    assert (rows["cgks-s1o2"].dispersion, rows["cgks-s1o2"].dissipation) == ("0", "0")
    assert (rows["dg-rk2"].dispersion, rows["dg-rk2"].dissipation) == ("0", "-")
    assert (rows["dg-s1o2"].dispersion, rows["dg-s1o2"].dissipation) == ("0", "0")
    text = contrast_to_csv(list(rows.values()))
    assert text.splitlines()[0] == ",".join(CONTRAST_HEADER)
    assert "-" in text and "−" not in text
