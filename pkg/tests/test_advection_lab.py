from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advect_spectra.advection_lab import (
    RESULT_HEADER,
    RunConfig,
    blowup_probe,
    convergence_study,
    exact_moments,
    init_field,
    march,
    march_field,
    mirror,
    results_to_csv,
    step_schedule,
)
from advect_spectra.schemes import SCHEME_NAMES, build_rule
from advect_spectra.stencil import TwoMomentField


def midpoint_moments(n: int, sub: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Composite midpoint quadrature of the sine profile, independent of the closed form."""
    h = 1.0 / n
    xi = (np.arange(sub) + 0.5) / sub
    x = (np.arange(n)[:, None] + xi[None, :]) * h
    u = np.sin(2 * np.pi * x)
    return u.mean(axis=1), (12.0 * (xi - 0.5)[None, :] * u).mean(axis=1)


# --- initial data ---------------------------------------------------------

def test_init_field_sums():
    f = init_field("sine", 50)
    assert abs(f.ubar.sum()) < 1e-13
    assert abs(f.v.sum()) < 1e-13
    assert f.h == 1 / 50


def test_init_field_matches_quadrature():
    n = 20
    f = init_field("sine", n)
    ubar, first_moment = midpoint_moments(n)
    np.testing.assert_allclose(f.ubar, ubar, atol=1e-6)
    # v is the jump u(x_{j+1/2}) - u(x_{j-1/2}) across the cell
    x = np.arange(n + 1) / n
    np.testing.assert_allclose(f.v, np.diff(np.sin(2 * np.pi * x)), atol=1e-14)
    # a consistent linear reconstruction has first moment v, to O(h^2) relative
    np.testing.assert_allclose(first_moment, f.v, atol=5e-3 * np.max(np.abs(f.v)))


def test_exact_moments_shift_is_periodic():
    a = exact_moments("sine", 16, 0.0)
    b = exact_moments("sine", 16, 3.0)
    np.testing.assert_allclose(a[0], b[0], atol=1e-13)
    np.testing.assert_allclose(a[1], b[1], atol=1e-13)


def test_unknown_profile():
    with pytest.raises(ValueError):
        init_field("gauss", 16)


def test_mirror_is_involution():
    f = init_field("sine", 12)
    m = mirror(f)
    np.testing.assert_array_equal(m.ubar, f.ubar[::-1])
    np.testing.assert_array_equal(m.v, -f.v[::-1])
    assert mirror(m).allclose(f)


# --- configuration ----------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(n_cells=4), dict(n_cells=16.5), dict(cfl=0.0), dict(cfl=float("inf")),
    dict(final_time=0.0), dict(advection_speed=-1.0), dict(initial_profile="step"),
    dict(scheme_id="dg-s2o4"),
])
def test_run_config_validation(kwargs):
    base = dict(scheme_id="dg-rk2", n_cells=16, cfl=0.3)
    base.update(kwargs)
    with pytest.raises(ValueError):
        RunConfig(**base)


def test_run_config_normalises_scheme():
    assert RunConfig("GRP", 16, 0.5).scheme_id == "grp"


def test_step_schedule():
    assert step_schedule(0.5, 1.0, 0.1) == (20, pytest.approx(0.5))
    n, last = step_schedule(0.3, 1.0, 0.1)
    assert n == 34 and last == pytest.approx(0.1)


@settings(max_examples=100)
@given(st.floats(0.05, 1.0), st.floats(0.1, 3.0), st.integers(8, 200))
def test_step_schedule_reaches_final_time(cfl, T, n):
    h = 1.0 / n
    steps, last = step_schedule(cfl, T, h)
    assert 0 < last <= cfl * (1 + 1e-9)
    assert (steps - 1) * cfl * h + last * h == pytest.approx(T, rel=1e-12)


# --- marching ---------------------------------------------------------------

@pytest.mark.parametrize("name", ["cgks-s1o2", "grp"])
def test_unit_cfl_is_exact(name):
    res = march(RunConfig(name, 40, 1.0, 1.0))
    assert res.l1_error < 1e-14
    assert res.steps_taken == 40


@pytest.mark.parametrize("name", SCHEME_NAMES)
def test_march_conserves_mass(name):
    rng = np.random.default_rng(2)
    f = TwoMomentField(rng.normal(size=32), rng.normal(size=32), 1 / 32)
    state = march_field(name, f, 0.3, 0.5)
    assert state.ubar.sum() == pytest.approx(f.ubar.sum(), abs=1e-11)


def test_grp_march_matches_rule_march():
    f = init_field("sine", 64)
    for cfl in (0.2, 0.55, 0.9):
        a = march_field("cgks-s1o2", f, cfl, 1.0)
        b = march_field("grp", f, cfl, 1.0, stepper="grp")
        np.testing.assert_allclose(a.ubar, b.ubar, rtol=0, atol=1e-13)
        np.testing.assert_allclose(a.v, b.v, rtol=0, atol=1e-13)


def test_march_field_rejects_stepper():
    with pytest.raises(ValueError):
        march_field("dg-rk2", init_field("sine", 16), 0.3, 1.0, stepper="euler")


def test_march_with_custom_rule_overrides_name():
    cfg = RunConfig("cgks-s1o2", 32, 0.3)
    a = march(cfg, rule=build_rule("dg-s1o2"))
    b = march(RunConfig("dg-s1o2", 32, 0.3))
    assert a.l1_error == b.l1_error


def test_march_speed_scales_time():
    a = march(RunConfig("dg-rk2", 32, 0.3, final_time=1.0, advection_speed=2.0))
    b = march(RunConfig("dg-rk2", 32, 0.3, final_time=2.0))
    assert a.l1_error == pytest.approx(b.l1_error, rel=1e-12)


def test_results_csv():
    res = march(RunConfig("dg-rk2", 16, 0.3))
    lines = results_to_csv([res]).splitlines()
    assert lines[0] == ",".join(RESULT_HEADER)
    assert lines[1].startswith("dg-rk2,16,0.3,1.0,")
    assert res.to_json()["config"]["scheme_id"] == "dg-rk2"


# --- convergence ------------------------------------------------------------

@pytest.mark.parametrize("name,cfl", [("cgks-s1o2", 0.5), ("dg-rk2", 0.3), ("fr-rk2-g2", 0.5)])
def test_second_order_convergence(name, cfl):
    rows = convergence_study(name, cfl, [80, 160, 320, 640])
    assert rows[0].order is None
    for r in rows[1:]:
        assert 1.9 <= r.order <= 2.2


def test_fourth_order_convergence():
    rows = convergence_study("cgks-s2o4", 0.4, [40, 80, 160, 320])
    assert rows[-1].order == pytest.approx(4.0, abs=0.15)


def test_convergence_validation():
    with pytest.raises(ValueError):
        convergence_study("dg-rk2", 0.3, [20, 40, 80])
    with pytest.raises(ValueError):
        convergence_study("dg-rk2", 0.3, [20, 40, 60, 80])


# --- stability probes -------------------------------------------------------

@pytest.mark.parametrize("name,limit", [("dg-rk2", 1 / 3), ("cgks-rk2", 1.0), ("cgks-s1o2", 1.0)])
def test_beyond_limit_grows_within_ten_periods(name, limit):
    above = march(RunConfig(name, 64, limit * 1.05, final_time=10.0))
    below = march(RunConfig(name, 64, limit * 0.95, final_time=10.0))
    assert above.blew_up or above.max_amplitude > 1e6
    assert not below.blew_up and below.max_amplitude <= 1.0


def test_blowup_halts_march():
    res = march(RunConfig("dg-rk2", 64, 0.5, final_time=50.0))
    assert res.blew_up
    assert res.steps_taken < step_schedule(0.5, 50.0, 1 / 64)[0]
    assert math.isfinite(res.max_amplitude) or res.max_amplitude == math.inf


def test_blowup_probe_onset_is_monotone():
    probe = blowup_probe("dg-rk2", [0.2, 0.3, 0.5, 0.7, 0.9], n_cells=64, final_time=10.0)
    flags = [r.blew_up for r in probe.results]
    assert flags == [False, False, True, True, True]
    assert probe.onset_monotone
