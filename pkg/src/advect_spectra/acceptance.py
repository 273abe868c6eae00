"""Acceptance criteria as executable checks.

Each criterion takes a run context whose ``rule`` factory maps a scheme name
to a TwoMomentRule, so a deliberately broken rule can be injected.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .advection_lab import RunConfig, convergence_study, march, march_field
from .fourier import (
    TWO_PI,
    _roots,
    cfl_limit,
    rk2_closed_form,
    rk2_stability_bound,
    s1o2_closed_form,
    spectrum,
    symbol_entries,
)
from .modified_equation import compare_truncation, nu_grid
from .schemes import SCHEME_NAMES, SECOND_ORDER, build_rule, correction_function, grp_step
from .stencil import TwoMomentField, TwoMomentRule, apply_rule

RuleFactory = Callable[[str], TwoMomentRule]

# name -> (target, tolerance) or (lower bound, None)
CFL_TARGETS: dict[str, tuple[float, float | None]] = {
    "cgks-s1o2": (1.0, 1e-3),
    "cgks-rk2": (1.0 - 1e-3, None),
    "dg-rk2": (1 / 3, 5e-3),
    "dg-s1o2": (1 / 3, 5e-3),
    "fr-rk2-radau": (1 / 3, 5e-3),
    "fr-rk2-g2": (1.0, 5e-3),
    "cgks-s2o4": (0.56, 0.01),
}
SAFE_CFL = {"cgks-rk2": 0.5, "cgks-s1o2": 0.5, "dg-rk2": 0.2, "dg-s1o2": 0.2,
            "fr-rk2-radau": 0.2, "fr-rk2-g2": 0.5}
SECOND_ORDER_GRIDS = (80, 160, 320, 640)
S2O4_GRIDS = (40, 80, 160, 320)


@dataclass
class Context:
    rule: RuleFactory = build_rule
    _limits: dict[str, float] = field(default_factory=dict)

    def limit(self, name: str) -> float:
        if name not in self._limits:
            self._limits[name] = cfl_limit(self.rule(name), tol=1e-4).nu_star
        return self._limits[name]


@dataclass(frozen=True)
class CriterionResult:
    id: int
    name: str
    passed: bool
    detail: str
    measurements: dict

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.id}: {self.name} | {self.detail}"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def criterion_cfl(ctx: Context) -> CriterionResult:
    meas, bad = {}, []
    for name, (target, tol) in CFL_TARGETS.items():
        nu = ctx.limit(name)
        meas[name] = nu
        ok = nu >= target if tol is None else abs(nu - target) <= tol
        if not ok:
            bad.append(f"{name} nu*={_fmt(nu)}")
    detail = "; ".join(bad) if bad else ", ".join(f"{k}={_fmt(v)}" for k, v in meas.items())
    return CriterionResult(1, "CFL limits", not bad, detail, meas)


def criterion_closed_forms(ctx: Context) -> CriterionResult:
    theta = np.linspace(0.0, TWO_PI, 64)
    nus = np.linspace(1 / 64, 1.0, 64)
    meas = {}
    for name, oracle in (("cgks-s1o2", s1o2_closed_form), ("cgks-rk2", rk2_closed_form)):
        rule = ctx.rule(name)
        worst = 0.0
        for nu in nus:
            r1, r2 = _roots(*symbol_entries(rule, theta, nu))
            exact = oracle(theta, nu)
            worst = max(worst, float(np.max(np.abs(r1 - exact))), float(np.max(np.abs(r2 - exact))))
        meas[name] = worst
    ok = all(v <= 1e-12 for v in meas.values())
    return CriterionResult(2, "closed-form eigenvalues", ok,
                           ", ".join(f"{k} max err {v:.2e}" for k, v in meas.items()), meas)


def criterion_truncation(ctx: Context) -> CriterionResult:
    reports = {s: {} for s in (1, -1)}
    for name in SECOND_ORDER:
        grid = nu_grid(ctx.limit(name))
        for sign in (1, -1):
            reports[sign][name] = compare_truncation(ctx.rule(name), name, grid, sign=sign)
    score = {s: sum(sum(r.passed for r in rep.rows) for rep in reports[s].values()) for s in (1, -1)}
    sign = 1 if score[1] >= score[-1] else -1
    chosen = reports[sign]
    meas = {"convention_sign": sign}
    bad = []
    for name, rep in chosen.items():
        n_ok = sum(r.passed for r in rep.rows)
        meas[name] = f"{n_ok}/{len(rep.rows)}"
        if not rep.passed:
            bad.append(f"{name} {n_ok}/{len(rep.rows)} samples match")
    detail = f"convention sign {sign:+d}; " + ("; ".join(bad) if bad else "all samples match")
    return CriterionResult(3, "modified-equation cross-validation", not bad, detail, meas)


def criterion_structural(ctx: Context) -> CriterionResult:
    same = ctx.rule("fr-rk2-radau").rows_equal(ctx.rule("dg-rk2"))
    rng = np.random.default_rng(20240611)
    rule = ctx.rule("cgks-s1o2")
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(4, 65))
        f = TwoMomentField(rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), 1.0 / n)
        for nu in (0.1, 0.5, 0.9):
            a, b = grp_step(f, nu), apply_rule(rule, f, nu)
            worst = max(worst, float(np.max(np.abs(a.ubar - b.ubar))),
                        float(np.max(np.abs(a.v - b.v))))
    ok = same and worst <= 1e-14
    detail = f"fr-rk2-radau == dg-rk2: {same}; grp vs cgks-s1o2 max diff {worst:.2e}"
    return CriterionResult(4, "structural identities", ok, detail,
                           {"radau_equals_dg": same, "grp_max_diff": worst})


def criterion_rk2_bound(ctx: Context) -> CriterionResult:
    theta = np.linspace(0.0, TWO_PI, 4097)[1:-1]
    theta = theta[theta != math.pi]
    vals = np.array([rk2_stability_bound(t) for t in theta])
    k = int(np.argmin(vals))
    lo, hi = theta[max(k - 1, 0)], theta[min(k + 1, theta.size - 1)]
    res = minimize_scalar(rk2_stability_bound, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    inf = min(float(vals[k]), float(res.fun))
    ok = abs(inf - 1.0) <= 1e-6
    return CriterionResult(5, "RK2 stability-bound infimum", ok, f"inf = {inf:.12f}", {"infimum": inf})


def criterion_ladder(ctx: Context) -> CriterionResult:
    def run(name, cfl):
        return march(RunConfig(name, 640, cfl, 1.0), rule=ctx.rule(name))

    checks, meas = [], {}
    c = [run("cgks-s1o2", x) for x in (1.0, 1.01, 1.1)]
    d = [run("dg-rk2", x) for x in (0.3333, 0.334, 0.34)]
    for tag, rs in (("cgks-s1o2", c), ("dg-rk2", d)):
        meas[tag] = [{"cfl": r.config.cfl, "l1": r.l1_error, "blew_up": r.blew_up,
                      "max_amplitude": r.max_amplitude} for r in rs]
    checks.append(("cgks 1.0 stable, L1<=1e-4", not c[0].blew_up and c[0].l1_error <= 1e-4))
    checks.append(("cgks 1.01 L1 >= 10x", not c[1].blew_up and c[1].l1_error >= 10 * c[0].l1_error))
    checks.append(("cgks 1.1 blow-up", c[2].blew_up))
    checks.append(("dg 0.3333 stable, L1<=1e-3", not d[0].blew_up and d[0].l1_error <= 1e-3))
    checks.append(("dg 0.334 L1 >= 10x", d[1].l1_error >= 10 * d[0].l1_error))
    checks.append(("dg 0.34 blow-up", d[2].blew_up))
    bad = [n for n, ok in checks if not ok]
    l1s = ", ".join(f"{r.config.scheme_id}@{r.config.cfl:g}: "
                    f"{'blow-up' if r.blew_up else f'{r.l1_error:.3e}'}" for r in c + d)
    detail = (f"failed: {'; '.join(bad)} | " if bad else "") + l1s
    return CriterionResult(6, "stability ladder", not bad, detail, meas)


def criterion_convergence(ctx: Context) -> CriterionResult:
    meas, bad = {}, []
    for name, cfl in SAFE_CFL.items():
        rows = convergence_study(name, cfl, SECOND_ORDER_GRIDS, rule=ctx.rule(name))
        orders = [r.order for r in rows[1:]]
        meas[name] = orders
        if not all(1.8 <= o <= 2.2 for o in orders):
            bad.append(f"{name} orders {[round(o, 3) for o in orders]}")
    rows = convergence_study("cgks-s2o4", 0.4, S2O4_GRIDS, rule=ctx.rule("cgks-s2o4"))
    orders = [r.order for r in rows[1:]]
    meas["cgks-s2o4"] = orders
    if not all(o >= 3.5 for o in orders):
        bad.append(f"cgks-s2o4 orders {[round(o, 3) for o in orders]}")
    detail = "; ".join(bad) if bad else ", ".join(
        f"{k} min {min(v):.3f}" for k, v in meas.items())
    return CriterionResult(7, "convergence orders", not bad, detail, meas)


def criterion_properties(ctx: Context) -> CriterionResult:
    rng = np.random.default_rng(7)
    n = 32
    base = TwoMomentField(1.0 + 0.5 * rng.uniform(-1, 1, n), 0.1 * rng.uniform(-1, 1, n), 1.0 / n)
    worst_cons = 0.0
    for name in SCHEME_NAMES:
        rule = ctx.rule(name)
        cfl = 0.5 * min(ctx.limit(name), 1.0)
        state = march_field(rule, base, cfl, 10.0)
        s0, s1 = float(np.sum(base.ubar)), float(np.sum(state.ubar))
        worst_cons = max(worst_cons, abs(s1 - s0) / abs(s0) if math.isfinite(s1) else math.inf)

    f = TwoMomentField(rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), 1.0 / n)
    shifted = apply_rule(ctx.rule("cgks-s1o2"), f, 1.0)
    shift_err = max(float(np.max(np.abs(shifted.ubar - np.roll(f.ubar, 1)))),
                    float(np.max(np.abs(shifted.v - np.roll(f.v, 1)))))

    worst_sym = 0.0
    for name in SCHEME_NAMES:
        sp = spectrum(ctx.rule(name), 0.5 * ctx.limit(name), 1024)
        m = sp.max_modulus
        worst_sym = max(worst_sym, float(np.max(np.abs(m - m[::-1]))))

    endpoint = [v for k in ("radau", "g2") for v in correction_function(k).endpoint_violations()]
    checks = {
        "conservation": worst_cons <= 1e-12,
        "unit_cfl_shift": shift_err <= 1e-13,
        "conjugation_symmetry": worst_sym <= 1e-13,
        "correction_endpoints": not endpoint,
    }
    meas = {"conservation_rel": worst_cons, "shift_err": shift_err,
            "symmetry_err": worst_sym, "endpoint_violations": endpoint}
    detail = (f"conservation {worst_cons:.1e}, shift {shift_err:.1e}, "
              f"symmetry {worst_sym:.1e}, endpoints {'exact' if not endpoint else endpoint}")
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        detail = f"failed: {', '.join(bad)} | " + detail
    return CriterionResult(8, "property suite", not bad, detail, meas)


CRITERIA = {
    1: criterion_cfl,
    2: criterion_closed_forms,
    3: criterion_truncation,
    4: criterion_structural,
    5: criterion_rk2_bound,
    6: criterion_ladder,
    7: criterion_convergence,
    8: criterion_properties,
}


@dataclass(frozen=True)
class AcceptanceReport:
    results: tuple[CriterionResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]

    def to_json(self) -> dict:
        return {
            "tool": "advect-spectra",
            "version": __version__,
            "passed": self.passed,
            "criteria": [{"id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail,
                          "measurements": _finite(r.measurements)} for r in self.results],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, default=_json_default) + "\n"


def _finite(x):
    """Replace non-finite floats by strings so the report stays strict JSON."""
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (float, np.floating)) and not math.isfinite(x):
        return str(float(x))
    return x


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def run_acceptance(rule_factory: RuleFactory | None = None,
                   only: list[int] | None = None) -> AcceptanceReport:
    ctx = Context(rule_factory or build_rule)
    ids = only or sorted(CRITERIA)
    return AcceptanceReport(tuple(CRITERIA[i](ctx) for i in ids))


def report_schema() -> dict:
    text = resources.files("advect_spectra").joinpath("data/acceptance_report.schema.json").read_text()
    return json.loads(text)
