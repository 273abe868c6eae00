"""Dispersion and dissipation coefficients of the cell-average update.

With exact data the slope of a Fourier mode is ``v = i theta ubar``, so one
step multiplies the cell average by the consistent-data symbol

    s(theta) = g11(theta) + i theta g12(theta).

Its deviation from the exact shift expands as

    s(theta) - e^{-i nu theta} = c3 (i theta)^3 + c4 (i theta)^4 + O(theta^5)

for a second-order scheme. ``c3`` measures dispersion, ``c4`` dissipation.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .schemes import UnsupportedSchemeError, as_scheme_id
from .stencil import NuPolynomial, TwoMomentRule

_DPS = 40
REPORT_HEADER = ("scheme", "nu", "c3", "p3", "c4", "p4", "pass")


def _poly(*coeffs) -> NuPolynomial:
    return NuPolynomial(tuple(Fraction(c) for c in coeffs))


@dataclass(frozen=True)
class TruncationPolynomials:
    scheme_id: str
    p3: NuPolynomial
    p4: NuPolynomial


def _table(p3: tuple, p4: tuple) -> tuple[NuPolynomial, NuPolynomial]:
    # p3 carries the -1/12 factor, p4 the +1/24 factor
    return _poly(*p3) * Fraction(-1, 12), _poly(*p4) * Fraction(1, 24)


_LW = _table((0, 1, -3, 2), (0, 1, -2, 0, 1))
_DG_RK2 = _table((0, 1, -3, 2), (0, 1, -4, 0, 1))
_REFERENCE = {
    "cgks-rk2": _table((0, 1, 0, 2), (0, 1, 5, 0, 1)),
    "cgks-s1o2": _LW,
    "dg-rk2": _DG_RK2,
    "dg-s1o2": _LW,
    "fr-rk2-radau": _DG_RK2,
    "fr-rk2-g2": _table((0, 1, -3, 2), (0, 1, 1, 0, 1)),
}


def reference_truncation(scheme) -> TruncationPolynomials:
    """Reference truncation polynomials of the six second-order schemes."""
    name = str(as_scheme_id(scheme))
    if name not in _REFERENCE:
        raise UnsupportedSchemeError(f"no reference truncation polynomials for {name}")
    return TruncationPolynomials(name, *_REFERENCE[name])


def symbol_polynomial(rule: TwoMomentRule, k: int) -> NuPolynomial:
    """Exact coefficient of (i theta)^k in s(theta) - e^{-i nu theta}, as a polynomial in nu."""
    if not 0 <= k <= 4:
        raise ValueError("k must lie in 0..4")
    out = NuPolynomial()
    for m in rule.offsets:
        out = out + rule.a[m] * Fraction(m ** k, math.factorial(k))
        if k >= 1:
            out = out + rule.b[m] * Fraction(m ** (k - 1), math.factorial(k - 1))
    exact = NuPolynomial((0,) * k + (Fraction((-1) ** k, math.factorial(k)),))
    return out - exact


@dataclass(frozen=True)
class SymbolExpansion:
    scheme_id: str
    nu: float
    c3: float
    c4: float
    residual_estimate: float


def _richardson(values: Sequence[float], ratio: float = 4.0) -> tuple[float, float]:
    """Extrapolate a sequence in h^2 (h halved each level); return value and tail estimate."""
    row = list(values)
    prev_best = row[-1]
    factor = ratio
    while len(row) > 1:
        prev_best = row[-1]
        row = [b + (b - a) / (factor - 1.0) for a, b in zip(row, row[1:])]
        factor *= ratio
    return row[0], abs(row[0] - prev_best)


def _symbol_error(rule: TwoMomentRule, theta: Sequence[float], nu: float) -> list[complex]:
    """s(theta) - e^{-i nu theta} in extended precision.

    The error is O(theta^3) while every term is O(1), so double precision
    would leave only a few significant digits at the smallest theta.
    """
    nu_q = Fraction(nu)
    with mpmath.workdps(_DPS):
        a = [mpmath.mpf(rule.a[m](nu_q).numerator) / rule.a[m](nu_q).denominator
             for m in rule.offsets]
        b = [mpmath.mpf(rule.b[m](nu_q).numerator) / rule.b[m](nu_q).denominator
             for m in rule.offsets]
        nu_mp = mpmath.mpf(nu_q.numerator) / nu_q.denominator
        out = []
        for t in theta:
            t = mpmath.mpf(t)
            s = mpmath.mpc(0)
            for m, am, bm in zip(rule.offsets, a, b):
                e = mpmath.expj(m * t)
                s += am * e + 1j * t * bm * e
            out.append(complex(s - mpmath.expj(-nu_mp * t)))
    return out


def expand_symbol(rule: TwoMomentRule, nu: float, theta0: float = 0.1,
                  levels: int = 7) -> SymbolExpansion:
    """c3 and c4 by Richardson extrapolation over theta0 / 2^k, k < levels."""
    if not (np.isfinite(nu) and nu > 0):
        raise ValueError("nu must be positive")
    theta = theta0 / 2.0 ** np.arange(levels)
    err = np.array(_symbol_error(rule, theta, nu))
    # Im(err) = -c3 theta^3 + c5 theta^5 - ...,  Re(err) = c4 theta^4 - c6 theta^6 + ...
    c3, r3 = _richardson(err.imag / -theta ** 3)
    c4, r4 = _richardson(err.real / theta ** 4)
    # the tail can vanish in double precision; keep a rounding floor
    floor = 4 * np.finfo(float).eps * max(abs(c3), abs(c4), 1.0)
    return SymbolExpansion(rule.scheme_id, float(nu), float(c3), float(c4),
                           float(max(r3, r4, floor)))


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    nu: float
    c3: float
    p3: float
    c4: float
    p4: float
    passed: bool


@dataclass(frozen=True)
class TruncationReport:
    scheme_id: str
    convention_sign: int       # c_k = sign * p_k
    rows: tuple[ComparisonRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow([r.scheme, repr(r.nu), repr(r.c3), repr(r.p3), repr(r.c4), repr(r.p4),
                        "pass" if r.passed else "fail"])
        return buf.getvalue()


def _close(x: float, p: float, rel: float) -> bool:
    return abs(x - p) <= rel * max(1.0, abs(p))


def compare_truncation(rule: TwoMomentRule, scheme_id, nu_samples: Sequence[float],
                       rel_tol: float = 1e-6, sign: int | None = None) -> TruncationReport:
    """Compare expanded coefficients with the reference polynomials at each nu.

    With ``sign=None`` the orientation (c_k = +p_k or c_k = -p_k) that matches
    more samples is adopted and reported; ties go to +1.
    """
    truth = reference_truncation(scheme_id)
    exps = [(float(nu), expand_symbol(rule, float(nu))) for nu in nu_samples]
    pvals = [(float(truth.p3(float(nu))), float(truth.p4(float(nu)))) for nu, _ in exps]

    def rows_for(s: int) -> list[ComparisonRow]:
        return [ComparisonRow(truth.scheme_id, nu, e.c3, p3, e.c4, p4,
                              _close(e.c3, s * p3, rel_tol) and _close(e.c4, s * p4, rel_tol))
                for (nu, e), (p3, p4) in zip(exps, pvals)]

    if sign is None:
        candidates = {s: rows_for(s) for s in (1, -1)}
        sign = max((1, -1), key=lambda s: (sum(r.passed for r in candidates[s]), s == 1))
        rows = candidates[sign]
    else:
        rows = rows_for(sign)
    return TruncationReport(truth.scheme_id, sign, tuple(rows))


def nu_grid(limit: float) -> list[float]:
    """The samples 0.1, ..., 0.9 capped at a stability limit."""
    return [k / 10 for k in range(1, 10) if k / 10 <= limit + 1e-12]



CONTRAST_SCHEMES = ("cgks-rk2", "cgks-s1o2", "dg-rk2", "dg-s1o2")
CONTRAST_REFERENCE = "cgks-s1o2"
CONTRAST_NU = (0.1, 0.2, 0.3)
CONTRAST_HEADER = ("scheme", "cfl_limit", "dispersion", "dissipation")


@dataclass(frozen=True)
class ContrastRow:
    scheme: str
    cfl_limit: float
    dispersion: str
    dissipation: str


def _sign_of(diffs: Sequence[float], tol: float) -> str:
    if all(abs(d) <= tol for d in diffs):
        return "0"
    if all(d > tol for d in diffs):
        return "+"
    if all(d < -tol for d in diffs):
        return "-"
    return "mixed"


def contrast_table(rule_factory, cfl_limits: dict[str, float],
                   nu_samples: Sequence[float] = CONTRAST_NU, tol: float = 1e-9
                   ) -> list[ContrastRow]:
    """Dispersion and dissipation of each scheme relative to the reference scheme.

    An entry is the common sign of |c_k(scheme)| - |c_k(reference)| over the
    samples: "+" means more error, "-" less, "0" equal.
    """
    ref = rule_factory(CONTRAST_REFERENCE)
    ref_exp = [expand_symbol(ref, nu) for nu in nu_samples]
    rows = []
    for name in CONTRAST_SCHEMES:
        rule = rule_factory(name)
        exps = [expand_symbol(rule, nu) for nu in nu_samples]
        d3 = [abs(e.c3) - abs(r.c3) for e, r in zip(exps, ref_exp)]
        d4 = [abs(e.c4) - abs(r.c4) for e, r in zip(exps, ref_exp)]
        rows.append(ContrastRow(name, cfl_limits[name], _sign_of(d3, tol), _sign_of(d4, tol)))
    return rows


def contrast_to_csv(rows: Sequence[ContrastRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONTRAST_HEADER)
    for r in rows:
        w.writerow([r.scheme, repr(r.cfl_limit), r.dispersion, r.dissipation])
    return buf.getvalue()
