"""Construction of the fully discrete two-moment schemes.

Every rule is assembled from a semi-discrete (or Lax-Wendroff) operator in
exact rational arithmetic. Units are scaled so that c = h = 1; the CFL
number nu then plays the role of the time step.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .stencil import (
    NU,
    DomainError,
    OpMatrix,
    Stencil,
    TwoMomentField,
    TwoMomentRule,
)


class UnsupportedSchemeError(ValueError):
    """Raised for scheme combinations that have no stencil-level construction."""


class Family(enum.Enum):
    CGKS = "cgks"
    GRP = "grp"
    DG = "dg"
    FR = "fr"


class TimeIntegrator(enum.Enum):
    RK2 = "rk2"
    S1O2 = "s1o2"
    S2O4 = "s2o4"


class Correction(enum.Enum):
    NONE = "none"
    RADAU = "radau"
    G2 = "g2"


@dataclass(frozen=True)
class SchemeId:
    family: Family
    time_integrator: TimeIntegrator
    correction: Correction = Correction.NONE

    def __post_init__(self):
        if self.correction is not Correction.NONE and self.family is not Family.FR:
            raise UnsupportedSchemeError("a correction function only applies to FR")
        if self.time_integrator is TimeIntegrator.S2O4 and self.family is not Family.CGKS:
            raise UnsupportedSchemeError("S2O4 is only available for CGKS")

    def __str__(self) -> str:
        if self.family is Family.GRP and self.time_integrator is TimeIntegrator.S1O2:
            return "grp"
        parts = [self.family.value, self.time_integrator.value]
        if self.correction is not Correction.NONE:
            parts.append(self.correction.value)
        return "-".join(parts)

    @classmethod
    def parse(cls, text: str) -> SchemeId:
        key = text.strip().lower()
        try:
            return _BY_NAME[key]
        except KeyError:
            raise UnsupportedSchemeError(
                f"unknown scheme {text!r}; expected one of {', '.join(SCHEME_NAMES)}") from None


_F, _T, _C = Family, TimeIntegrator, Correction
ALL_SCHEMES: tuple[SchemeId, ...] = (
    SchemeId(_F.CGKS, _T.RK2),
    SchemeId(_F.CGKS, _T.S1O2),
    SchemeId(_F.CGKS, _T.S2O4),
    SchemeId(_F.GRP, _T.S1O2),
    SchemeId(_F.DG, _T.RK2),
    SchemeId(_F.DG, _T.S1O2),
    SchemeId(_F.FR, _T.RK2, _C.RADAU),
    SchemeId(_F.FR, _T.RK2, _C.G2),
)
SCHEME_NAMES: tuple[str, ...] = tuple(str(s) for s in ALL_SCHEMES)
_BY_NAME = {str(s): s for s in ALL_SCHEMES}

# the six schemes with reference truncation polynomials
SECOND_ORDER: tuple[str, ...] = (
    "cgks-rk2", "cgks-s1o2", "dg-rk2", "dg-s1o2", "fr-rk2-radau", "fr-rk2-g2",
)


def as_scheme_id(scheme: SchemeId | str) -> SchemeId:
    return scheme if isinstance(scheme, SchemeId) else SchemeId.parse(scheme)


# --- correction functions -------------------------------------------------

# polynomials in xi are tuples of Fractions, index k multiplying xi**k

def _padd(p, q):
    n = max(len(p), len(q))
    p = tuple(p) + (Fraction(0),) * (n - len(p))
    q = tuple(q) + (Fraction(0),) * (n - len(q))
    return tuple(x + y for x, y in zip(p, q))


def _pscale(p, s):
    return tuple(Fraction(s) * x for x in p)


def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, x in enumerate(p):
        for j, y in enumerate(q):
            out[i + j] += x * y
    return tuple(out)


def _peval(p, x):
    acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _pderiv(p):
    return tuple(k * c for k, c in enumerate(p))[1:] or (Fraction(0),)


def _legendre_xi(n: int) -> tuple[Fraction, ...]:
    """L_n(2 xi - 1) as a polynomial in xi (Bonnet recursion)."""
    s = (Fraction(-1), Fraction(2))
    prev, cur = (Fraction(1),), s
    if n == 0:
        return prev
    for k in range(1, n):
        nxt = _padd(_pscale(_pmul(s, cur), Fraction(2 * k + 1, k + 1)),
                    _pscale(prev, Fraction(-k, k + 1)))
        prev, cur = cur, nxt
    return cur


@dataclass(frozen=True)
class CorrectionFunction:
    """FR correction pair on the reference cell xi in [0, 1]."""

    kind: Correction
    gL: tuple[Fraction, ...]
    gR: tuple[Fraction, ...]
    order: int = 1

    def left(self, xi):
        return _peval(self.gL, xi)

    def right(self, xi):
        return _peval(self.gR, xi)

    def left_derivative(self, xi, n: int = 1):
        p = self.gL
        for _ in range(n):
            p = _pderiv(p)
        return _peval(p, xi)

    def endpoint_violations(self) -> list[str]:
        bad = []
        for name, val, want in (("gL(0)", self.left(0), 1), ("gL(1)", self.left(1), 0),
                                ("gR(0)", self.right(0), 0), ("gR(1)", self.right(1), 1)):
            if val != want:
                bad.append(f"{name} = {val}, expected {want}")
        return bad


def correction_function(kind: Correction | str, order: int = 1) -> CorrectionFunction:
    """Radau or g2 correction functions of degree ``order + 1`` from Legendre polynomials."""
    kind = Correction(kind.lower()) if isinstance(kind, str) else kind
    n = order
    if n < 1:
        raise ValueError("order must be at least 1")
    ln, lnp = _legendre_xi(n), _legendre_xi(n + 1)
    sign = Fraction((-1) ** n, 2)
    if kind is Correction.RADAU:
        other = lnp
    elif kind is Correction.G2:
        other = _pscale(_padd(_pscale(_legendre_xi(n - 1), n + 1), _pscale(lnp, n)),
                        Fraction(1, 2 * n + 1))
    else:
        raise UnsupportedSchemeError(f"no correction function for {kind}")
    g_left = _pscale(_padd(ln, _pscale(other, -1)), sign)
    g_right = _pscale(_padd(ln, other), Fraction(1, 2))
    cf = CorrectionFunction(kind, g_left, g_right, order)
    bad = cf.endpoint_violations()
    if bad:
        raise AssertionError(f"{kind.value} correction function violates " + "; ".join(bad))
    return cf


# --- operator building blocks (c = h = 1) ---------------------------------

def _S(m: int, coeff=1) -> Stencil:
    return Stencil.shift(m, coeff)


_ZERO = Stencil()
_DIFF = _S(0) - _S(-1)          # (D f)_j = f_j - f_{j-1}


def _row(u: Stencil, v: Stencil) -> OpMatrix:
    return OpMatrix([[u, v]])


def _first_row(op: OpMatrix) -> OpMatrix:
    return OpMatrix([op.rows[0]])


# upwind trace at x_{j+1/2} (right edge of cell j) and the left edge of cell j
_RIGHT_TRACE = _row(_S(0), _S(0, Fraction(1, 2)))
_LEFT_TRACE = _row(_S(0), _S(0, Fraction(-1, 2)))
# time derivative of the upwind interface value, -c u_x = -v_j
_RIGHT_TRACE_T = _row(_ZERO, _S(0, -1))


def _flux_divergence(interface: OpMatrix) -> OpMatrix:
    """-(F_{j+1/2} - F_{j-1/2}) for an interface functional located at j+1/2."""
    return -1 * (_DIFF * interface)


def _rk2(op: OpMatrix) -> OpMatrix:
    return OpMatrix.identity() + NU * op + (NU * NU * Fraction(1, 2)) * (op @ op)


def _lax_wendroff(op: OpMatrix, op_t: OpMatrix) -> OpMatrix:
    return OpMatrix.identity() + NU * op + (NU * NU * Fraction(1, 2)) * op_t


def _dg_p1(interior: OpMatrix, interface: OpMatrix) -> OpMatrix:
    """DG(p1) residual in (ubar, v) for a given cell-mean flux and interface flux.

    The slope equation is the Legendre first-moment equation with the exact
    p1 mass matrix: (1/12) dv/dt = <f> - (F_{j+1/2} + F_{j-1/2}) / 2.
    """
    avg = _flux_divergence(interface)
    mean_interface = (_S(0, Fraction(1, 2)) + _S(-1, Fraction(1, 2))) * interface
    slope = 12 * (interior - mean_interface)
    return OpMatrix.stack(avg, slope)


def _cgks_semi_discrete() -> OpMatrix:
    # dv/dt is the difference of interface time derivatives
    return OpMatrix.stack(_flux_divergence(_RIGHT_TRACE), _DIFF * _RIGHT_TRACE_T)


def _fr_semi_discrete(cf: CorrectionFunction) -> OpMatrix:
    """FR, N = 1, linear flux: u_t(xi) = -[v + J gL'(xi)], J the jump at the left edge."""
    jump = _S(-1) * _RIGHT_TRACE - _LEFT_TRACE
    # averaging gL' over the cell gives gL(1) - gL(0) = -1
    avg_weight = cf.left(1) - cf.left(0)
    avg = -1 * (_row(_ZERO, _S(0)) + jump * avg_weight)
    slope = -1 * (jump * cf.left_derivative(0, 2))
    return OpMatrix.stack(avg, slope)


def _cgks_s1o2() -> OpMatrix:
    avg = _first_row(_lax_wendroff(_cgks_semi_discrete(), OpMatrix.stack(
        -1 * (_DIFF * _RIGHT_TRACE_T), _row(_ZERO, _ZERO))))
    # the interface value evolves linearly in time; the new slope is the
    # difference of cell j's own evolved traces
    right = _RIGHT_TRACE + NU * _RIGHT_TRACE_T
    left = _LEFT_TRACE + NU * (_S(-1) * _RIGHT_TRACE_T)
    return OpMatrix.stack(avg, right - left)


def _dg_s1o2() -> OpMatrix:
    op = _dg_p1(_row(_S(0), _ZERO), _RIGHT_TRACE)
    # Lax-Wendroff: f_t = -c^2 u_x, constant -v_j inside the cell
    op_t = _dg_p1(_row(_ZERO, _S(0, -1)), _RIGHT_TRACE_T)
    return _lax_wendroff(op, op_t)


@dataclass(frozen=True)
class S2O4Coefficients:
    K: Fraction = Fraction(1, 2)
    M0: Fraction = Fraction(1)
    M1: Fraction = Fraction(0)
    N0: Fraction = Fraction(1, 3)
    N1: Fraction = Fraction(2, 3)


# linear reconstruction at x_{j+1/2} from cells j-1, j, j+1 (and j+2 for derivatives)
_W = _row(_S(-1, Fraction(-23, 120)) + _S(0, Fraction(19, 30)) + _S(1, Fraction(67, 120)),
          _S(-1, Fraction(-3, 40)) + _S(1, Fraction(-7, 40)))
_WX = _row(_S(2, Fraction(-1, 12)) + _S(-1, Fraction(1, 12))
           + _S(1, Fraction(5, 4)) + _S(0, Fraction(-5, 4)), _ZERO)
_WXX = (_row(_S(2, Fraction(-1, 8)) + _S(-1, Fraction(-1, 8))
             + _S(1, Fraction(31, 8)) + _S(0, Fraction(31, 8)), _ZERO)
        - Fraction(15, 2) * _W)


def build_s2o4_rule(coefficients: S2O4Coefficients | None = None,
                    stage_interface: str = "linear") -> TwoMomentRule:
    """Two-stage fourth-order compact scheme specialised to linear advection.

    ``stage_interface`` selects the intermediate interface value: "linear"
    evolves it with the first time derivative only (the second-order flux
    function), "taylor" adds the second-order Taylor term.
    """
    if stage_interface not in ("linear", "taylor"):
        raise ValueError("stage_interface must be 'linear' or 'taylor'")
    co = coefficients or S2O4Coefficients()
    half = Fraction(1, 2)
    state = OpMatrix.identity()
    ubar = _first_row(state)

    w, wx, wxx = _W @ state, _WX @ state, _WXX @ state
    # W_t = -W_x and W_tt = W_xx for c = 1
    u_star = (ubar + (co.K * NU) * (-1 * (_DIFF * w))
              + (half * co.K * co.K * NU * NU) * (_DIFF * wx))
    w_star_iface = w - (co.K * NU) * wx
    if stage_interface == "taylor":
        w_star_iface = w_star_iface + (half * co.K * co.K * NU * NU) * wxx
    state_star = OpMatrix.stack(u_star, _DIFF * w_star_iface)

    ws, wxs, wxxs = _W @ state_star, _WX @ state_star, _WXX @ state_star
    u_new = (ubar - NU * (_DIFF * (co.M0 * w + co.M1 * ws))
             + (half * NU * NU) * (_DIFF * (co.N0 * wx + co.N1 * wxs)))
    w_new = (w - NU * (co.M0 * wx + co.M1 * wxs)
             + (half * NU * NU) * (co.N0 * wxx + co.N1 * wxxs))
    return TwoMomentRule.from_operator("cgks-s2o4", OpMatrix.stack(u_new, _DIFF * w_new),
                                       reprojects_slope=True)


def build_rule(scheme: SchemeId | str) -> TwoMomentRule:
    """Exact rational rule for ``scheme``; results are cached and immutable."""
    return _build_rule(as_scheme_id(scheme))


@lru_cache(maxsize=None)
def _build_rule(sid: SchemeId) -> TwoMomentRule:
    fam, ti, corr = sid.family, sid.time_integrator, sid.correction
    if ti is TimeIntegrator.S2O4:
        return build_s2o4_rule()
    if fam in (Family.CGKS, Family.GRP):
        if ti is TimeIntegrator.S1O2:
            op = _cgks_s1o2()
        elif fam is Family.CGKS:
            op = _rk2(_cgks_semi_discrete())
        else:
            raise UnsupportedSchemeError("GRP is a one-stage Lax-Wendroff type solver")
    elif fam is Family.DG:
        op = _rk2(_dg_p1(_row(_S(0), _ZERO), _RIGHT_TRACE)) if ti is TimeIntegrator.RK2 \
            else _dg_s1o2()
    else:
        if ti is not TimeIntegrator.RK2:
            raise UnsupportedSchemeError("FR is only constructed with RK2 time stepping")
        if corr is Correction.NONE:
            raise UnsupportedSchemeError("FR requires a correction function")
        op = _rk2(_fr_semi_discrete(correction_function(corr)))
    return TwoMomentRule.from_operator(str(sid), op)


def grp_step(field: TwoMomentField, nu: float, advection_speed: float = 1.0,
             slope_update: str = "trace") -> TwoMomentField:
    """One GRP step for u_t + c u_x = 0, executed in physical variables.

    ``slope_update="trace"`` differences cell j's own edge values evolved with
    the interface time derivatives; ``"riemann"`` differences the evolved
    upwind interface values themselves.
    """
    if advection_speed <= 0:
        raise DomainError("advection speed must be positive")
    if not (np.isfinite(nu) and 0 < nu <= 1):
        raise DomainError(f"CFL number must lie in (0, 1], got {nu}")
    if slope_update not in ("trace", "riemann"):
        raise ValueError("slope_update must be 'trace' or 'riemann'")
    c, h = advection_speed, field.h
    k = nu * h / c
    ubar = field.ubar
    s = field.v / h

    # step 1: upwind interface value at x_{j+1/2}
    u_iface = ubar + 0.5 * h * s
    # step 2: its instantaneous time derivative
    u_iface_t = -c * s
    # step 3: midpoint flux, new averages and new interface values
    flux = c * (u_iface + 0.5 * k * u_iface_t)
    new_ubar = ubar - (k / h) * (flux - np.roll(flux, 1))
    if slope_update == "riemann":
        u_new = u_iface + k * u_iface_t
        new_s = (u_new - np.roll(u_new, 1)) / h
    else:
        right = ubar + 0.5 * h * s + k * u_iface_t
        left = ubar - 0.5 * h * s + k * np.roll(u_iface_t, 1)
        new_s = (right - left) / h
    return TwoMomentField(new_ubar, h * new_s, h)
