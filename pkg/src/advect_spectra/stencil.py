"""Two-moment state, exact coefficient tables and the generic update step.

A fully discrete two-moment scheme maps cell averages ``ubar`` and scaled
slopes ``v = h * (u_x)`` at one time level to the next by

    ubar'_j = sum_m a_m(nu) ubar_{j+m} + sum_m b_m(nu) v_{j+m}
    v'_j    = sum_m c_m(nu) ubar_{j+m} + sum_m d_m(nu) v_{j+m}

where every coefficient is a polynomial in the CFL number ``nu`` with exact
rational coefficients.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_DEGREE = 4
MIN_CELLS = 4


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


@dataclass(frozen=True)
class NuPolynomial:
    """Polynomial in nu with exact rational coefficients, ``coeffs[k]`` multiplying nu**k."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        cs = [_frac(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if len(cs) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(cs) - 1} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def const(cls, c) -> NuPolynomial:
        return cls((c,))

    @classmethod
    def nu(cls) -> NuPolynomial:
        return cls((0, 1))

    @property
    def degree(self) -> int:
        # zero polynomial has degree -1 by convention
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, nu):
        """Horner evaluation; exact when ``nu`` is rational."""
        if isinstance(nu, (int, Fraction)):
            acc, coeffs = Fraction(0), self.coeffs
        else:
            acc, coeffs = 0.0, [float(c) for c in self.coeffs]
        for c in reversed(coeffs):
            acc = acc * nu + c
        return acc

    @staticmethod
    def _coerce(other) -> NuPolynomial | None:
        if isinstance(other, NuPolynomial):
            return other
        if isinstance(other, (int, Rational)):
            return NuPolynomial.const(other)
        return None

    def __add__(self, other) -> NuPolynomial:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return NuPolynomial(tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self) -> NuPolynomial:
        return NuPolynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> NuPolynomial:
        other = self._coerce(other)
        return NotImplemented if other is None else self + (-other)

    def __rsub__(self, other) -> NuPolynomial:
        other = self._coerce(other)
        return NotImplemented if other is None else other - self

    def __mul__(self, other) -> NuPolynomial:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return NuPolynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(other.coeffs):
                out[i + j] += x * y
        return NuPolynomial(tuple(out))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            terms.append(f"{c}" if k == 0 else f"({c})*nu^{k}")
        return " + ".join(terms)

    def to_json(self) -> list[list[int]]:
        return [[c.numerator, c.denominator] for c in self.coeffs]

    @classmethod
    def from_json(cls, pairs: Iterable[Sequence[int]]) -> NuPolynomial:
        return cls(tuple(Fraction(int(n), int(d)) for n, d in pairs))


ZERO = NuPolynomial()
ONE = NuPolynomial.const(1)
NU = NuPolynomial.nu()


class Stencil:
    """Offset-indexed table of NuPolynomials, read as ``(S f)_j = sum_m S[m] f_{j+m}``.

    Products are operator compositions, so offsets add.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean: dict[int, NuPolynomial] = {}
        for m, p in (terms or {}).items():
            p = p if isinstance(p, NuPolynomial) else NuPolynomial.const(p)
            if not p.is_zero():
                clean[int(m)] = p
        self.terms = clean

    @classmethod
    def shift(cls, m: int, coeff=1) -> Stencil:
        return cls({m: coeff})

    def __getitem__(self, m: int) -> NuPolynomial:
        return self.terms.get(m, ZERO)

    def __eq__(self, other) -> bool:
        return isinstance(other, Stencil) and self.terms == other.terms

    def __add__(self, other: Stencil) -> Stencil:
        out = dict(self.terms)
        for m, p in other.terms.items():
            out[m] = out.get(m, ZERO) + p
        return Stencil(out)

    def __neg__(self) -> Stencil:
        return Stencil({m: -p for m, p in self.terms.items()})

    def __sub__(self, other: Stencil) -> Stencil:
        return self + (-other)

    def __mul__(self, other) -> Stencil:
        if isinstance(other, Stencil):
            out: dict[int, NuPolynomial] = {}
            for m, p in self.terms.items():
                for k, q in other.terms.items():
                    out[m + k] = out.get(m + k, ZERO) + p * q
            return Stencil(out)
        if not isinstance(other, (NuPolynomial, int, Rational)):
            return NotImplemented
        return Stencil({m: p * other for m, p in self.terms.items()})

    def __rmul__(self, other) -> Stencil:
        return self * other

    def __repr__(self) -> str:
        return f"Stencil({dict(sorted(self.terms.items()))!r})"


class OpMatrix:
    """Small matrix of stencils acting on the (ubar, v) pair.

    A 2x2 OpMatrix is a full update operator; a 1x2 OpMatrix is a linear
    functional such as an interface value.
    """

    def __init__(self, rows: Sequence[Sequence[Stencil]]):
        self.rows = tuple(tuple(r) for r in rows)

    @classmethod
    def identity(cls) -> OpMatrix:
        one, zero = Stencil.shift(0), Stencil()
        return cls([[one, zero], [zero, one]])

    @classmethod
    def stack(cls, *parts: OpMatrix) -> OpMatrix:
        return cls([row for p in parts for row in p.rows])

    def __add__(self, other: OpMatrix) -> OpMatrix:
        return OpMatrix([[x + y for x, y in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: OpMatrix) -> OpMatrix:
        return self + (-1) * other

    def __mul__(self, scalar) -> OpMatrix:
        """Scale every entry by a number, NuPolynomial or (left-applied) Stencil."""
        return OpMatrix([[scalar * x if isinstance(scalar, Stencil) else x * scalar for x in r]
                         for r in self.rows])

    __rmul__ = __mul__

    def __matmul__(self, other: OpMatrix) -> OpMatrix:
        n = len(other.rows[0])
        out = []
        for r in self.rows:
            row = []
            for j in range(n):
                acc = Stencil()
                for k, x in enumerate(r):
                    acc = acc + x * other.rows[k][j]
                row.append(acc)
            out.append(row)
        return OpMatrix(out)


def _as_poly_map(m) -> dict[int, NuPolynomial]:
    if isinstance(m, Stencil):
        return dict(m.terms)
    return {int(k): (p if isinstance(p, NuPolynomial) else NuPolynomial.const(p))
            for k, p in m.items()}


@dataclass(frozen=True)
class TwoMomentRule:
    """A fully discrete two-moment scheme as four offset-indexed NuPolynomial tables.

    ``reprojects_slope`` marks rules whose slope row rebuilds v from
    interface values, so that at nu = 0 the slope is projected rather than
    copied. All other rules are the identity at nu = 0.
    """

    scheme_id: str
    a: Mapping[int, NuPolynomial]
    b: Mapping[int, NuPolynomial]
    c: Mapping[int, NuPolynomial]
    d: Mapping[int, NuPolynomial]
    reprojects_slope: bool = False
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        tables = [_as_poly_map(t) for t in (self.a, self.b, self.c, self.d)]
        offsets = sorted({m for t in tables for m, p in t.items() if not p.is_zero()} or {0})
        for name, t in zip("abcd", tables):
            object.__setattr__(self, name, MappingProxyType({m: t.get(m, ZERO) for m in offsets}))
        object.__setattr__(self, "offsets", tuple(offsets))

    @classmethod
    def from_operator(cls, scheme_id: str, op: OpMatrix, reprojects_slope: bool = False
                      ) -> TwoMomentRule:
        (a, b), (c, d) = op.rows
        return cls(scheme_id, a.terms, b.terms, c.terms, d.terms, reprojects_slope)

    def to_operator(self) -> OpMatrix:
        return OpMatrix([[Stencil(self.a), Stencil(self.b)], [Stencil(self.c), Stencil(self.d)]])

    def tables(self) -> tuple[Mapping[int, NuPolynomial], ...]:
        return self.a, self.b, self.c, self.d

    def coefficients(self, nu: float) -> np.ndarray:
        """Float coefficients at ``nu`` as an array of shape (4, len(offsets)), rows a, b, c, d."""
        return np.array([[float(t[m](float(nu))) for m in self.offsets] for t in self.tables()])

    def rows_equal(self, other: TwoMomentRule) -> bool:
        return all(Stencil(x) == Stencil(y) for x, y in zip(self.tables(), other.tables()))

    def to_json(self) -> dict:
        doc = {
            "scheme_id": self.scheme_id,
            "offsets": list(self.offsets),
        }
        for name, t in zip("abcd", self.tables()):
            doc[name] = [t[m].to_json() for m in self.offsets]
        if self.reprojects_slope:
            doc["reprojects_slope"] = True
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: Mapping) -> TwoMomentRule:
        offsets = [int(m) for m in doc["offsets"]]
        tables = []
        for name in "abcd":
            entries = doc[name]
            if len(entries) != len(offsets):
                raise ValueError(f"table {name!r} has {len(entries)} entries for {len(offsets)} offsets")
            tables.append({m: NuPolynomial.from_json(p) for m, p in zip(offsets, entries)})
        return cls(str(doc["scheme_id"]), *tables, reprojects_slope=bool(doc.get("reprojects_slope", False)))

    @classmethod
    def loads(cls, text: str) -> TwoMomentRule:
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class TwoMomentField:
    """Periodic cell averages and scaled slopes ``v_j = h * (u_x)_j``."""

    ubar: np.ndarray
    v: np.ndarray
    h: float

    def __post_init__(self):
        ubar = np.array(self.ubar, dtype=float)
        v = np.array(self.v, dtype=float)
        if ubar.ndim != 1 or ubar.shape != v.shape:
            raise ValueError("ubar and v must be 1-D arrays of equal length")
        if ubar.size < MIN_CELLS:
            raise ValueError(f"at least {MIN_CELLS} cells required, got {ubar.size}")
        if not (np.all(np.isfinite(ubar)) and np.all(np.isfinite(v))):
            raise ValueError("field entries must be finite")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError("cell size h must be positive")
        ubar.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "ubar", ubar)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n_cells(self) -> int:
        return self.ubar.size

    def rolled(self, k: int) -> TwoMomentField:
        """Cyclic shift of both arrays, ``np.roll(x, k)``."""
        return TwoMomentField(np.roll(self.ubar, k), np.roll(self.v, k), self.h)

    def allclose(self, other: TwoMomentField, atol: float = 0.0, rtol: float = 0.0) -> bool:
        return (np.allclose(self.ubar, other.ubar, atol=atol, rtol=rtol)
                and np.allclose(self.v, other.v, atol=atol, rtol=rtol))


@dataclass(frozen=True)
class FourierMode:
    """One-step amplification of the consistent-data Fourier mode.

    ``lam`` multiplies the cell average and ``mu`` the slope, with the slope
    normalised by ``i * kappa_h`` as in ``h Du = i kappa h mu^n e^{i kappa x}``.
    """

    kappa_h: float
    lam: complex
    mu: complex

    def __post_init__(self):
        if not (np.isfinite(self.kappa_h) and 0.0 <= self.kappa_h <= 2 * np.pi):
            raise ValueError("kappa_h must lie in [0, 2*pi]")


def _apply_coefficients(offsets: Sequence[int], coef: np.ndarray, ubar: np.ndarray,
                        v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    new_u = np.zeros_like(ubar)
    new_v = np.zeros_like(v)
    for k, m in enumerate(offsets):
        # np.roll(x, -m)[j] == x[j + m] (periodic)
        um = np.roll(ubar, -m)
        vm = np.roll(v, -m)
        new_u += coef[0, k] * um + coef[1, k] * vm
        new_v += coef[2, k] * um + coef[3, k] * vm
    return new_u, new_v


def apply_rule(rule: TwoMomentRule, field: TwoMomentField, nu: float) -> TwoMomentField:
    """Advance ``field`` by one step of ``rule`` at CFL number ``nu``; the input is untouched."""
    if not np.isfinite(nu) or nu < 0:
        raise DomainError(f"CFL number must be finite and non-negative, got {nu}")
    coef = rule.coefficients(nu)
    new_u, new_v = _apply_coefficients(rule.offsets, coef, field.ubar, field.v)
    return TwoMomentField(new_u, new_v, field.h)


@dataclass(frozen=True)
class ConsistencyReport:
    scheme_id: str
    passed: bool
    violations: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.passed


def rule_consistency_check(rule: TwoMomentRule) -> ConsistencyReport:
    """Check the rule's structural identities coefficient-wise on the exact polynomials.

    Identities: sum a_m = 1, sum b_m = 0 (flux form), sum c_m = 0, and the
    nu = 0 reduction (identity, or for slope-reprojecting rules an identity
    average row plus a slope row exact on linear data).
    """
    violations = []
    a, b, c, d = rule.tables()
    sum_a = sum(a.values(), ZERO)
    sum_b = sum(b.values(), ZERO)
    sum_c = sum(c.values(), ZERO)
    if sum_a != ONE:
        violations.append(f"Σ a_m ≠ 1 (got {sum_a!r})")
    if not sum_b.is_zero():
        violations.append(f"Σ b_m ≠ 0 (got {sum_b!r})")
    if not sum_c.is_zero():
        violations.append(f"Σ c_m ≠ 0 (got {sum_c!r})")

    at0 = {name: {m: t[m](Fraction(0)) for m in rule.offsets}
           for name, t in zip("abcd", rule.tables())}
    delta = {m: Fraction(int(m == 0)) for m in rule.offsets}
    if at0["a"] != delta or any(at0["b"].values()):
        violations.append("average row is not the identity at ν = 0")
    if rule.reprojects_slope:
        # ubar_j = j, v_j = 1 must be reproduced by the slope row
        lin = sum(m * at0["c"][m] + at0["d"][m] for m in rule.offsets)
        if lin != 1:
            violations.append(f"slope row at ν = 0 is not exact on linear data (gives {lin})")
    elif at0["d"] != delta or any(at0["c"].values()):
        violations.append("slope row is not the identity at ν = 0")
    return ConsistencyReport(rule.scheme_id, not violations, tuple(violations))
