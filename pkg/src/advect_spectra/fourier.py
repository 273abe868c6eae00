"""Two-moment von Neumann analysis: amplification matrix, spectra, CFL limits."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .stencil import DomainError, FourierMode, TwoMomentRule

TWO_PI = 2.0 * math.pi
DEFAULT_N_THETA = 2048
DEFAULT_EPSILON = 1e-10
NU_MAX = 4.0
SPECTRUM_HEADER = ("theta", "re_rho1", "im_rho1", "re_rho2", "im_rho2", "max_modulus")


def _check_theta(theta) -> None:
    t = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(t > TWO_PI):
        raise DomainError("theta must lie in [0, 2*pi]")


def symbol_entries(rule: TwoMomentRule, theta, nu: float) -> np.ndarray:
    """Entries (g11, g12, g21, g22) stacked along axis 0, vectorized over ``theta``."""
    theta = np.asarray(theta, dtype=float)
    coef = rule.coefficients(nu)                       # (4, n_off)
    phase = np.exp(1j * np.multiply.outer(np.asarray(rule.offsets, dtype=float), theta))
    return np.tensordot(coef, phase, axes=1)


@dataclass(frozen=True)
class AmplificationMatrix:
    theta: float
    nu: float
    g11: complex
    g12: complex
    g21: complex
    g22: complex

    @property
    def trace(self) -> complex:
        return self.g11 + self.g22

    @property
    def det(self) -> complex:
        return self.g11 * self.g22 - self.g12 * self.g21

    def as_array(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g21, self.g22]])


def assemble_G(rule: TwoMomentRule, theta: float, nu: float) -> AmplificationMatrix:
    _check_theta(theta)
    if not (np.isfinite(nu) and nu >= 0):
        raise DomainError("nu must be finite and non-negative")
    g = symbol_entries(rule, float(theta), nu)
    return AmplificationMatrix(float(theta), float(nu), *(complex(x) for x in g))


def _roots(g11, g12, g21, g22) -> tuple[np.ndarray, np.ndarray]:
    """Both eigenvalues of [[g11, g12], [g21, g22]], vectorized."""
    g11, g12, g21, g22 = (np.asarray(x, dtype=complex) for x in (g11, g12, g21, g22))
    half_tr = 0.5 * (g11 + g22)
    det = g11 * g22 - g12 * g21
    # (g11 - g22)^2 + 4 g12 g21 avoids the cancellation in tr^2 - 4 det and
    # is exactly zero for triangular matrices with equal diagonals
    q = 0.5 * np.sqrt((g11 - g22) ** 2 + 4.0 * g12 * g21)
    q = np.where((half_tr.conjugate() * q).real >= 0, q, -q)
    big = half_tr + q
    scale = np.maximum(np.abs(g11) + np.abs(g22), 1e-300)
    safe = np.abs(big) > 1e-14 * scale
    small = np.where(safe, det / np.where(safe, big, 1.0), half_tr - q)
    return big, small


def eigen2x2(G: AmplificationMatrix) -> tuple[complex, complex]:
    """Eigenvalues of G, physical branch first (nearest the exact symbol e^{-i nu theta})."""
    r1, r2 = (complex(x) for x in _roots(G.g11, G.g12, G.g21, G.g22))
    exact = complex(np.exp(-1j * G.nu * G.theta))
    if abs(r2 - exact) < abs(r1 - exact):
        r1, r2 = r2, r1
    return r1, r2


@dataclass(frozen=True)
class SpectrumSample:
    theta: float
    rho1: complex
    rho2: complex
    max_modulus: float


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue branches over a uniform theta grid; ``rho1`` is the physical branch."""

    scheme_id: str
    nu: float
    theta: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray

    @property
    def max_modulus(self) -> np.ndarray:
        return np.maximum(np.abs(self.rho1), np.abs(self.rho2))

    def samples(self) -> Iterator[SpectrumSample]:
        for t, a, b, m in zip(self.theta, self.rho1, self.rho2, self.max_modulus):
            yield SpectrumSample(float(t), complex(a), complex(b), float(m))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPECTRUM_HEADER)
        for s in self.samples():
            w.writerow([repr(float(x)) for x in (s.theta, s.rho1.real, s.rho1.imag,
                                                 s.rho2.real, s.rho2.imag, s.max_modulus)])
        return buf.getvalue()


def spectrum(rule: TwoMomentRule, nu: float, n_theta: int = DEFAULT_N_THETA) -> Spectrum:
    """Both eigenvalue branches on n_theta points of [0, 2*pi], tracked by continuity."""
    if n_theta < 2:
        raise ValueError("n_theta must be at least 2")
    theta = np.linspace(0.0, TWO_PI, n_theta)
    a, b = _roots(*symbol_entries(rule, theta, nu))
    rho1 = np.empty_like(a)
    rho2 = np.empty_like(b)
    # the physical branch starts at the eigenvalue nearest 1
    if abs(b[0] - 1) < abs(a[0] - 1):
        rho1[0], rho2[0] = b[0], a[0]
    else:
        rho1[0], rho2[0] = a[0], b[0]
    for k in range(1, n_theta):
        keep = abs(a[k] - rho1[k - 1]) + abs(b[k] - rho2[k - 1])
        swap = abs(b[k] - rho1[k - 1]) + abs(a[k] - rho2[k - 1])
        if swap < keep:
            rho1[k], rho2[k] = b[k], a[k]
        else:
            rho1[k], rho2[k] = a[k], b[k]
    return Spectrum(rule.scheme_id, float(nu), theta, rho1, rho2)


def _max_modulus(rule: TwoMomentRule, theta, nu: float) -> np.ndarray:
    a, b = _roots(*symbol_entries(rule, theta, nu))
    return np.maximum(np.abs(a), np.abs(b))


def spectral_radius(rule: TwoMomentRule, nu: float, n_theta: int = DEFAULT_N_THETA) -> float:
    """max over theta of the larger eigenvalue modulus, grid search plus local refinement."""
    if n_theta < 256:
        raise ValueError("n_theta must be at least 256")
    if nu == 0:
        return 1.0
    theta = np.linspace(0.0, TWO_PI, n_theta)
    mod = _max_modulus(rule, theta, nu)
    k = int(np.argmax(mod))
    best = float(mod[k])
    lo, hi = theta[max(k - 1, 0)], theta[min(k + 1, n_theta - 1)]
    res = minimize_scalar(lambda t: -float(_max_modulus(rule, t, nu)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    return max(best, -float(res.fun))


@dataclass(frozen=True)
class CflResult:
    scheme_id: str
    nu_star: float
    bisection_tol: float
    n_theta: int
    epsilon: float
    capped: bool = False          # stable over the whole search interval

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def cfl_limit(rule: TwoMomentRule, tol: float = 1e-4, epsilon: float = DEFAULT_EPSILON,
              n_theta: int = DEFAULT_N_THETA, scan_step: float = 0.01) -> CflResult:
    """Largest stable nu: coarse upward scan for the first instability, then bisection."""
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")

    def stable(nu: float) -> bool:
        return spectral_radius(rule, nu, n_theta) <= 1.0 + epsilon

    if not stable(tol):
        raise DomainError(f"{rule.scheme_id}: unstable at all ν (radius > 1 + {epsilon} at ν = {tol})")
    lo, hi = tol, None
    nu = tol
    while nu < NU_MAX:
        nu = min(nu + scan_step, NU_MAX)
        if stable(nu):
            lo = nu
        else:
            hi = nu
            break
    if hi is None:
        return CflResult(rule.scheme_id, NU_MAX, tol, n_theta, epsilon, capped=True)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return CflResult(rule.scheme_id, 0.5 * (lo + hi), tol, n_theta, epsilon)


def s1o2_closed_form(theta, nu):
    return 1.0 - nu * (1.0 - np.exp(-1j * np.asarray(theta)))


def rk2_closed_form(theta, nu):
    z = np.exp(-1j * np.asarray(theta)) - 1.0
    return 1.0 + nu * z + 0.5 * nu * nu * z * z


def rk2_stability_bound(theta: float) -> float:
    """Smallest real root of nu^3 - 2 nu^2 + 2 nu - (1 + cot^2(theta/2)).

    The cubic is strictly increasing in nu, so its unique real root is
    bracketed by [1, 1 + K^(1/3)] with K = cot^2(theta/2) and found by a
    safeguarded root search.
    """
    theta = float(theta)
    _check_theta(theta)
    if theta == 0.0 or theta == TWO_PI:
        return math.inf
    if theta == math.pi:
        return 1.0
    k = 1.0 / math.tan(0.5 * theta) ** 2
    if k == 0.0:
        return 1.0

    def f(nu):
        # (nu-1)^3 + (nu-1)^2 + (nu-1) - K, written around nu = 1 to keep digits
        y = nu - 1.0
        return y * (y * (y + 1.0) + 1.0) - k

    return brentq(f, 1.0, 1.0 + k ** (1.0 / 3.0) + 1e-12, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def fourier_mode(rule: TwoMomentRule, theta: float, nu: float) -> FourierMode:
    """One-step growth of the consistent mode (ubar, v) = (1, i theta).

    ``lam`` is the growth of the cell average and ``mu`` that of the slope
    (normalised by i theta).
    """
    G = assemble_G(rule, theta, nu)
    lam = G.g11 + 1j * theta * G.g12
    if theta == 0.0:
        coef = rule.coefficients(nu)
        mu = complex(sum(m * coef[2, k] for k, m in enumerate(rule.offsets)) + coef[3].sum())
    else:
        mu = G.g22 + G.g21 / (1j * theta)
    return FourierMode(float(theta), complex(lam), complex(mu))
