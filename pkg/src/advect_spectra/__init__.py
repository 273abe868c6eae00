"""Linear stability laboratory for two-moment schemes for 1D linear advection."""
from __future__ import annotations

__version__ = "0.1.0"

from .fourier import (
    AmplificationMatrix,
    CflResult,
    SpectrumSample,
    assemble_G,
    cfl_limit,
    eigen2x2,
    rk2_closed_form,
    rk2_stability_bound,
    s1o2_closed_form,
    spectral_radius,
    spectrum,
)
from .schemes import SchemeId, UnsupportedSchemeError, build_rule, correction_function, grp_step
from .stencil import (
    DomainError,
    FourierMode,
    NuPolynomial,
    TwoMomentField,
    TwoMomentRule,
    apply_rule,
    rule_consistency_check,
)

__all__ = [
    "AmplificationMatrix", "CflResult", "DomainError", "FourierMode", "NuPolynomial",
    "SchemeId", "SpectrumSample", "TwoMomentField", "TwoMomentRule", "UnsupportedSchemeError",
    "apply_rule", "assemble_G", "build_rule", "cfl_limit", "correction_function", "eigen2x2",
    "grp_step", "rk2_closed_form", "rk2_stability_bound", "rule_consistency_check",
    "s1o2_closed_form", "spectral_radius", "spectrum",
]
