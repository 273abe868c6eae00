"""Time marching on periodic grids: errors, convergence orders and blow-up probes."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .schemes import as_scheme_id, build_rule, grp_step
from .stencil import TwoMomentField, TwoMomentRule, _apply_coefficients

BLOWUP_THRESHOLD = 1e12
MIN_RUN_CELLS = 8
RESULT_HEADER = ("scheme", "n_cells", "cfl", "T", "l1", "l2", "blew_up", "steps")
PROFILES = ("sine",)


@dataclass(frozen=True)
class RunConfig:
    scheme_id: str
    n_cells: int
    cfl: float
    final_time: float = 1.0
    initial_profile: str = "sine"
    advection_speed: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scheme_id", str(as_scheme_id(self.scheme_id)))
        if int(self.n_cells) != self.n_cells or self.n_cells < MIN_RUN_CELLS:
            raise ValueError(f"n_cells must be an integer >= {MIN_RUN_CELLS}")
        if not (math.isfinite(self.cfl) and self.cfl > 0):
            raise ValueError("cfl must be positive")
        if not (math.isfinite(self.final_time) and self.final_time > 0):
            raise ValueError("final_time must be positive")
        if not (math.isfinite(self.advection_speed) and self.advection_speed > 0):
            raise ValueError("advection_speed must be positive (mirror the grid for c < 0)")
        if self.initial_profile not in PROFILES:
            raise ValueError(f"unknown profile {self.initial_profile!r}")


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    l1_error: float
    l2_error: float
    max_amplitude: float
    steps_taken: int
    blew_up: bool

    def csv_row(self) -> list[str]:
        c = self.config
        return [c.scheme_id, str(c.n_cells), repr(float(c.cfl)), repr(float(c.final_time)),
                repr(self.l1_error), repr(self.l2_error), str(self.blew_up).lower(),
                str(self.steps_taken)]

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["config"] = asdict(self.config)
        return doc


def results_to_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()


def exact_moments(profile: str, n_cells: int, shift: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Exact cell averages and scaled slope averages of u0(x - shift) on [0, 1]."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    h = 1.0 / n_cells
    k = 2.0 * math.pi
    left = np.arange(n_cells) * h - shift
    mid = left + 0.5 * h
    # cos(a) - cos(b) and sin(b) - sin(a) written as products to avoid cancellation
    ubar = np.sin(k * mid) * np.sin(0.5 * k * h) * 2.0 / (k * h)
    v = 2.0 * np.cos(k * mid) * np.sin(0.5 * k * h)
    return ubar, v


def init_field(profile: str, n_cells: int) -> TwoMomentField:
    ubar, v = exact_moments(profile, n_cells)
    return TwoMomentField(ubar, v, 1.0 / n_cells)


def mirror(field: TwoMomentField) -> TwoMomentField:
    """Reflect x -> -x: cells reverse order and slopes change sign."""
    return TwoMomentField(field.ubar[::-1], -field.v[::-1], field.h)


def step_schedule(cfl: float, final_time: float, h: float, speed: float = 1.0
                  ) -> tuple[int, float]:
    """Number of steps and the CFL number of the (possibly shortened) last step."""
    dt = cfl * h / speed
    ratio = final_time / dt
    n = max(1, math.ceil(ratio - 1e-9 * ratio))
    last = final_time - (n - 1) * dt
    return n, speed * last / h


@dataclass(frozen=True)
class MarchState:
    """Raw arrays after a march; entries may be huge or non-finite after a blow-up."""

    ubar: np.ndarray
    v: np.ndarray
    steps: int
    blew_up: bool
    max_amplitude: float


def march_field(scheme, field: TwoMomentField, cfl: float, final_time: float,
                speed: float = 1.0, stepper: str = "rule") -> MarchState:
    """Advance ``field`` to ``final_time``, halting once max |ubar| exceeds the threshold.

    ``scheme`` is a scheme name or a ready-made rule. ``stepper="grp"`` runs
    the GRP solver step by step instead of a rule.
    """
    if stepper not in ("rule", "grp"):
        raise ValueError("stepper must be 'rule' or 'grp'")
    n_steps, last_nu = step_schedule(cfl, final_time, field.h, speed)
    if stepper == "grp":
        state = field
        for k in range(n_steps):
            state = grp_step(state, cfl if k < n_steps - 1 else last_nu, speed)
        amp = float(np.max(np.abs(state.ubar)))
        return MarchState(state.ubar, state.v, n_steps, False, amp)

    rule = scheme if isinstance(scheme, TwoMomentRule) else build_rule(scheme)
    full, short = rule.coefficients(cfl), rule.coefficients(last_nu)
    ubar, v = field.ubar.copy(), field.v.copy()
    amp = float(np.max(np.abs(ubar)))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            ubar, v = _apply_coefficients(rule.offsets, full if k < n_steps - 1 else short,
                                          ubar, v)
            amp = float(np.max(np.abs(ubar)))
            if not amp <= BLOWUP_THRESHOLD:
                return MarchState(ubar, v, k + 1, True, amp if math.isfinite(amp) else math.inf)
    return MarchState(ubar, v, n_steps, False, amp)


def _errors(ubar: np.ndarray, exact: np.ndarray, h: float) -> tuple[float, float]:
    diff = ubar - exact
    with np.errstate(over="ignore", invalid="ignore"):
        return float(h * np.sum(np.abs(diff))), float(math.sqrt(h * np.sum(diff * diff)))


def march(config: RunConfig, stepper: str = "rule", rule: TwoMomentRule | None = None
          ) -> RunResult:
    """Run ``config`` and measure L1/L2 errors of the cell averages against the exact solution.

    On blow-up the march halts and the errors are those of the halted state.
    ``rule`` overrides the rule built from ``config.scheme_id``.
    """
    field = init_field(config.initial_profile, config.n_cells)
    state = march_field(rule or config.scheme_id, field, config.cfl, config.final_time,
                        config.advection_speed, stepper)
    exact, _ = exact_moments(config.initial_profile, config.n_cells,
                             config.advection_speed * config.final_time)
    l1, l2 = _errors(state.ubar, exact, field.h)
    return RunResult(config, l1, l2, state.max_amplitude, state.steps, state.blew_up)


@dataclass(frozen=True)
class ConvergenceRow:
    n_cells: int
    l1: float
    order: float | None


def convergence_study(scheme, cfl: float, n_list: Sequence[int], final_time: float = 1.0,
                      rule: TwoMomentRule | None = None) -> list[ConvergenceRow]:
    """L1 errors on a doubling sequence of grids and the observed orders log2(e_N / e_2N)."""
    n_list = [int(n) for n in n_list]
    if len(n_list) < 4:
        raise ValueError("at least four grid sizes are required")
    if any(b != 2 * a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("grid sizes must double")
    rows: list[ConvergenceRow] = []
    prev = None
    for n in n_list:
        res = march(RunConfig(str(as_scheme_id(scheme)), n, cfl, final_time), rule=rule)
        order = None if prev is None else math.log2(prev / res.l1_error)
        rows.append(ConvergenceRow(n, res.l1_error, order))
        prev = res.l1_error
    return rows


@dataclass(frozen=True)
class ProbeTable:
    scheme_id: str
    results: tuple[RunResult, ...]

    @property
    def onset_monotone(self) -> bool:
        """Once a run blows up, every larger CFL number in the probe blows up too."""
        ordered = sorted(self.results, key=lambda r: r.config.cfl)
        flags = [r.blew_up for r in ordered]
        return all(b or not a for a, b in zip(flags, flags[1:]))


def blowup_probe(scheme, cfl_list: Sequence[float], n_cells: int = 640,
                 final_time: float = 1.0, rule: TwoMomentRule | None = None) -> ProbeTable:
    name = str(as_scheme_id(scheme))
    return ProbeTable(name, tuple(march(RunConfig(name, n_cells, float(c), final_time), rule=rule)
                                  for c in cfl_list))
