"""Sequences of solves: nested-truncation refinement, continuation in eps, and a multistart
search for nontrivial unforced solutions."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from typing import Any

from ._newton_impl import TraceCtxManager
from .exceptions import LinearSolveBreakdown, MaxIterations, NoNontrivialFound, UserError
from .functional import FieldPair, Forcing, ResidualNorms, decoupled_residual_norms
from .lifecycle import SolveHooks
from .logger import logger
from .nonlinearity import Nonlinearity
from .report import NONTRIVIAL_THRESHOLD, SolveReport
from .solver import InitialGuess, SolveConfig, newton_solve
from .spectral import Truncation, l2_norm
from .tracing import SpanError, stage_span
from .util import _error_tracing

SEARCH_MODES: tuple[tuple[int, int], ...] = ((1, 1), (2, 2), (2, 1), (1, 0), (1, 2))
"""Kernel modes first, then the lowest Plus and Minus modes."""

SEARCH_AMPLITUDES: tuple[float, ...] = (0.5, 1.0, 2.0)

DEDUP_DISTANCE = 1e-4


@dataclass(frozen=True)
class RefinementSchedule:
    """Nested truncations, each at least as large as the previous one in both J and K."""

    stages: tuple[Truncation, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        for prev, nxt in zip(self.stages, self.stages[1:]):
            if not prev.fits_in(nxt):
                raise UserError(f"refinement schedule is not monotone: {prev} then {nxt}")

    @classmethod
    def of(cls, *shapes: tuple[int, int]) -> RefinementSchedule:
        return cls(tuple(Truncation(J, K) for J, K in shapes))

    def __len__(self) -> int:
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)


def refine(
    schedule: RefinementSchedule,
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
    hooks: SolveHooks | None = None,
) -> list[SolveReport]:
    """Solve on each truncation of the schedule in turn, warm-starting every stage from the
    previous state zero-padded to the larger truncation. `cfg.trunc` is replaced stage by stage
    and the forcing is resized to match. Each report carries the L2 increment to the previous
    stage; a Cauchy-like decay of the increments is the numerical picture of a convergent
    Galerkin sequence."""
    with TraceCtxManager("kgp refine"):
        return _refine(schedule, cfg, nl_f, nl_g, forcing, hooks)


def _refine(
    schedule: RefinementSchedule,
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None,
    hooks: SolveHooks | None,
) -> list[SolveReport]:
    hooks = hooks or SolveHooks()
    forcing = forcing or Forcing.none()
    reports: list[SolveReport] = []
    previous: FieldPair | None = None

    for index, trunc in enumerate(schedule):
        label = f"J={trunc.J},K={trunc.K}"
        stage_cfg = replace(cfg, trunc=trunc)
        if previous is not None:
            stage_cfg = replace(stage_cfg, initial_guess=InitialGuess.from_state(previous))
        hooks.on_stage_start("refinement", index, label)
        with stage_span("refinement", index, label) as span:
            try:
                report = newton_solve(stage_cfg, nl_f, nl_g, forcing.resize(trunc), hooks)
            except MaxIterations as e:
                hooks.on_stage_end("refinement", index, e.report)
                raise
            increment = None if previous is None else report.state.l2_distance(previous.resize(trunc))
            report.stage_increment = increment
            span.span_data.increment = increment
            span.span_data.converged = report.converged
        logger.info(
            f"refinement stage {index} ({label}): increment "
            f"{'-' if increment is None else f'{increment:.3e}'}, residual {report.residuals.dual_H:.3e}"
        )
        hooks.on_stage_end("refinement", index, report)
        reports.append(report)
        previous = report.state
    return reports


@dataclass(frozen=True)
class SweepRow:
    eps: float
    err_u_l2: float
    """||u_eps - U_0||_{L2}; NaN when the eps = 0 stage was not reached."""
    err_v_l2: float
    phi: float
    res_dual: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.eps, self.err_u_l2, self.err_v_l2, self.phi, self.res_dual)


SWEEP_COLUMNS = ("eps", "err_u_l2", "err_v_l2", "phi", "res_dual")


@dataclass
class SweepReport:
    rows: list[SweepRow]
    reports: list[SolveReport]
    completed: bool
    """Whether every stage converged."""

    failure: str | None = None
    """Message of the exception that truncated the sweep."""

    decoupled_residuals: tuple[ResidualNorms, ResidualNorms] | None = None
    """Residuals of the two scalar equations at the eps = 0 endpoint, each on its own."""

    warnings: list[str] = field(default_factory=list)

    @property
    def eps_warning(self) -> bool:
        return any(r.eps_warning for r in self.reports)

    def export(self) -> dict[str, Any]:
        return {
            "completed": self.completed,
            "failure": self.failure,
            "columns": list(SWEEP_COLUMNS),
            "rows": [list(row.as_tuple()) for row in self.rows],
            "eps_warning": self.eps_warning,
            "decoupled_residuals": None
            if self.decoupled_residuals is None
            else [r.to_dict() for r in self.decoupled_residuals],
            "stages": [r.export() for r in self.reports],
            "warnings": list(self.warnings),
        }


def _sweep_list(eps_list: Iterable[float]) -> list[float]:
    values = [float(e) for e in eps_list]
    if any(not math.isfinite(e) for e in values):
        raise UserError(f"eps_list must be finite, got {values}")
    if 0.0 not in values:
        values.append(0.0)
    return values


def continuation_in_epsilon(
    eps_list: Sequence[float],
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
    hooks: SolveHooks | None = None,
) -> SweepReport:
    """Solve for each eps in order, each stage warm-started from the previous solution. A
    terminal eps = 0 is appended when missing; its state (U_0, V_0) solves the two decoupled
    wave equations and is the reference the error columns are measured against.

    A stage that fails truncates the sweep. The partial report keeps the stages that
    converged; their error columns are NaN when the eps = 0 stage was not reached."""
    with TraceCtxManager("kgp sweep"):
        return _continuation(eps_list, cfg, nl_f, nl_g, forcing, hooks)


def _continuation(
    eps_list: Sequence[float],
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None,
    hooks: SolveHooks | None,
) -> SweepReport:
    hooks = hooks or SolveHooks()
    forcing = forcing or Forcing.none()
    values = _sweep_list(eps_list)
    reports: list[SolveReport] = []
    failure: str | None = None
    guess = cfg.initial_guess

    for index, eps in enumerate(values):
        label = f"eps={eps:g}"
        stage_cfg = replace(cfg, eps=eps, initial_guess=guess)
        hooks.on_stage_start("continuation", index, label)
        with stage_span("continuation", index, label) as span:
            try:
                report = newton_solve(stage_cfg, nl_f, nl_g, forcing, hooks)
            except (MaxIterations, LinearSolveBreakdown) as e:
                failure = f"eps={eps:g}: {e.message}"
                logger.error(f"continuation stopped at {failure}")
                _error_tracing.attach_error_to_span(
                    span, SpanError(message="Continuation stage failed", data={"eps": eps})
                )
                hooks.on_stage_end("continuation", index, getattr(e, "report", None))
                break
            span.span_data.converged = report.converged
        hooks.on_stage_end("continuation", index, report)
        reports.append(report)
        guess = InitialGuess.from_state(report.state)

    reference = next((r.state for r in reports if r.state.eps == 0.0), None)
    rows = []
    for report in reports:
        if reference is None:
            err_u = err_v = math.nan
        else:
            err_u = l2_norm(report.state.u - reference.u)
            err_v = l2_norm(report.state.v - reference.v)
        rows.append(
            SweepRow(
                eps=report.state.eps,
                err_u_l2=err_u,
                err_v_l2=err_v,
                phi=report.energy.total,
                res_dual=report.residuals.dual_H,
            )
        )

    decoupled = None
    if reference is not None:
        decoupled = decoupled_residual_norms(reference, nl_f, nl_g, forcing)
    warnings = [w for r in reports for w in r.warnings]
    return SweepReport(
        rows=rows,
        reports=reports,
        completed=failure is None,
        failure=failure,
        decoupled_residuals=decoupled,
        warnings=warnings,
    )


def is_semi_trivial(state: FieldPair) -> bool:
    """Exactly one component is zero. With eps != 0 such a state cannot solve the unforced
    system: v = 0 leaves R_v = -eps u."""
    u_norm, v_norm = l2_norm(state.u), l2_norm(state.v)
    return (u_norm > NONTRIVIAL_THRESHOLD) != (v_norm > NONTRIVIAL_THRESHOLD)


def nontrivial_search(
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    deflation_count: int,
    strict: bool = False,
    hooks: SolveHooks | None = None,
) -> list[SolveReport]:
    """Multistart Newton on the unforced system from single-mode guesses. Converged states with
    both components nonzero are kept, up to `deflation_count` of them, deduplicated by L2
    distance with the lower |Phi| winning. A state with exactly one zero component cannot solve
    the coupled system when eps != 0 and is rejected.

    Finding a nontrivial state is best-effort: when nothing is found an empty list is returned,
    or NoNontrivialFound is raised if `strict` is set."""
    if deflation_count < 0:
        raise UserError(f"deflation_count must be non-negative, got {deflation_count}")
    if deflation_count == 0:
        return []
    with TraceCtxManager("kgp search"):
        return _search(cfg, nl_f, nl_g, deflation_count, strict, hooks)


def _search(
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    deflation_count: int,
    strict: bool,
    hooks: SolveHooks | None,
) -> list[SolveReport]:
    hooks = hooks or SolveHooks()
    found: list[SolveReport] = []
    guesses = [
        (j, k, a)
        for j, k in SEARCH_MODES
        if j <= cfg.trunc.J and k <= cfg.trunc.K
        for a in SEARCH_AMPLITUDES
    ]

    for index, (j, k, amplitude) in enumerate(guesses):
        if len(found) >= deflation_count:
            break
        label = f"mode=({j},{k}),amplitude={amplitude:g}"
        stage_cfg = replace(cfg, initial_guess=InitialGuess.single_mode(j, k, amplitude))
        hooks.on_stage_start("search", index, label)
        with stage_span("search", index, label) as span:
            try:
                report: SolveReport | None = newton_solve(stage_cfg, nl_f, nl_g, None, hooks)
            except (MaxIterations, LinearSolveBreakdown) as e:
                logger.debug(f"search run {label} failed: {e.message}")
                report = None
            span.span_data.converged = report is not None and report.converged
        hooks.on_stage_end("search", index, report)
        if report is None or not report.converged:
            continue
        if cfg.eps != 0.0 and is_semi_trivial(report.state):
            logger.warning(f"search run {label}: rejected semi-trivial state")
            continue
        if not report.nontrivial:
            continue

        duplicate = next(
            (i for i, other in enumerate(found) if report.state.l2_distance(other.state) <= DEDUP_DISTANCE),
            None,
        )
        if duplicate is None:
            found.append(report)
        elif abs(report.energy.total) < abs(found[duplicate].energy.total):
            found[duplicate] = report

    logger.info(f"nontrivial search: {len(found)} distinct state(s) from {len(guesses)} guesses")
    if not found:
        message = f"no nontrivial state found from {len(guesses)} single-mode guesses"
        if strict:
            raise NoNontrivialFound(message)
        logger.warning(message)
    return found
