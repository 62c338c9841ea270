from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Literal

from . import io
from ._newton_impl import GalerkinSystem, KrylovSettings, TraceCtxManager, run_newton
from .exceptions import MaxIterations, UserError
from .functional import (
    FieldPair,
    Forcing,
    decomposition_report,
    energy,
    project_nonlinearity,
    residual_norms,
)
from .lifecycle import SolveHooks
from .logger import logger
from .nonlinearity import Nonlinearity
from .report import SolveReport
from .spectral import SpectralField, Truncation, invert_L_plus_b, spectral_gap
from .tracing import SpanError, solve_span
from .usage import SolveUsage
from .util import _error_tracing

DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class InitialGuess:
    """Where an iteration starts. Build instances with the classmethods."""

    kind: Literal["zero", "single_mode", "from_file", "state"] = "zero"
    j: int = 1
    k: int = 0
    amplitude: float = 1.0
    path: str | None = None
    state: FieldPair | None = None

    @classmethod
    def zero(cls) -> InitialGuess:
        return cls()

    @classmethod
    def single_mode(cls, j: int, k: int, amplitude: float) -> InitialGuess:
        """amplitude * mode(j, k) in both u and v."""
        return cls(kind="single_mode", j=j, k=k, amplitude=amplitude)

    @classmethod
    def from_file(cls, path: str | Path) -> InitialGuess:
        return cls(kind="from_file", path=str(path))

    @classmethod
    def from_state(cls, state: FieldPair) -> InitialGuess:
        """A warm start; the state is zero-padded or truncated to the solve's truncation."""
        return cls(kind="state", state=state)

    def build(self, trunc: Truncation) -> tuple[SpectralField, SpectralField]:
        if self.kind == "zero":
            return SpectralField.zeros(trunc), SpectralField.zeros(trunc)
        if self.kind == "single_mode":
            w = SpectralField.mode(trunc, self.j, self.k, self.amplitude)
            return w, w
        if self.kind == "from_file":
            if self.path is None:
                raise UserError("from_file initial guess needs a path")
            loaded = io.read_coefficients(self.path)
            return loaded.u.resize(trunc), loaded.v.resize(trunc)
        if self.state is None:
            raise UserError("state initial guess needs a state")
        return self.state.u.resize(trunc), self.state.v.resize(trunc)


@dataclass(frozen=True)
class SolveConfig:
    b: float
    """Mass-squared parameter; -b must not be an eigenvalue of L."""

    eps: float
    """Coupling strength."""

    trunc: Truncation
    """Galerkin truncation (J, K)."""

    tol_residual: float = 1e-9
    """Convergence tolerance on the dual_H norm of the residual."""

    max_newton: int = 50
    """Newton steps, or fixed-point sweeps, before giving up."""

    linesearch: Literal["none", "backtracking"] = "backtracking"
    """Halve the Newton step up to 20 times while the residual does not decrease."""

    initial_guess: InitialGuess = field(default_factory=InitialGuess.zero)

    jacobian: Literal["exact", "finite_difference"] = "exact"
    """Exact needs df on both nonlinearities; otherwise finite differences are used with a
    warning."""

    krylov_tol: float = 1e-12
    """Relative tolerance of the inner GMRES solve."""

    krylov_maxit: int | None = None
    """Cap on inner GMRES iterations per Newton step. Defaults to the system size."""

    def __post_init__(self) -> None:
        spectral_gap(self.b)
        if not math.isfinite(self.eps):
            raise UserError(f"eps must be finite, got {self.eps}")
        if not self.tol_residual > 0:
            raise UserError(f"tol_residual must be positive, got {self.tol_residual}")
        if self.max_newton < 0:
            raise UserError(f"max_newton must be non-negative, got {self.max_newton}")
        if self.linesearch not in ("none", "backtracking"):
            raise UserError(f"unknown linesearch {self.linesearch!r}")
        if self.jacobian not in ("exact", "finite_difference"):
            raise UserError(f"unknown jacobian {self.jacobian!r}")
        if not 0 < self.krylov_tol < 1:
            raise UserError(f"krylov_tol must lie in (0, 1), got {self.krylov_tol}")
        if self.krylov_maxit is not None and self.krylov_maxit < 1:
            raise UserError(f"krylov_maxit must be positive, got {self.krylov_maxit}")

    @property
    def eps_threshold(self) -> float:
        """min(eta, b) / 2, the coupling size the existence theory is known to cover."""
        return min(spectral_gap(self.b).eta, self.b) / 2

    @property
    def eps_warning(self) -> bool:
        return abs(self.eps) >= self.eps_threshold

    def resolve(self, override: SolveOverrides | None) -> SolveConfig:
        """Produce a new SolveConfig by overlaying any non-None values from the override on top
        of this instance."""
        if override is None:
            return self

        changes = {
            f.name: getattr(override, f.name)
            for f in fields(override)
            if getattr(override, f.name) is not None
        }
        return replace(self, **changes)


@dataclass(frozen=True)
class SolveOverrides:
    """Optional per-call changes to a SolveConfig; None leaves the base value."""

    b: float | None = None
    eps: float | None = None
    trunc: Truncation | None = None
    tol_residual: float | None = None
    max_newton: int | None = None
    linesearch: Literal["none", "backtracking"] | None = None
    initial_guess: InitialGuess | None = None
    jacobian: Literal["exact", "finite_difference"] | None = None
    krylov_tol: float | None = None
    krylov_maxit: int | None = None


def _build_report(
    method: str,
    cfg: SolveConfig,
    state: FieldPair,
    iterations: int,
    history: list[float],
    usage: SolveUsage,
    warnings: list[str],
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing,
) -> SolveReport:
    residuals = residual_norms(state, nl_f, nl_g, forcing)
    warnings = list(warnings)
    if cfg.eps_warning:
        message = (
            f"|eps| = {abs(cfg.eps):g} is at or above min(eta, b)/2 = {cfg.eps_threshold:g}; "
            "existence is not guaranteed"
        )
        logger.warning(message)
        warnings.append(message)
    return SolveReport(
        state=state,
        converged=residuals.dual_H <= cfg.tol_residual,
        iterations=iterations,
        residual_history=history,
        residuals=residuals,
        energy=energy(state, nl_f, nl_g, forcing),
        decomposition=decomposition_report(state),
        tol=cfg.tol_residual,
        method=method,
        usage=usage,
        eps_warning=cfg.eps_warning,
        warnings=warnings,
    )


def _merge_histories(histories: list[list[float]]) -> list[float]:
    length = max(len(h) for h in histories)
    return [
        math.sqrt(sum(h[min(i, len(h) - 1)] ** 2 for h in histories)) for i in range(length)
    ]


def _run_newton(
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    h: tuple[SpectralField, SpectralField],
    start: tuple[SpectralField, SpectralField],
    usage: SolveUsage,
    hooks: SolveHooks,
) -> tuple[tuple[SpectralField, SpectralField], int, list[float], list[str]]:
    krylov = KrylovSettings(rtol=cfg.krylov_tol, maxit=cfg.krylov_maxit)
    if cfg.eps == 0.0:
        # Decoupled: two scalar problems, each to tol/sqrt(2) so the pair meets tol.
        outcomes = []
        for nl, forcing, w0 in zip((nl_f, nl_g), h, start):
            system = GalerkinSystem(cfg.trunc, cfg.b, 0.0, [nl], [forcing], usage)
            outcomes.append(
                run_newton(
                    system,
                    [w0],
                    cfg.tol_residual / math.sqrt(2.0),
                    cfg.max_newton,
                    cfg.linesearch,
                    cfg.jacobian,
                    krylov,
                    hooks.on_iteration,
                )
            )
        fields_ = (outcomes[0].fields[0], outcomes[1].fields[0])
        iterations = max(o.iterations for o in outcomes)
        history = _merge_histories([o.history for o in outcomes])
        warnings = [w for o in outcomes for w in o.warnings]
        return fields_, iterations, history, warnings

    system = GalerkinSystem(cfg.trunc, cfg.b, cfg.eps, [nl_f, nl_g], list(h), usage)
    outcome = run_newton(
        system,
        list(start),
        cfg.tol_residual,
        cfg.max_newton,
        cfg.linesearch,
        cfg.jacobian,
        krylov,
        hooks.on_iteration,
    )
    return (outcome.fields[0], outcome.fields[1]), outcome.iterations, outcome.history, outcome.warnings


def _run_fixed_point(
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing,
    start: tuple[SpectralField, SpectralField],
    usage: SolveUsage,
    hooks: SolveHooks,
) -> tuple[tuple[SpectralField, SpectralField], int, list[float], list[str]]:
    """Jacobi-style Picard sweeps (u, v) <- -(L+b)^{-1} (eps v + P f(u) + h1, eps u + P g(v) + h2)."""
    h1, h2 = forcing.fields(cfg.trunc)
    u, v = start
    usage.residual_evaluations += 1
    history = [residual_norms(FieldPair(u, v, cfg.b, cfg.eps), nl_f, nl_g, forcing).dual_H]
    warnings: list[str] = []
    sweeps = 0
    while history[-1] > cfg.tol_residual and sweeps < cfg.max_newton:
        sweeps += 1
        rhs_u = cfg.eps * v + project_nonlinearity(u, nl_f) + h1
        rhs_v = cfg.eps * u + project_nonlinearity(v, nl_g) + h2
        u, v = -invert_L_plus_b(rhs_u, cfg.b), -invert_L_plus_b(rhs_v, cfg.b)
        usage.residual_evaluations += 1
        residual = residual_norms(FieldPair(u, v, cfg.b, cfg.eps), nl_f, nl_g, forcing).dual_H
        history.append(residual)
        logger.debug(f"fixed point {sweeps}: residual {residual:.3e}")
        hooks.on_iteration(sweeps, residual)
        if not math.isfinite(residual) or residual > DIVERGENCE_THRESHOLD:
            message = f"fixed-point iteration diverged at sweep {sweeps} (residual {residual:.3e})"
            logger.error(message)
            warnings.append(message)
            break
    return (u, v), sweeps, history, warnings


def _solve(
    method: Literal["newton", "fixed_point"],
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None,
    hooks: SolveHooks | None,
) -> SolveReport:
    hooks = hooks or SolveHooks()
    forcing = forcing or Forcing.none()
    h = forcing.fields(cfg.trunc)
    start = cfg.initial_guess.build(cfg.trunc)
    usage = SolveUsage()

    with TraceCtxManager("kgp solve"):
        with solve_span(method, cfg.trunc.J, cfg.trunc.K, cfg.b, cfg.eps) as span:
            hooks.on_solve_start(cfg, method)
            if method == "newton":
                (u, v), iterations, history, warnings = _run_newton(
                    cfg, nl_f, nl_g, h, start, usage, hooks
                )
            else:
                (u, v), iterations, history, warnings = _run_fixed_point(
                    cfg, nl_f, nl_g, forcing, start, usage, hooks
                )

            state = FieldPair(u, v, cfg.b, cfg.eps)
            report = _build_report(
                method, cfg, state, iterations, history, usage, warnings, nl_f, nl_g, forcing
            )
            span.span_data.converged = report.converged
            span.span_data.iterations = report.iterations
            span.span_data.residual = report.residuals.dual_H
            hooks.on_solve_end(report)

            if not report.converged:
                message = (
                    f"{method} did not reach dual_H residual {cfg.tol_residual:g} in "
                    f"{iterations} iterations (final {report.residuals.dual_H:.3e})"
                )
                logger.error(message)
                _error_tracing.attach_error_to_span(
                    span,
                    SpanError(
                        message="Max iterations exceeded",
                        data={"max_newton": cfg.max_newton, "residual": report.residuals.dual_H},
                    ),
                )
                raise MaxIterations(message, report=report)

            logger.info(
                f"{method} converged in {iterations} iterations: dual_H {report.residuals.dual_H:.3e}, "
                f"Phi {report.energy.total:.6g}"
            )
            return report


def newton_solve(
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
    hooks: SolveHooks | None = None,
) -> SolveReport:
    """Find a Galerkin zero of the residual (a critical point of Phi) by damped Newton-Krylov.

    Each step solves the Jacobian system matrix-free with GMRES, preconditioned by the diagonal
    (L + b)^{-1}. With eps = 0 the two equations are solved independently.

    Raises:
        MaxIterations: if the residual is still above `cfg.tol_residual` after `cfg.max_newton`
            steps. The exception carries the partial report.
        LinearSolveBreakdown: if GMRES breaks down or returns a non-finite step.
    """
    return _solve("newton", cfg, nl_f, nl_g, forcing, hooks)


def fixed_point_solve(
    cfg: SolveConfig,
    nl_f: Nonlinearity,
    nl_g: Nonlinearity,
    forcing: Forcing | None = None,
    hooks: SolveHooks | None = None,
) -> SolveReport:
    """Picard iteration; converges only where the map is a contraction. `cfg.max_newton` caps
    the number of sweeps."""
    return _solve("fixed_point", cfg, nl_f, nl_g, forcing, hooks)
