from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import scipy.sparse.linalg

from .exceptions import LinearSolveBreakdown
from .functional import GridEvaluation, dual_weights
from .logger import logger
from .nonlinearity import Nonlinearity
from .spectral import PI_SQ, SpectralField, Truncation, apply_L_plus_b
from .tracing import Trace, get_current_trace, newton_step_span, trace
from .usage import SolveUsage

MAX_BACKTRACKS = 20
FD_STEP = 1e-7


class TraceCtxManager:
    """Creates a trace only if there is no current trace, and manages the trace lifecycle."""

    def __init__(self, workflow_name: str, metadata: dict[str, Any] | None = None):
        self.trace: Trace | None = None
        self.workflow_name = workflow_name
        self.metadata = metadata

    def __enter__(self) -> TraceCtxManager:
        if not get_current_trace():
            self.trace = trace(workflow_name=self.workflow_name, metadata=self.metadata)
            self.trace.start(mark_as_current=True)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.trace:
            self.trace.finish(reset_current=True)


@dataclass
class _Evaluation:
    fields: list[SpectralField]
    residual: list[SpectralField]
    grids: list[GridEvaluation | None]
    norm: float


class GalerkinSystem:
    """The Galerkin residual G(w) = (L+b)w + eps*(other field) + P f(w) + h as a map on packed
    real vectors. Holds either both fields of the coupled system or one field of the decoupled
    problem (eps is ignored with a single field)."""

    def __init__(
        self,
        trunc: Truncation,
        b: float,
        eps: float,
        nonlinearities: Sequence[Nonlinearity],
        forcings: Sequence[SpectralField],
        usage: SolveUsage,
    ):
        if len(nonlinearities) not in (1, 2) or len(forcings) != len(nonlinearities):
            raise ValueError("a Galerkin system holds one or two fields")
        self.trunc = trunc
        self.b = b
        self.eps = eps if len(nonlinearities) == 2 else 0.0
        self.nonlinearities = list(nonlinearities)
        self.forcings = list(forcings)
        self.usage = usage
        self._block = trunc.real_size
        self._dual = dual_weights(trunc, b) * trunc.multiplicity * PI_SQ
        diagonal = (trunc.eigenvalues + b).astype(float)
        block = np.concatenate(
            [diagonal[:, 0], diagonal[:, 1:].ravel(), diagonal[:, 1:].ravel()]
        )
        self._inverse_diagonal = 1.0 / np.tile(block, self.n_fields)

    @property
    def n_fields(self) -> int:
        return len(self.nonlinearities)

    @property
    def size(self) -> int:
        return self.n_fields * self._block

    def pack(self, fields: Sequence[SpectralField]) -> np.ndarray:
        return np.concatenate([f.to_real_vector() for f in fields])

    def unpack(self, vector: np.ndarray) -> list[SpectralField]:
        return [
            SpectralField.from_real_vector(self.trunc, vector[i * self._block : (i + 1) * self._block])
            for i in range(self.n_fields)
        ]

    def dual_norm(self, residual: Sequence[SpectralField]) -> float:
        return math.sqrt(sum(float(np.sum(self._dual * np.abs(r.coeffs) ** 2)) for r in residual))

    def evaluate(self, fields: list[SpectralField]) -> _Evaluation:
        self.usage.residual_evaluations += 1
        grids: list[GridEvaluation | None] = []
        residual = []
        for i, (w, nl, h) in enumerate(zip(fields, self.nonlinearities, self.forcings)):
            r = apply_L_plus_b(w, self.b) + h
            if self.n_fields == 2 and self.eps != 0.0:
                r = r + self.eps * fields[1 - i]
            grid = None if nl.is_zero else GridEvaluation(w, nl)
            if grid is not None:
                r = r + grid.projected_f()
            grids.append(grid)
            residual.append(r)
        return _Evaluation(fields, residual, grids, self.dual_norm(residual))

    def jacobian(
        self, at: _Evaluation, mode: Literal["exact", "finite_difference"]
    ) -> scipy.sparse.linalg.LinearOperator:
        exact = mode == "exact" and all(nl.df is not None for nl in self.nonlinearities)
        base = self.pack(at.fields)
        base_residual = self.pack(at.residual)
        base_scale = max(1.0, float(np.max(np.abs(base), initial=0.0)))

        def exact_matvec(d: np.ndarray) -> np.ndarray:
            self.usage.jacobian_products += 1
            directions = self.unpack(np.ravel(d))
            out = []
            for i, (dw, grid) in enumerate(zip(directions, at.grids)):
                r = apply_L_plus_b(dw, self.b)
                if self.n_fields == 2 and self.eps != 0.0:
                    r = r + self.eps * directions[1 - i]
                if grid is not None:
                    r = r + grid.linearized(dw)
                out.append(r)
            return self.pack(out)

        def fd_matvec(d: np.ndarray) -> np.ndarray:
            self.usage.jacobian_products += 1
            d = np.ravel(d)
            d_norm = float(np.max(np.abs(d), initial=0.0))
            if d_norm == 0.0:
                return np.zeros_like(d)
            delta = FD_STEP * base_scale / d_norm
            shifted = self.evaluate(self.unpack(base + delta * d))
            return (self.pack(shifted.residual) - base_residual) / delta

        return scipy.sparse.linalg.LinearOperator(
            (self.size, self.size), matvec=exact_matvec if exact else fd_matvec, dtype=float
        )

    def preconditioner(self) -> scipy.sparse.linalg.LinearOperator:
        """The diagonal (L + b)^{-1}, exact for the linear part of the Jacobian."""
        inverse = self._inverse_diagonal
        return scipy.sparse.linalg.LinearOperator(
            (self.size, self.size), matvec=lambda d: inverse * np.ravel(d), dtype=float
        )


@dataclass
class KrylovSettings:
    rtol: float
    maxit: int | None


@dataclass
class NewtonOutcome:
    fields: list[SpectralField]
    converged: bool
    iterations: int
    history: list[float]
    warnings: list[str] = field(default_factory=list)


def _krylov_step(
    system: GalerkinSystem,
    at: _Evaluation,
    jacobian_mode: Literal["exact", "finite_difference"],
    settings: KrylovSettings,
) -> tuple[np.ndarray, int]:
    operator = system.jacobian(at, jacobian_mode)
    rhs = -system.pack(at.residual)
    maxit = settings.maxit or system.size
    restart = min(system.size, maxit)
    counter = {"iterations": 0}

    def count(_: Any) -> None:
        counter["iterations"] += 1

    step, info = scipy.sparse.linalg.gmres(
        operator,
        rhs,
        rtol=settings.rtol,
        atol=0.0,
        restart=restart,
        maxiter=max(1, math.ceil(maxit / restart)),
        M=system.preconditioner(),
        callback=count,
        callback_type="pr_norm",
    )
    system.usage.krylov_iterations += counter["iterations"]
    if info < 0:
        raise LinearSolveBreakdown(f"GMRES broke down (info={info})")
    if not np.all(np.isfinite(step)):
        raise LinearSolveBreakdown("GMRES returned a non-finite Newton step")
    if info > 0:
        logger.debug(f"GMRES stopped at its iteration cap ({maxit}); using the inexact step")
    return step, counter["iterations"]


def run_newton(
    system: GalerkinSystem,
    initial: list[SpectralField],
    tol: float,
    max_iterations: int,
    linesearch: Literal["none", "backtracking"],
    jacobian_mode: Literal["exact", "finite_difference"],
    krylov: KrylovSettings,
    on_iteration: Any = None,
) -> NewtonOutcome:
    """Damped Newton-Krylov on G(w) = 0 until the dual_H residual drops to `tol`."""
    current = system.evaluate(initial)
    history = [current.norm]
    warnings: list[str] = []
    iterations = 0
    if jacobian_mode == "exact" and any(nl.df is None for nl in system.nonlinearities):
        message = "no closed-form df; using finite-difference Jacobian products"
        logger.warning(message)
        warnings.append(message)

    while current.norm > tol and iterations < max_iterations:
        iterations += 1
        with newton_step_span(iterations) as span:
            step, krylov_iterations = _krylov_step(system, current, jacobian_mode, krylov)
            x = system.pack(current.fields)
            alpha = 1.0
            trial = system.evaluate(system.unpack(x + step))
            backtracks = 0
            if linesearch == "backtracking":
                while not trial.norm < current.norm and backtracks < MAX_BACKTRACKS:
                    alpha /= 2
                    backtracks += 1
                    trial = system.evaluate(system.unpack(x + alpha * step))
                if not trial.norm < current.norm:
                    message = (
                        f"iteration {iterations}: no decrease after {MAX_BACKTRACKS} halvings, "
                        f"residual {trial.norm:.3e}"
                    )
                    logger.warning(message)
                    warnings.append(message)

            span.span_data.residual = trial.norm
            span.span_data.step_length = alpha
            span.span_data.krylov_iterations = krylov_iterations
            span.span_data.backtracks = backtracks

        logger.debug(
            f"newton {iterations}: residual {current.norm:.3e} -> {trial.norm:.3e} "
            f"(step {alpha:g}, {krylov_iterations} krylov, {backtracks} backtracks)"
        )
        current = trial
        history.append(current.norm)
        if on_iteration is not None:
            on_iteration(iterations, current.norm)
        if not math.isfinite(current.norm):
            break

    return NewtonOutcome(
        fields=current.fields,
        converged=current.norm <= tol,
        iterations=iterations,
        history=history,
        warnings=warnings,
    )
