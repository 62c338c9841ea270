from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .functional import DecompositionReport, EnergyBreakdown, FieldPair, ResidualNorms
from .spectral import l2_norm
from .usage import SolveUsage
from .util._pretty_print import pretty_print_report

NONTRIVIAL_THRESHOLD = 1e-6


@dataclass
class SolveReport:
    state: FieldPair
    """The last iterate, converged or not."""

    converged: bool
    """Whether the final dual_H residual is at most `tol`."""

    iterations: int
    """Accepted Newton steps or fixed-point sweeps."""

    residual_history: list[float]
    """dual_H residual before the first step and after every step."""

    residuals: ResidualNorms
    energy: EnergyBreakdown
    decomposition: DecompositionReport
    tol: float
    method: str
    """"newton" or "fixed_point"."""

    usage: SolveUsage = field(default_factory=SolveUsage)

    eps_warning: bool = False
    """|eps| >= min(eta, b) / 2, beyond the smallness the existence theory needs."""

    stage_increment: float | None = None
    """L2 distance to the previous refinement stage, zero-padded; None outside refinement."""

    warnings: list[str] = field(default_factory=list)

    @property
    def nontrivial(self) -> bool:
        """Both components are nonzero: min(||u||, ||v||) > 1e-6."""
        return self.min_component_norm > NONTRIVIAL_THRESHOLD

    @property
    def min_component_norm(self) -> float:
        return min(l2_norm(self.state.u), l2_norm(self.state.v))

    def export(self) -> dict[str, Any]:
        """A JSON-compatible summary. Coefficients are written separately."""
        trunc = self.state.trunc
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "tol": self.tol,
            "b": self.state.b,
            "eps": self.state.eps,
            "J": trunc.J,
            "K": trunc.K,
            "residuals": self.residuals.to_dict(),
            "residual_history": list(self.residual_history),
            "energy": self.energy.to_dict(),
            "decomposition": self.decomposition.to_dict(),
            "nontrivial": self.nontrivial,
            "norm_u_l2": l2_norm(self.state.u),
            "norm_v_l2": l2_norm(self.state.v),
            "eps_warning": self.eps_warning,
            "stage_increment": self.stage_increment,
            "usage": {
                "residual_evaluations": self.usage.residual_evaluations,
                "jacobian_products": self.usage.jacobian_products,
                "krylov_iterations": self.usage.krylov_iterations,
            },
            "warnings": list(self.warnings),
        }

    def __str__(self) -> str:
        return pretty_print_report(self)
