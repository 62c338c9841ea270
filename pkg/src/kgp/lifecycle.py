from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .report import SolveReport
    from .solver import SolveConfig


class SolveHooks:
    """Receives callbacks during solves, refinement schedules, epsilon sweeps and searches.
    Subclass and override the methods you need. Hooks run synchronously on the solver thread.
    """

    def on_solve_start(self, config: SolveConfig, method: str) -> None:
        """Called before the first residual evaluation of a solve."""
        pass

    def on_iteration(self, iteration: int, residual: float) -> None:
        """Called after each accepted Newton step or fixed-point sweep with the new dual_H
        residual."""
        pass

    def on_solve_end(self, report: SolveReport) -> None:
        """Called when a solve stops, converged or not."""
        pass

    def on_stage_start(self, kind: str, index: int, label: str) -> None:
        """Called before a refinement stage, continuation stage or search run."""
        pass

    def on_stage_end(self, kind: str, index: int, report: SolveReport | None) -> None:
        """Called after a stage. `report` is None when the stage failed without a report."""
        pass
