from __future__ import annotations

import abc
from typing import Any


class SpanData(abc.ABC):
    @abc.abstractmethod
    def export(self) -> dict[str, Any]:
        pass

    @property
    @abc.abstractmethod
    def type(self) -> str:
        pass


class SolveSpanData(SpanData):
    """One Newton or fixed-point solve. Outcome fields are filled in when the solve ends."""

    __slots__ = ("method", "J", "K", "b", "eps", "converged", "iterations", "residual")

    def __init__(
        self,
        method: str,
        J: int,
        K: int,
        b: float,
        eps: float,
        converged: bool | None = None,
        iterations: int | None = None,
        residual: float | None = None,
    ):
        self.method = method
        self.J = J
        self.K = K
        self.b = b
        self.eps = eps
        self.converged = converged
        self.iterations = iterations
        self.residual = residual

    @property
    def type(self) -> str:
        return "solve"

    def export(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "method": self.method,
            "J": self.J,
            "K": self.K,
            "b": self.b,
            "eps": self.eps,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
        }


class NewtonStepSpanData(SpanData):
    __slots__ = ("iteration", "residual", "step_length", "krylov_iterations", "backtracks")

    def __init__(
        self,
        iteration: int,
        residual: float | None = None,
        step_length: float | None = None,
        krylov_iterations: int | None = None,
        backtracks: int | None = None,
    ):
        self.iteration = iteration
        self.residual = residual
        self.step_length = step_length
        self.krylov_iterations = krylov_iterations
        self.backtracks = backtracks

    @property
    def type(self) -> str:
        return "newton_step"

    def export(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "iteration": self.iteration,
            "residual": self.residual,
            "step_length": self.step_length,
            "krylov_iterations": self.krylov_iterations,
            "backtracks": self.backtracks,
        }


class StageSpanData(SpanData):
    """A refinement stage, a continuation stage or one run of a nontrivial search."""

    __slots__ = ("kind", "index", "label", "increment", "converged")

    def __init__(
        self,
        kind: str,
        index: int,
        label: str,
        increment: float | None = None,
        converged: bool | None = None,
    ):
        self.kind = kind
        self.index = index
        self.label = label
        self.increment = increment
        self.converged = converged

    @property
    def type(self) -> str:
        return "stage"

    def export(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "kind": self.kind,
            "index": self.index,
            "label": self.label,
            "increment": self.increment,
            "converged": self.converged,
        }


class HypothesisCheckSpanData(SpanData):
    __slots__ = ("name", "status", "samples")

    def __init__(self, name: str, status: str | None = None, samples: int | None = None):
        self.name = name
        self.status = status
        self.samples = samples

    @property
    def type(self) -> str:
        return "hypothesis_check"

    def export(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "name": self.name,
            "status": self.status,
            "samples": self.samples,
        }
