from __future__ import annotations

from typing import Any

from .logger import logger
from .setup import GLOBAL_TRACE_PROVIDER
from .span_data import (
    HypothesisCheckSpanData,
    NewtonStepSpanData,
    SolveSpanData,
    StageSpanData,
)
from .spans import Span
from .traces import Trace


def trace(
    workflow_name: str,
    trace_id: str | None = None,
    metadata: dict[str, Any] | None = None,
    disabled: bool = False,
) -> Trace:
    """
    Create a new trace. The trace is not started automatically; use it as a context manager
    (`with trace(...):`) or call `trace.start()` and `trace.finish()` yourself.

    Args:
        workflow_name: The name of the traced workflow, e.g. "kgp solve".
        trace_id: The ID of the trace. Generated when omitted.
        metadata: Optional dictionary attached to the exported trace, e.g. the config path.
        disabled: If True, a no-op trace is returned.
    """
    current_trace = GLOBAL_TRACE_PROVIDER.get_current_trace()
    if current_trace:
        logger.warning(
            "Trace already exists. Creating a new trace, but this is probably a mistake."
        )

    return GLOBAL_TRACE_PROVIDER.create_trace(
        name=workflow_name,
        trace_id=trace_id,
        metadata=metadata,
        disabled=disabled,
    )


def get_current_trace() -> Trace | None:
    return GLOBAL_TRACE_PROVIDER.get_current_trace()


def get_current_span() -> Span[Any] | None:
    return GLOBAL_TRACE_PROVIDER.get_current_span()


def solve_span(
    method: str,
    J: int,
    K: int,
    b: float,
    eps: float,
    parent: Trace | Span[Any] | None = None,
    disabled: bool = False,
) -> Span[SolveSpanData]:
    """Create a span around one solve. The caller fills in `converged`, `iterations` and
    `residual` on the span data before the span finishes."""
    return GLOBAL_TRACE_PROVIDER.create_span(
        span_data=SolveSpanData(method=method, J=J, K=K, b=b, eps=eps),
        parent=parent,
        disabled=disabled,
    )


def newton_step_span(
    iteration: int,
    parent: Trace | Span[Any] | None = None,
    disabled: bool = False,
) -> Span[NewtonStepSpanData]:
    return GLOBAL_TRACE_PROVIDER.create_span(
        span_data=NewtonStepSpanData(iteration=iteration),
        parent=parent,
        disabled=disabled,
    )


def stage_span(
    kind: str,
    index: int,
    label: str,
    parent: Trace | Span[Any] | None = None,
    disabled: bool = False,
) -> Span[StageSpanData]:
    """Create a span for one stage of a refinement schedule, an epsilon sweep or a search.

    Args:
        kind: "refinement", "continuation" or "search".
        index: Position of the stage in its sequence.
        label: Human-readable stage label, e.g. "J=8,K=8" or "eps=0.05".
    """
    return GLOBAL_TRACE_PROVIDER.create_span(
        span_data=StageSpanData(kind=kind, index=index, label=label),
        parent=parent,
        disabled=disabled,
    )


def hypothesis_check_span(
    name: str,
    parent: Trace | Span[Any] | None = None,
    disabled: bool = False,
) -> Span[HypothesisCheckSpanData]:
    return GLOBAL_TRACE_PROVIDER.create_span(
        span_data=HypothesisCheckSpanData(name=name),
        parent=parent,
        disabled=disabled,
    )
