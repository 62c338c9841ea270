import atexit

from .create import (
    get_current_span,
    get_current_trace,
    hypothesis_check_span,
    newton_step_span,
    solve_span,
    stage_span,
    trace,
)
from .processor_interface import TracingExporter, TracingProcessor
from .processors import LoggingSpanExporter, SimpleSpanProcessor, default_processor
from .setup import GLOBAL_TRACE_PROVIDER
from .span_data import (
    HypothesisCheckSpanData,
    NewtonStepSpanData,
    SolveSpanData,
    SpanData,
    StageSpanData,
)
from .spans import Span, SpanError
from .traces import Trace
from .util import gen_span_id, gen_trace_id

__all__ = [
    "add_trace_processor",
    "get_current_span",
    "get_current_trace",
    "hypothesis_check_span",
    "newton_step_span",
    "set_trace_processors",
    "set_tracing_disabled",
    "solve_span",
    "stage_span",
    "trace",
    "Trace",
    "Span",
    "SpanError",
    "SpanData",
    "HypothesisCheckSpanData",
    "NewtonStepSpanData",
    "SolveSpanData",
    "StageSpanData",
    "TracingExporter",
    "TracingProcessor",
    "LoggingSpanExporter",
    "SimpleSpanProcessor",
    "gen_span_id",
    "gen_trace_id",
]


def add_trace_processor(span_processor: TracingProcessor) -> None:
    """Adds a processor that receives every trace and span."""
    GLOBAL_TRACE_PROVIDER.register_processor(span_processor)


def set_trace_processors(processors: list[TracingProcessor]) -> None:
    """Replaces the current list of processors, the default logging processor included."""
    GLOBAL_TRACE_PROVIDER.set_processors(processors)


def set_tracing_disabled(disabled: bool) -> None:
    GLOBAL_TRACE_PROVIDER.set_disabled(disabled)


add_trace_processor(default_processor())

atexit.register(GLOBAL_TRACE_PROVIDER.shutdown)
