from __future__ import annotations

import threading
from typing import Any

from .. import _debug
from .logger import logger
from .processor_interface import TracingProcessor
from .scope import Scope
from .spans import Span, TSpanData
from .traces import Trace


class SynchronousMultiTracingProcessor(TracingProcessor):
    """Forwards every call to the registered processors, in order of registration."""

    def __init__(self):
        # A tuple is swapped, never mutated, so iteration needs no lock
        self._processors: tuple[TracingProcessor, ...] = ()
        self._lock = threading.Lock()

    def add_tracing_processor(self, tracing_processor: TracingProcessor) -> None:
        with self._lock:
            self._processors += (tracing_processor,)

    def set_processors(self, processors: list[TracingProcessor]) -> None:
        with self._lock:
            self._processors = tuple(processors)

    def on_trace_start(self, trace: Trace) -> None:
        for processor in self._processors:
            processor.on_trace_start(trace)

    def on_trace_end(self, trace: Trace) -> None:
        for processor in self._processors:
            processor.on_trace_end(trace)

    def on_span_start(self, span: Span[Any]) -> None:
        for processor in self._processors:
            processor.on_span_start(span)

    def on_span_end(self, span: Span[Any]) -> None:
        for processor in self._processors:
            processor.on_span_end(span)

    def shutdown(self) -> None:
        for processor in self._processors:
            logger.debug(f"Shutting down trace processor {processor}")
            processor.shutdown()

    def force_flush(self) -> None:
        for processor in self._processors:
            processor.force_flush()


class TraceProvider:
    def __init__(self):
        self._multi_processor = SynchronousMultiTracingProcessor()
        self._disabled = _debug.DISABLE_TRACING

    def register_processor(self, processor: TracingProcessor) -> None:
        self._multi_processor.add_tracing_processor(processor)

    def set_processors(self, processors: list[TracingProcessor]) -> None:
        self._multi_processor.set_processors(processors)

    def get_current_trace(self) -> Trace | None:
        return Scope.get_current_trace()

    def get_current_span(self) -> Span[Any] | None:
        return Scope.get_current_span()

    def set_disabled(self, disabled: bool) -> None:
        self._disabled = disabled

    def create_trace(
        self,
        name: str,
        trace_id: str | None = None,
        metadata: dict[str, Any] | None = None,
        disabled: bool = False,
    ) -> Trace:
        if self._disabled or disabled:
            logger.debug(f"Tracing is disabled. Not recording trace {name}")
            return Trace()

        trace = Trace(name, trace_id, metadata, self._multi_processor)
        logger.debug(f"Creating trace {name} with id {trace.trace_id}")
        return trace

    def create_span(
        self,
        span_data: TSpanData,
        parent: Trace | Span[Any] | None = None,
        disabled: bool = False,
    ) -> Span[TSpanData]:
        """A recorded span under `parent`, or under the current span and trace. Spans created
        while tracing is disabled, outside any trace or below an unrecorded parent are
        unrecorded."""
        if self._disabled or disabled:
            return Span(span_data)

        if parent is None:
            current_trace = Scope.get_current_trace()
            if current_trace is None:
                # Library calls made outside `trace()` are simply not recorded
                logger.debug(f"No active trace, not recording {span_data.type} span")
                return Span(span_data)
            current_span = Scope.get_current_span()
            if current_span is not None:
                parent = current_span
            else:
                parent = current_trace

        if not parent.recording:
            return Span(span_data)
        parent_id = parent.span_id if isinstance(parent, Span) else None
        return Span(span_data, parent.trace_id, parent_id, self._multi_processor)

    def shutdown(self) -> None:
        try:
            logger.debug("Shutting down trace provider")
            self._multi_processor.shutdown()
        except Exception as e:
            logger.error(f"Error shutting down trace provider: {e}")


GLOBAL_TRACE_PROVIDER = TraceProvider()
