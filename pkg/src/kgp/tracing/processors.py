from __future__ import annotations

import json
import threading
from typing import Any

from .logger import logger
from .processor_interface import TracingExporter, TracingProcessor
from .spans import Span
from .traces import Trace


class LoggingSpanExporter(TracingExporter):
    """Writes each finished trace and span as one JSON line to the `kgp.tracing` logger."""

    def export(self, items: list[Trace | Span[Any]]) -> None:
        for item in items:
            payload = item.export()
            if payload is None:
                continue
            logger.debug(json.dumps(payload, default=str, sort_keys=True))


class SimpleSpanProcessor(TracingProcessor):
    """Exports traces when they start and spans when they end, on the calling thread."""

    def __init__(self, exporter: TracingExporter):
        self._exporter = exporter
        self._lock = threading.Lock()

    def on_trace_start(self, trace: Trace) -> None:
        self._export(trace)

    def on_trace_end(self, trace: Trace) -> None:
        pass

    def on_span_start(self, span: Span[Any]) -> None:
        pass

    def on_span_end(self, span: Span[Any]) -> None:
        self._export(span)

    def _export(self, item: Trace | Span[Any]) -> None:
        try:
            with self._lock:
                self._exporter.export([item])
        except Exception as e:
            logger.error(f"[non-fatal] Tracing: export failed: {e}")

    def shutdown(self) -> None:
        pass

    def force_flush(self) -> None:
        pass


_global_exporter = LoggingSpanExporter()
_global_processor = SimpleSpanProcessor(_global_exporter)


def default_exporter() -> LoggingSpanExporter:
    return _global_exporter


def default_processor() -> SimpleSpanProcessor:
    """The default processor, which logs every finished span at DEBUG."""
    return _global_processor
