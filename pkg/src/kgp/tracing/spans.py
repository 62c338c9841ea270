"""Spans: timed, nested sections of a traced run.

A span without a processor is unrecorded. It still becomes the current span while open, so
the spans nested under it are unrecorded as well, but it keeps no timestamps or error and
exports nothing.
"""

from __future__ import annotations

import contextvars
import time
from typing import Any, Generic, TypeVar

from typing_extensions import TypedDict

from . import util
from .logger import logger
from .processor_interface import TracingProcessor
from .scope import Scope
from .span_data import SpanData

TSpanData = TypeVar("TSpanData", bound=SpanData)

UNRECORDED_ID = "no-op"


class SpanError(TypedDict):
    message: str
    data: dict[str, Any] | None


class Span(Generic[TSpanData]):
    """One section of a run, e.g. a solve, a continuation stage or a Newton step.

    Used as a context manager the span is current inside the block; an exception escaping
    the block becomes its error unless one was set already.
    """

    __slots__ = (
        "span_data",
        "trace_id",
        "parent_id",
        "span_id",
        "started_at",
        "ended_at",
        "duration",
        "_processor",
        "_error",
        "_clock_start",
        "_token",
    )

    def __init__(
        self,
        span_data: TSpanData,
        trace_id: str = UNRECORDED_ID,
        parent_id: str | None = None,
        processor: TracingProcessor | None = None,
    ):
        self.span_data = span_data
        self.trace_id = trace_id
        self.parent_id = parent_id
        self.span_id = UNRECORDED_ID if processor is None else util.gen_span_id()
        self.started_at: str | None = None
        self.ended_at: str | None = None
        self.duration: float | None = None
        self._processor = processor
        self._error: SpanError | None = None
        self._clock_start: float | None = None
        self._token: contextvars.Token[Span[Any] | None] | None = None

    @property
    def recording(self) -> bool:
        return self._processor is not None

    @property
    def error(self) -> SpanError | None:
        return self._error

    def set_error(self, error: SpanError) -> None:
        if self._processor is not None:
            self._error = error

    def start(self, mark_as_current: bool = False) -> None:
        processor = self._processor
        if processor is not None:
            if self.started_at is not None:
                logger.warning("Span already started")
                return
            self.started_at = util.time_iso()
            self._clock_start = time.perf_counter()
            processor.on_span_start(self)
        if mark_as_current:
            self._token = Scope.set_current_span(self)

    def finish(self, reset_current: bool = False) -> None:
        processor = self._processor
        if processor is not None:
            if self.ended_at is not None:
                logger.warning("Span already finished")
                return
            self.ended_at = util.time_iso()
            if self._clock_start is not None:
                self.duration = time.perf_counter() - self._clock_start
            processor.on_span_end(self)
        if reset_current and self._token is not None:
            Scope.reset_current_span(self._token)
            self._token = None

    def __enter__(self) -> Span[TSpanData]:
        self.start(mark_as_current=True)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_val is not None and exc_type is not GeneratorExit and self._error is None:
            self.set_error(SpanError(message=str(exc_val), data={"type": exc_type.__name__}))
        # a generator closed in another context cannot reset its token
        self.finish(reset_current=exc_type is not GeneratorExit)

    def export(self) -> dict[str, Any] | None:
        if self._processor is None:
            return None
        return {
            "object": "trace.span",
            "id": self.span_id,
            "trace_id": self.trace_id,
            "parent_id": self.parent_id,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "duration_s": self.duration,
            "span_data": self.span_data.export(),
            "error": self._error,
        }
