from __future__ import annotations

import contextvars
from typing import Any

from . import util
from .logger import logger
from .processor_interface import TracingProcessor
from .scope import Scope

UNRECORDED_ID = "no-op"


class Trace:
    """The root of a traced run: one CLI command or one library solve.

    A trace without a processor is a placeholder used while tracing is disabled. It becomes
    current like any other trace, so every span opened under it is unrecorded.
    """

    __slots__ = ("name", "trace_id", "metadata", "_processor", "_started", "_finished", "_token")

    def __init__(
        self,
        name: str = UNRECORDED_ID,
        trace_id: str | None = None,
        metadata: dict[str, Any] | None = None,
        processor: TracingProcessor | None = None,
    ):
        self.name = name
        if processor is None:
            self.trace_id = UNRECORDED_ID
        else:
            self.trace_id = trace_id or util.gen_trace_id()
        self.metadata = metadata
        self._processor = processor
        self._started = False
        self._finished = False
        self._token: contextvars.Token[Trace | None] | None = None

    @property
    def recording(self) -> bool:
        return self._processor is not None

    def start(self, mark_as_current: bool = False) -> None:
        if self._started:
            return
        self._started = True
        if self._processor is not None:
            self._processor.on_trace_start(self)
        if mark_as_current:
            self._token = Scope.set_current_trace(self)

    def finish(self, reset_current: bool = False) -> None:
        if not self._started or self._finished:
            return
        self._finished = True
        if self._processor is not None:
            self._processor.on_trace_end(self)
        if reset_current and self._token is not None:
            Scope.reset_current_trace(self._token)
            self._token = None

    def __enter__(self) -> Trace:
        if self._started:
            if self._token is None:
                logger.error("Trace already started but no context token set")
            return self
        self.start(mark_as_current=True)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.finish(reset_current=exc_type is not GeneratorExit)

    def export(self) -> dict[str, Any] | None:
        if self._processor is None:
            return None
        return {
            "object": "trace",
            "id": self.trace_id,
            "workflow_name": self.name,
            "metadata": self.metadata,
        }
