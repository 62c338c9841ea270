import abc
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .spans import Span
    from .traces import Trace


class TracingProcessor(abc.ABC):
    """Receives every trace and span of a solve as it starts and finishes."""

    @abc.abstractmethod
    def on_trace_start(self, trace: "Trace") -> None:
        pass

    @abc.abstractmethod
    def on_trace_end(self, trace: "Trace") -> None:
        pass

    @abc.abstractmethod
    def on_span_start(self, span: "Span[Any]") -> None:
        pass

    @abc.abstractmethod
    def on_span_end(self, span: "Span[Any]") -> None:
        """Called when a span is finished. Should not block or raise exceptions."""
        pass

    @abc.abstractmethod
    def shutdown(self) -> None:
        """Called when the interpreter exits."""
        pass

    @abc.abstractmethod
    def force_flush(self) -> None:
        pass


class TracingExporter(abc.ABC):
    """Exports finished traces and spans, e.g. to a logger or a file."""

    @abc.abstractmethod
    def export(self, items: list["Trace | Span[Any]"]) -> None:
        pass
