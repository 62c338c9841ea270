from __future__ import annotations

import json
import logging
from typing import Any

import pytest

from kgp._newton_impl import TraceCtxManager
from kgp.tracing import (
    LoggingSpanExporter,
    SimpleSpanProcessor,
    Span,
    Trace,
    TracingExporter,
    get_current_span,
    get_current_trace,
    hypothesis_check_span,
    newton_step_span,
    solve_span,
    stage_span,
    trace,
)
from kgp.tracing.spans import SpanError
from kgp.util._error_tracing import attach_error_to_current_span, attach_error_to_span

from .testing_processor import (
    assert_no_spans,
    assert_no_traces,
    fetch_events,
    fetch_ordered_spans,
    fetch_span_types,
    fetch_traces,
)

### HELPERS


def standard_span_checks(
    span: Span[Any], trace_id: str, parent_id: str | None, span_type: str
) -> None:
    assert span.span_id is not None
    assert span.trace_id == trace_id
    assert span.parent_id == parent_id
    assert span.started_at is not None
    assert span.ended_at is not None
    assert span.span_data.type == span_type


def standard_trace_checks(trace: Trace, name_check: str | None = None) -> None:
    assert trace.trace_id is not None

    if name_check:
        assert trace.name == name_check


### TESTS


def simple_tracing():
    x = trace("test")
    x.start()

    span_1 = solve_span("newton", 4, 4, 1.0, 0.1, parent=x)
    span_1.start()
    span_1.finish()

    span_2 = stage_span("continuation", 0, "eps=0.1", parent=x)
    span_2.start()

    span_3 = newton_step_span(1, parent=span_2)
    span_3.start()
    span_3.finish()

    span_2.finish()

    x.finish()


def test_simple_tracing() -> None:
    simple_tracing()

    traces = fetch_traces()
    assert len(traces) == 1
    standard_trace_checks(traces[0], name_check="test")
    trace_id = traces[0].trace_id

    spans = {s.span_data.type: s for s in fetch_ordered_spans()}
    assert len(spans) == 3
    standard_span_checks(spans["solve"], trace_id, None, "solve")
    standard_span_checks(spans["stage"], trace_id, None, "stage")
    standard_span_checks(spans["newton_step"], trace_id, spans["stage"].span_id, "newton_step")


def test_ctxmanager_spans() -> None:
    with trace(workflow_name="test", trace_id="trace_123") as t:
        with stage_span("refinement", 0, "J=4,K=4") as outer:
            assert get_current_span() is outer
            with solve_span("newton", 4, 4, 1.0, 0.0) as inner:
                assert get_current_span() is inner
            assert get_current_span() is outer

        with hypothesis_check_span("h1"):
            pass
        assert get_current_trace() is t

    assert get_current_trace() is None
    spans = {s.span_data.type: s for s in fetch_ordered_spans()}
    assert sorted(spans) == ["hypothesis_check", "solve", "stage"]
    standard_span_checks(spans["stage"], "trace_123", None, "stage")
    standard_span_checks(spans["solve"], "trace_123", spans["stage"].span_id, "solve")
    standard_span_checks(spans["hypothesis_check"], "trace_123", None, "hypothesis_check")


def test_spans_with_setters() -> None:
    with trace(workflow_name="test"):
        with solve_span("newton", 8, 8, 1.0, 0.05) as span:
            span.span_data.converged = True
            span.span_data.iterations = 4
            span.span_data.residual = 1e-12

    exported = fetch_ordered_spans()[0].export()
    assert exported is not None
    assert exported["span_data"] == {
        "type": "solve",
        "method": "newton",
        "J": 8,
        "K": 8,
        "b": 1.0,
        "eps": 0.05,
        "converged": True,
        "iterations": 4,
        "residual": 1e-12,
    }
    assert set(exported) == {
        "object",
        "id",
        "trace_id",
        "parent_id",
        "started_at",
        "ended_at",
        "duration_s",
        "span_data",
        "error",
    }
    assert exported["object"] == "trace.span"
    assert exported["duration_s"] >= 0


def test_trace_export() -> None:
    with trace(workflow_name="kgp solve", metadata={"config": "run.json"}):
        pass
    assert fetch_traces()[0].export() == {
        "object": "trace",
        "id": fetch_traces()[0].trace_id,
        "workflow_name": "kgp solve",
        "metadata": {"config": "run.json"},
    }


def test_disabled_tracing():
    with trace(workflow_name="test", trace_id="123", disabled=True):
        with solve_span("newton", 2, 2, 1.0, 0.0):
            with newton_step_span(1):
                pass
    assert_no_traces()


def test_enabled_trace_disabled_span():
    with trace(workflow_name="test", trace_id="trace_123"):
        with stage_span("search", 0, "mode=(1,1)"):
            with solve_span("newton", 2, 2, 1.0, 0.0, disabled=True):
                with newton_step_span(1):
                    pass

    assert fetch_span_types() == ["stage"]


def test_spans_outside_a_trace_are_not_recorded():
    with solve_span("newton", 2, 2, 1.0, 0.0) as span:
        span.span_data.converged = True
    assert span.export() is None
    assert_no_spans()


def test_start_and_end_called_manual():
    simple_tracing()

    events = fetch_events()

    assert events == [
        "trace_start",
        "span_start",  # span_1
        "span_end",  # span_1
        "span_start",  # span_2
        "span_start",  # span_3
        "span_end",  # span_3
        "span_end",  # span_2
        "trace_end",
    ]


def test_start_and_end_called_ctxmanager():
    with trace(workflow_name="test", trace_id="123"):
        with stage_span("refinement", 0, "J=2,K=2"):
            with newton_step_span(1):
                pass

        with stage_span("refinement", 1, "J=4,K=4"):
            pass

    events = fetch_events()

    assert events == [
        "trace_start",
        "span_start",
        "span_start",
        "span_end",
        "span_end",
        "span_start",
        "span_end",
        "trace_end",
    ]


def test_noop_span_doesnt_record():
    with trace(workflow_name="test", disabled=True) as t:
        with stage_span("search", 0, "x") as span:
            span.set_error(SpanError(message="test", data={}))

    assert_no_traces()

    assert t.export() is None
    assert span.export() is None
    assert span.started_at is None
    assert span.ended_at is None
    assert span.error is None


def test_multiple_span_start_finish_doesnt_crash():
    with trace(workflow_name="test", trace_id="123"):
        with stage_span("search", 0, "x") as span:
            span.start()

        span.finish()


def test_noop_parent_is_noop_child():
    tr = trace(workflow_name="test", disabled=True)

    span = stage_span("search", 0, "x", parent=tr)
    span.start()
    span.finish()

    assert span.export() is None

    span_2 = newton_step_span(1, parent=span)
    span_2.start()
    span_2.finish()

    assert span_2.export() is None


def test_recording_follows_the_parent():
    with trace(workflow_name="test") as t:
        with stage_span("search", 0, "x") as recorded:
            assert t.recording and recorded.recording
            with solve_span("newton", 2, 2, 1.0, 0.0, disabled=True) as skipped:
                with newton_step_span(1) as child:
                    assert get_current_span() is child
    assert not skipped.recording and not child.recording
    assert skipped.span_id == child.span_id == "no-op"
    assert fetch_span_types() == ["stage"]


def test_finishing_a_trace_twice_reports_once():
    t = trace(workflow_name="test")
    t.start(mark_as_current=True)
    t.finish(reset_current=True)
    t.finish(reset_current=True)
    assert fetch_events() == ["trace_start", "trace_end"]
    assert get_current_trace() is None


def test_exception_inside_span_sets_error():
    with pytest.raises(ValueError):
        with trace(workflow_name="test"):
            with newton_step_span(1):
                raise ValueError("boom")

    span = fetch_ordered_spans()[0]
    assert span.error == {"message": "boom", "data": {"type": "ValueError"}}


def test_existing_error_is_kept_on_exception():
    with pytest.raises(ValueError):
        with trace(workflow_name="test"):
            with solve_span("newton", 2, 2, 1.0, 0.0) as span:
                attach_error_to_span(span, SpanError(message="Max iterations exceeded", data=None))
                raise ValueError("later")

    assert fetch_ordered_spans()[0].error["message"] == "Max iterations exceeded"


def test_attach_error_to_current_span():
    with trace(workflow_name="test"):
        with stage_span("continuation", 0, "eps=0.1"):
            attach_error_to_current_span(SpanError(message="Continuation stage failed", data=None))

    assert fetch_ordered_spans()[0].error["message"] == "Continuation stage failed"


def test_trace_ctx_manager_reuses_the_current_trace():
    with trace(workflow_name="outer"):
        with TraceCtxManager("inner") as manager:
            assert manager.trace is None
            assert get_current_trace().name == "outer"

    with TraceCtxManager("kgp solve", metadata={"J": 4}) as manager:
        assert manager.trace is not None
        assert get_current_trace() is manager.trace
    assert get_current_trace() is None
    assert [t.name for t in fetch_traces()] == ["outer", "kgp solve"]


def test_logging_exporter_writes_json_lines(caplog):
    processor = SimpleSpanProcessor(LoggingSpanExporter())
    with caplog.at_level(logging.DEBUG, logger="kgp.tracing"):
        with trace(workflow_name="test") as t:
            with hypothesis_check_span("h2") as span:
                span.span_data.status = "pass"
        processor.on_trace_start(t)
        processor.on_span_end(span)

    payloads = [json.loads(r.getMessage()) for r in caplog.records if r.getMessage().startswith("{")]
    assert any(p.get("object") == "trace" for p in payloads)
    assert any(
        p.get("object") == "trace.span" and p["span_data"]["status"] == "pass" for p in payloads
    )


class FailingExporter(TracingExporter):
    def export(self, items):
        raise RuntimeError("disk full")


def test_export_failures_are_not_fatal(caplog):
    processor = SimpleSpanProcessor(FailingExporter())
    with trace(workflow_name="test") as t:
        with newton_step_span(1) as span:
            pass
    with caplog.at_level(logging.ERROR, logger="kgp.tracing"):
        processor.on_trace_start(t)
        processor.on_span_end(span)
    assert sum("export failed" in r.getMessage() for r in caplog.records) == 2
