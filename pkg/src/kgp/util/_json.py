from __future__ import annotations

from pydantic import TypeAdapter, ValidationError
from typing_extensions import TypeVar

from ..exceptions import UserError
from ..tracing import SpanError
from ._error_tracing import attach_error_to_current_span

T = TypeVar("T")


def _format_errors(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def validate_json(json_str: str | bytes, type_adapter: TypeAdapter[T], source: str) -> T:
    """Parse and validate a JSON document, turning every failure into a UserError that names
    the offending field."""
    try:
        return type_adapter.validate_json(json_str)
    except ValidationError as e:
        attach_error_to_current_span(
            SpanError(
                message="Invalid JSON configuration",
                data={"source": source},
            )
        )
        raise UserError(f"invalid configuration in {source}: {_format_errors(e)}") from e
