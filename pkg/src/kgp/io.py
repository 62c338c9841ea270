"""File formats: the coefficient CSV, plain CSV tables and JSON reports.

Every float is written with 17 significant digits so that a file read back reproduces the
coefficients bit for bit. Writes go to a temporary file in the target directory first and are
renamed into place.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import UserError
from .spectral import SpectralField, Truncation

COEFF_MAGIC = "kg-periodic coeffs v1"
COEFF_COLUMNS = ("j", "k", "re_u", "im_u", "re_v", "im_v")

_HEADER_RE = re.compile(
    r"^#\s*kg-periodic coeffs v1,\s*J=(?P<J>\d+),\s*K=(?P<K>\d+),"
    r"\s*b=(?P<b>[^,]+),\s*eps=(?P<eps>[^,\s]+)\s*$"
)


def format_float(value: float) -> str:
    return "%.17g" % value


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_csv(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comment: str | None = None,
) -> Path:
    lines = []
    if comment is not None:
        lines.append(f"# {comment}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(_format_cell(cell) for cell in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Reads a CSV written by `write_csv`: comment lines skipped, one header row, float cells."""
    path = Path(path)
    try:
        lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    except OSError as e:
        raise UserError(f"cannot read {path}: {e}") from e
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise UserError(f"{path} has no header row")
    columns = lines[0].split(",")
    try:
        data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError as e:
        raise UserError(f"{path}: non-numeric cell ({e})") from e
    return columns, data.reshape(-1, len(columns))


def _json_scalar(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_json(path: str | Path, payload: Any) -> Path:
    """Numpy scalars are written as their Python values; any other non-JSON object raises
    TypeError and leaves the target untouched."""
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_scalar)
    return atomic_write_text(path, text + "\n")


@dataclass(frozen=True, eq=False)
class CoefficientFile:
    u: SpectralField
    v: SpectralField
    b: float
    eps: float

    @property
    def trunc(self) -> Truncation:
        return self.u.trunc


def write_coefficients(
    path: str | Path, u: SpectralField, v: SpectralField, b: float, eps: float
) -> Path:
    if u.trunc != v.trunc:
        raise UserError(f"u and v live on different truncations: {u.trunc} vs {v.trunc}")
    trunc = u.trunc
    header = (
        f"{COEFF_MAGIC}, J={trunc.J}, K={trunc.K}, b={format_float(b)}, eps={format_float(eps)}"
    )
    rows = []
    for j in range(1, trunc.J + 1):
        for k in range(trunc.K + 1):
            a, c = u.coeffs[j - 1, k], v.coeffs[j - 1, k]
            rows.append((j, k, float(a.real), float(a.imag), float(c.real), float(c.imag)))
    return write_csv(path, COEFF_COLUMNS, rows, comment=header)


def read_coefficients(path: str | Path) -> CoefficientFile:
    """Reads a coefficient file. Rows that are absent are zero."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UserError(f"cannot read coefficient file {path}: {e}") from e
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    match = _HEADER_RE.match(lines[0]) if lines else None
    if match is None:
        raise UserError(f"{path}: missing '# {COEFF_MAGIC}, J=.., K=.., b=.., eps=..' header")
    try:
        trunc = Truncation(int(match["J"]), int(match["K"]))
        b = float(match["b"])
        eps = float(match["eps"])
    except ValueError as e:
        raise UserError(f"{path}: bad header value ({e})") from e

    u = np.zeros(trunc.shape, dtype=np.complex128)
    v = np.zeros(trunc.shape, dtype=np.complex128)
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#") or line.split(",")[0] == "j":
            continue
        cells = line.split(",")
        if len(cells) != len(COEFF_COLUMNS):
            raise UserError(f"{path}:{lineno}: expected {len(COEFF_COLUMNS)} columns")
        try:
            j, k = int(float(cells[0])), int(float(cells[1]))
            re_u, im_u, re_v, im_v = (float(c) for c in cells[2:])
        except ValueError as e:
            raise UserError(f"{path}:{lineno}: {e}") from e
        if not (1 <= j <= trunc.J and 0 <= k <= trunc.K):
            raise UserError(f"{path}:{lineno}: mode ({j}, {k}) outside {trunc}")
        if k == 0 and (im_u != 0.0 or im_v != 0.0):
            raise UserError(f"{path}:{lineno}: k = 0 coefficients must be real")
        if not all(math.isfinite(x) for x in (re_u, im_u, re_v, im_v)):
            raise UserError(f"{path}:{lineno}: non-finite coefficient")
        u[j - 1, k] = complex(re_u, im_u)
        v[j - 1, k] = complex(re_v, im_v)
    return CoefficientFile(SpectralField(trunc, u), SpectralField(trunc, v), b, eps)
