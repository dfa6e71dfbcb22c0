"""Plain-text formats for fields, series and manifests.

GridField CSV:     header ``# h=<dec> n=<int>``, rows ``index,re,im``.
SpectralField CSV: header ``# h=<dec> n=<int> convention=forward-h``, rows ``k,re,im`` with signed k.
Numbers are written with 17 significant digits so a round trip is exact.
"""

import json
import math
import re
from pathlib import Path
from typing import Any

import aiofiles
import numpy as np

from dnls_lab.lattice import GridField
from dnls_lab.spectral import SpectralField

CONVENTION = "forward-h"
_HEADER = re.compile(r"#\s*h=(?P<h>\S+)\s+n=(?P<n>\d+)(?:\s+convention=(?P<conv>\S+))?")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex | np.complexfloating):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_finite_or_none(v) for v in value]
    return value


def to_json(data: dict[str, Any]) -> str:
    return json.dumps(_finite_or_none(data), indent=2, default=_json_default) + "\n"


def format_grid_csv(f: GridField) -> str:
    lines = [f"# h={fmt(f.h)} n={f.n_points}"]
    lines.extend(f"{g},{fmt(v.real)},{fmt(v.imag)}" for g, v in enumerate(f.values))
    return "\n".join(lines) + "\n"


def _parse_header(text: str) -> tuple[float, int, str | None, list[str]]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("Empty field file")
    match = _HEADER.match(lines[0])
    if not match:
        raise ValueError(f"Malformed field header: {lines[0]!r}")
    return float(match["h"]), int(match["n"]), match["conv"], lines[1:]


def _parse_rows(rows: list[str], n: int) -> tuple[np.ndarray, np.ndarray]:
    if len(rows) != n:
        raise ValueError(f"Expected {n} rows, found {len(rows)}")
    table = np.array([[float(x) for x in row.split(",")] for row in rows])
    return table[:, 0].astype(int), table[:, 1] + 1j * table[:, 2]


def parse_grid_csv(text: str) -> GridField:
    h, n, _, rows = _parse_header(text)
    index, values = _parse_rows(rows, n)
    out = np.zeros(n, dtype=np.complex128)
    out[index] = values
    return GridField(h, out)


def format_spectral_csv(u: SpectralField) -> str:
    lines = [f"# h={fmt(u.h)} n={u.n_points} convention={CONVENTION}"]
    lines.extend(f"{k},{fmt(c.real)},{fmt(c.imag)}" for k, c in zip(u.mode_index, u.coeffs, strict=True))
    return "\n".join(lines) + "\n"


def parse_spectral_csv(text: str) -> SpectralField:
    h, n, convention, rows = _parse_header(text)
    if convention not in (None, CONVENTION):
        raise ValueError(f"Unsupported spectral convention: {convention}")
    index, coeffs = _parse_rows(rows, n)
    out = np.zeros(n, dtype=np.complex128)
    out[index % n] = coeffs
    return SpectralField(h, out)


def format_table(columns: list[str], rows: list[list[Any]]) -> str:
    """CSV with a header row; floats at full precision."""
    body = [",".join(columns)]
    for row in rows:
        body.append(",".join(fmt(v) if isinstance(v, float | np.floating) else str(v) for v in row))
    return "\n".join(body) + "\n"


async def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(text)
    return path


async def write_json(path: str | Path, data: dict[str, Any]) -> Path:
    return await write_text(path, to_json(data))


async def write_index(directory: str | Path, entries: list[dict[str, Any]]) -> Path:
    """Merge per-point results into ``index.json``, sorted by their ``point`` key."""
    ordered = sorted(entries, key=lambda e: str(e.get("point", "")))
    return await write_json(Path(directory) / "index.json", {"points": ordered})


def xi_slug(xi: tuple[float, float], stencil_order: int | None = None) -> str:
    slug = f"xi1={xi[0]:g}_xi2={xi[1]:g}"
    return f"{slug}_order={stencil_order}" if stencil_order else slug


def point_slug(xi: tuple[float, float], h: float, stencil_order: int | None = None) -> str:
    slug = f"{xi_slug(xi)}_h={h:g}"
    return f"{slug}_order={stencil_order}" if stencil_order else slug
