"""JSON configuration parsing and surface export (csv, 16-bit pgm, obj)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError, RfisError, ValidationError
from .grid import AddressMaps, InterpolationData, build_address_maps, uniform_data
from .partition import Partition, build_partition
from .surface import BilinearRfis, SampledSurface, build_rfis

FIELDS = ("N", "K", "z", "s", "xprime_idx", "yprime_idx", "partition")
BUNDLED = {
    "paper-example": "paper-example.json",
    "paper-example-original": "paper-example-original.json",
}


@dataclass
class RfisConfig:
    N: int
    K: int
    z: np.ndarray
    s: np.ndarray
    xprime_idx: list
    yprime_idx: list
    partition_cells: list  # list of lists of 1-based (i, j)
    data: InterpolationData
    maps: AddressMaps
    rfis: BilinearRfis
    partition: Partition
    name: str | None = None


def _field_line(text, key):
    """Line of the first occurrence of ``"key"`` in the document, if any."""
    needle = json.dumps(key)
    for n, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return n
    return None


def _int(doc, key, text):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"expected an integer, got {v!r}", _field_line(text, key), key)
    return v


def _matrix(doc, key, text, shape):
    v = doc[key]
    line = _field_line(text, key)
    if not isinstance(v, list) or not all(isinstance(row, list) for row in v):
        raise ParseError("expected a list of rows", line, key)
    for r, row in enumerate(v):
        for c, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ParseError(f"entry [{r}][{c}] = {x!r} is not a number", line, key)
    try:
        a = np.array(v, dtype=float)
    except ValueError:
        raise ParseError("rows have different lengths", line, key) from None
    if a.shape != shape:
        raise ValidationError(f"shape {a.shape} does not match (N+1, N+1) = {shape}", key)
    return a


def _index_list(doc, key, text):
    v = doc[key]
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ParseError("expected a list of integers", _field_line(text, key), key)
    return v


def _parts(doc, text):
    v = doc["partition"]
    line = _field_line(text, "partition")
    if not isinstance(v, list):
        raise ParseError("expected a list of parts", line, "partition")
    parts = []
    for r, part in enumerate(v, start=1):
        if not isinstance(part, list):
            raise ParseError(f"part {r} is not a list of [i, j] cells", line, "partition")
        cells = []
        for cell in part:
            if (
                not isinstance(cell, list)
                or len(cell) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in cell)
            ):
                raise ParseError(f"part {r}: {cell!r} is not an [i, j] integer pair", line, "partition")
            cells.append(tuple(cell))
        parts.append(cells)
    return parts


def parse_config(text: str, name: str | None = None) -> RfisConfig:
    """Parse and structurally validate a JSON configuration document.

    Hypothesis checks (steadiness, compatibility, uniform sums, matchable
    conditions) are left to the caller so that a document violating them can
    still be loaded and reported on.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object", 1)
    for key in FIELDS:
        if key not in doc:
            raise ParseError("missing required field", None, key)

    N = _int(doc, "N", text)
    K = _int(doc, "K", text)
    if N < 2:
        raise ValidationError(f"N = {N} must be >= 2", "N")
    if K < 2:
        raise ValidationError(f"K = {K} must be >= 2", "K")
    z = _matrix(doc, "z", text, (N + 1, N + 1))
    s = _matrix(doc, "s", text, (N + 1, N + 1))
    xp = _index_list(doc, "xprime_idx", text)
    yp = _index_list(doc, "yprime_idx", text)
    parts = _parts(doc, text)

    stage = "z"
    try:
        data = uniform_data(z)
        stage = "xprime_idx/yprime_idx"
        maps = build_address_maps(data, xp, yp)
        stage = "s"
        rfis = build_rfis(data, maps, s, K)
        stage = "partition"
        partition = build_partition(parts, N)
    except RfisError as exc:
        if stage.startswith("xprime"):
            stage = "yprime_idx" if str(exc).startswith("yprime_idx") else "xprime_idx"
        raise ValidationError(str(exc), stage, exc) from exc
    return RfisConfig(N, K, z, s, xp, yp, parts, data, maps, rfis, partition, name)


def resolve_config_path(name: str):
    """A filesystem path, or the name of a bundled fixture (with or without ``.json``)."""
    p = Path(name)
    if p.exists():
        return p
    key = name[:-5] if name.endswith(".json") else name
    if key in BUNDLED and p.parent == Path("."):
        return resources.files("rfis") / "data" / BUNDLED[key]
    raise IoError(f"no such configuration file or bundled fixture: {name!r}")


def load_config(name: str) -> RfisConfig:
    path = resolve_config_path(name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {name!r}: {exc}") from exc
    return parse_config(text, name)


# -- export ----------------------------------------------------------------


def surface_csv(surface: SampledSurface) -> str:
    """Header ``x,y,f`` then one row per node, ``x`` major, values at full precision."""
    c = surface.coords
    v = surface.values
    lines = ["x,y,f"]
    for k in range(c.size):
        xs = repr(float(c[k]))
        lines.extend(f"{xs},{float(c[l])!r},{float(v[k, l])!r}" for l in range(c.size))
    return "\n".join(lines) + "\n"


def read_surface_csv(text: str):
    """Inverse of :func:`surface_csv`: ``(x, y, f)`` arrays of the rows in order."""
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != "x,y,f":
        raise ParseError("missing 'x,y,f' header", 1)
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 3 columns, got {len(parts)}", n)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), n) from exc
    a = np.array(rows, dtype=float).reshape(-1, 3)
    return a[:, 0], a[:, 1], a[:, 2]


def surface_pgm16(surface: SampledSurface) -> bytes:
    """Binary 16-bit P5 image, ``x`` to the right and ``y`` up, min-max normalized.

    A constant surface has no range to normalize; it is written as mid-gray
    and the comment line says so.
    """
    v = surface.values
    lo, hi = float(v.min()), float(v.max())
    img = v.T[::-1]
    if hi > lo:
        pix = np.rint((img - lo) / (hi - lo) * 65535.0)
        comment = f"# min={lo!r} max={hi!r}"
    else:
        pix = np.full(img.shape, 32768.0)
        comment = f"# min={lo!r} max={hi!r} constant surface written as mid-gray"
    h, w = pix.shape
    header = f"P5\n{comment}\n{w} {h}\n65535\n".encode("ascii")
    return header + pix.astype(">u2").tobytes()


def read_pgm16(data: bytes):
    """``(pixels, comment)`` of a file written by :func:`surface_pgm16`."""
    lines = data.split(b"\n", 4)
    if len(lines) < 5 or lines[0] != b"P5":
        raise ParseError("not a binary P5 image", 1)
    w, h = (int(t) for t in lines[2].split())
    pix = np.frombuffer(lines[4], dtype=">u2", count=w * h).reshape(h, w)
    return pix, lines[1].decode("ascii")


def surface_obj(surface: SampledSurface) -> str:
    """Wavefront OBJ: one vertex per node, two counterclockwise triangles per cell."""
    c = surface.coords
    v = surface.values
    n = c.size
    out = [f"# {n * n} vertices, {2 * (n - 1) ** 2} faces"]
    for k in range(n):
        out.extend(f"v {float(c[k])!r} {float(c[l])!r} {float(v[k, l])!r}" for l in range(n))
    for k in range(n - 1):
        for l in range(n - 1):
            a = k * n + l + 1
            b = (k + 1) * n + l + 1
            out.append(f"f {a} {b} {b + 1}")
            out.append(f"f {a} {b + 1} {a + 1}")
    return "\n".join(out) + "\n"


FORMATS = {"csv": surface_csv, "pgm16": surface_pgm16, "obj": surface_obj}


def render_surface(surface: SampledSurface, fmt: str):
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {sorted(FORMATS)}")
    return FORMATS[fmt](surface)


def export_surface(surface: SampledSurface, fmt: str, path) -> Path:
    """Write the surface to ``path`` in ``fmt`` (csv, pgm16 or obj)."""
    payload = render_surface(surface, fmt)
    path = Path(path)
    try:
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload)
    except OSError as exc:
        raise IoError(f"cannot write {str(path)!r}: {exc}") from exc
    return path


def json_safe(obj):
    """Recursively convert numpy values and non-finite floats for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, np.generic):
        return json_safe(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj
