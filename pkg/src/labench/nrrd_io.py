"""Attached-header NRRD reading and writing.

Supports the subset the challenge data actually uses: 3D grids, sample
types ``unsigned char`` / ``unsigned short`` / ``float``, ``raw`` or
``gzip`` encodings, little-endian payloads, and geometry given either as
``spacings`` or as diagonal ``space directions``. Unrecognized header
fields are ignored; detached headers, big-endian data and non-orthogonal
axes are rejected.

The payload raster order is x-fastest, matching :mod:`labench.grids`.
"""

from __future__ import annotations

import gzip
import re
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    IoFailure,
    MalformedHeader,
    MissingHeaderField,
    NonPositiveSpacing,
    NotNrrdFile,
    UnsupportedDimension,
    UnsupportedEncoding,
    UnsupportedEndian,
    UnsupportedSpaceDirections,
    UnsupportedType,
)
from .grids import Grid, Mask, Volume

_MAGIC = re.compile(rb"^NRRD000[1-5]$")

_TYPE_TO_DTYPE = {
    "unsigned char": np.dtype(np.uint8),
    "uchar": np.dtype(np.uint8),
    "uint8": np.dtype(np.uint8),
    "uint8_t": np.dtype(np.uint8),
    "unsigned short": np.dtype(np.uint16),
    "unsigned short int": np.dtype(np.uint16),
    "ushort": np.dtype(np.uint16),
    "uint16": np.dtype(np.uint16),
    "uint16_t": np.dtype(np.uint16),
    "float": np.dtype(np.float32),
}

_DTYPE_TO_TYPE = {
    np.dtype(np.uint8): "unsigned char",
    np.dtype(np.uint16): "unsigned short",
    np.dtype(np.float32): "float",
}


def _parse_header(blob: bytes) -> tuple[dict[str, str], int]:
    """Parse the attached header; return (fields, payload offset)."""
    nl = blob.find(b"\n")
    if nl < 0 or not _MAGIC.match(blob[:nl].rstrip(b"\r")):
        raise NotNrrdFile("missing NRRD000N magic line")
    fields: dict[str, str] = {}
    pos = nl + 1
    while True:
        nl = blob.find(b"\n", pos)
        if nl < 0:
            raise MalformedHeader("header not terminated by a blank line")
        line = blob[pos:nl].rstrip(b"\r")
        pos = nl + 1
        if line == b"":
            return fields, pos
        if line.startswith(b"#"):
            continue
        text = line.decode("ascii", errors="replace")
        if ":=" in text:
            continue  # key-value metadata; not a field
        if ": " not in text:
            raise MalformedHeader(f"unparsable header line: {text!r}")
        key, value = text.split(": ", 1)
        fields[key.strip().lower()] = value.strip()


def _require(fields: dict[str, str], name: str) -> str:
    if name not in fields:
        raise MissingHeaderField(f"required header field {name!r} absent")
    return fields[name]


_VECTOR = re.compile(r"\(([^)]*)\)")


def _spacing_from_fields(fields: dict[str, str]) -> tuple[float, float, float]:
    if "spacings" in fields:
        parts = fields["spacings"].split()
        if len(parts) != 3:
            raise MalformedHeader(f"spacings must have 3 entries, got {fields['spacings']!r}")
        try:
            spacing = tuple(float(p) for p in parts)
        except ValueError as exc:
            raise MalformedHeader(f"unparsable spacings: {fields['spacings']!r}") from exc
    elif "space directions" in fields:
        vecs = _VECTOR.findall(fields["space directions"])
        if len(vecs) != 3:
            raise MalformedHeader(
                f"space directions must have 3 vectors, got {fields['space directions']!r}"
            )
        rows = []
        for vec in vecs:
            try:
                rows.append([float(c) for c in vec.split(",")])
            except ValueError as exc:
                raise MalformedHeader(f"unparsable space direction ({vec})") from exc
        for i, row in enumerate(rows):
            if len(row) != 3:
                raise MalformedHeader(f"space direction {i} is not a 3-vector")
            if any(row[j] != 0.0 for j in range(3) if j != i):
                raise UnsupportedSpaceDirections(
                    "only diagonal (axis-aligned) space directions are supported"
                )
        spacing = (rows[0][0], rows[1][1], rows[2][2])
    else:
        spacing = (1.0, 1.0, 1.0)
    if not all(np.isfinite(s) and s > 0.0 for s in spacing):
        raise NonPositiveSpacing(f"non-positive spacing in header: {spacing!r}")
    return spacing


def read_nrrd(path, as_mask: bool | None = None) -> Grid:
    """Read an attached-header NRRD file into a Volume or Mask.

    A grid is returned as a Mask when its declared type is 8-bit and every
    value is 0 or 1; pass ``as_mask=True`` or ``as_mask=False`` to override
    the heuristic (True binarizes any sample type by nonzero test).
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    fields, offset = _parse_header(blob)

    type_name = _require(fields, "type").lower()
    if type_name not in _TYPE_TO_DTYPE:
        raise UnsupportedType(f"unsupported sample type {fields['type']!r}")
    dtype = _TYPE_TO_DTYPE[type_name]

    if _require(fields, "dimension") != "3":
        raise UnsupportedDimension(f"only 3-D grids supported, got dimension {fields['dimension']}")

    sizes_text = _require(fields, "sizes").split()
    try:
        sizes = tuple(int(s) for s in sizes_text)
    except ValueError as exc:
        raise MalformedHeader(f"unparsable sizes: {fields['sizes']!r}") from exc
    if len(sizes) != 3 or min(sizes) < 1:
        raise MalformedHeader(f"sizes must be 3 positive integers, got {fields['sizes']!r}")

    encoding = _require(fields, "encoding").lower()
    if encoding not in ("raw", "gzip", "gz"):
        raise UnsupportedEncoding(f"unsupported encoding {fields['encoding']!r}")

    endian = fields.get("endian", "little").lower()
    if endian != "little":
        raise UnsupportedEndian(f"only little-endian payloads supported, got {endian!r}")

    spacing = _spacing_from_fields(fields)

    payload = blob[offset:]
    if encoding in ("gzip", "gz"):
        try:
            payload = gzip.decompress(payload)
        except (OSError, EOFError, zlib.error) as exc:
            raise DimensionMismatch(f"gzip payload corrupt: {exc}") from exc
    expected = sizes[0] * sizes[1] * sizes[2] * dtype.itemsize
    if len(payload) != expected:
        raise DimensionMismatch(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )

    arr = np.frombuffer(payload, dtype=dtype.newbyteorder("<"))
    arr = arr.astype(dtype, copy=False).reshape(sizes, order="F")

    if as_mask is None:
        as_mask = dtype == np.uint8 and bool((arr <= 1).all())
    if as_mask:
        return Mask(arr != 0, spacing)
    return Volume(arr, spacing)


def write_nrrd(grid: Grid, path, encoding: str = "raw") -> None:
    """Write a Volume or Mask as an attached-header little-endian NRRD.

    Masks are stored as unsigned char 0/1. ``read_nrrd(write_nrrd(g))``
    reproduces ``g`` bit-exactly for both encodings; gzip output is
    byte-stable across runs (fixed mtime and compression level).
    """
    if encoding not in ("raw", "gzip"):
        raise UnsupportedEncoding(f"unsupported encoding {encoding!r}")

    if isinstance(grid, Mask):
        arr = grid.bits.astype(np.uint8)
    else:
        arr = grid.data
    dtype = arr.dtype
    payload = arr.ravel(order="F").astype(dtype.newbyteorder("<"), copy=False).tobytes()
    if encoding == "gzip":
        payload = gzip.compress(payload, compresslevel=6, mtime=0)

    lines = [
        "NRRD0004",
        f"type: {_DTYPE_TO_TYPE[dtype]}",
        "dimension: 3",
        "sizes: {} {} {}".format(*grid.dims),
        "spacings: {!r} {!r} {!r}".format(*grid.spacing),
    ]
    if dtype.itemsize > 1:
        lines.append("endian: little")
    lines.append(f"encoding: {encoding}")
    header = ("\n".join(lines) + "\n\n").encode("ascii")

    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
