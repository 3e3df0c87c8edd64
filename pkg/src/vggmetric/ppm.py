"""Binary PNM readers and writers.

Images travel as uint8 numpy arrays of shape (H, W, 3) in RGB order.
Heatmaps are written as 16-bit P5 graymaps with a sidecar text file
recording the linear scale factor that maps stored integers back to
the original real values.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError, PreconditionError


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in b" \t\r\n":
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in b" \t\r\n":
        pos += 1
    if start == pos:
        raise FormatError("truncated PNM header")
    return data[start:pos], pos


def _parse_pnm(data: bytes, magic: bytes) -> tuple[int, int, int, int]:
    tok, pos = _read_header_token(data, 0)
    if tok != magic:
        raise FormatError(f"bad PNM magic {tok!r}, expected {magic!r}")
    fields = []
    for _ in range(3):
        tok, pos = _read_header_token(data, pos)
        if not tok.isdigit():
            raise FormatError(f"non-numeric PNM header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    # exactly one whitespace byte separates header from raster
    return width, height, maxval, pos + 1


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 portable pixmap with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, maxval, pos = _parse_pnm(data, b"P6")
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval} in {path}")
    need = width * height * 3
    raster = data[pos : pos + need]
    if len(raster) != need:
        raise FormatError(f"truncated PPM raster in {path}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise PreconditionError("write_ppm expects a (H, W, 3) uint8 array")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(image.tobytes())


def read_pgm16(path) -> np.ndarray:
    """Read a binary P5 graymap with maxval 65535 (big-endian samples)."""
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, maxval, pos = _parse_pnm(data, b"P5")
    if maxval != 65535:
        raise FormatError(f"unsupported PGM maxval {maxval} in {path}")
    need = width * height * 2
    raster = data[pos : pos + need]
    if len(raster) != need:
        raise FormatError(f"truncated PGM raster in {path}")
    return np.frombuffer(raster, dtype=">u2").reshape(height, width).astype(np.uint16)


def write_pgm16(path, values: np.ndarray) -> float:
    """Write nonnegative real values as a 16-bit P5 graymap.

    Values are scaled linearly so the maximum maps to 65535; the scale
    factor (real value per stored count) is written to `<path>.scale.txt`
    and returned. A zero map gets scale 1.0.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise PreconditionError("write_pgm16 expects a 2-d array")
    if np.any(values < 0):
        raise PreconditionError("write_pgm16 expects nonnegative values")
    peak = float(values.max()) if values.size else 0.0
    scale = peak / 65535.0 if peak > 0 else 1.0
    stored = np.round(values / scale).astype(">u2")
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n65535\n" % (w, h))
        fh.write(stored.tobytes())
    with open(str(path) + ".scale.txt", "w") as fh:
        fh.write(f"{scale!r}\n")
    return scale
