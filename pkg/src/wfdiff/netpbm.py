"""Binary PGM (P5) / PPM (P6) codec, 8-bit only.

Images are planar float arrays shaped (C, H, W): pixel v maps to v / 255 on
read; on write values are clamped to [0, 1] and v * 255 is rounded half away
from zero.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_WS = b" \t\n\r\x0b\x0c"


class ImageFormatError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at byte {offset}")
        self.offset = offset


def _header_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and comments, then read one token
    while pos < len(buf):
        if buf[pos] in _WS:
            pos += 1
        elif buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < len(buf) and buf[pos] not in _WS and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageFormatError("unexpected end of header", start)
    return buf[start:pos], pos


def _header_int(buf: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, end = _header_token(buf, pos)
    if not tok.isdigit():
        raise ImageFormatError(f"bad {what} {tok!r}", end - len(tok))
    return int(tok), end


def decode(buf: bytes) -> np.ndarray:
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported magic {magic!r} (need P5 or P6)", 0)
    channels = 1 if magic == b"P5" else 3
    pos = 2
    width, pos = _header_int(buf, pos, "width")
    height, pos = _header_int(buf, pos, "height")
    maxval, pos = _header_int(buf, pos, "maxval")
    if width == 0 or height == 0:
        raise ImageFormatError("zero image dimension", pos)
    if maxval != 255:
        raise ImageFormatError(f"maxval {maxval} unsupported (need 255)", pos)
    if pos >= len(buf) or buf[pos] not in _WS:
        raise ImageFormatError("missing whitespace after header", pos)
    pos += 1
    need = width * height * channels
    if len(buf) - pos < need:
        raise ImageFormatError(f"truncated payload: need {need} bytes, have {len(buf) - pos}", len(buf))
    if len(buf) - pos > need:
        raise ImageFormatError(f"{len(buf) - pos - need} trailing bytes after payload", pos + need)
    px = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos).reshape(height, width, channels)
    return np.moveaxis(px, -1, 0).astype(np.float64) / 255.0


def quantize(image: np.ndarray) -> np.ndarray:
    """(C, H, W) floats -> uint8 with clamping and half-away-from-zero rounding."""
    v = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)  # non-negative, so floor(v + .5) rounds half away


def encode(image: np.ndarray) -> bytes:
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    if image.ndim != 3 or image.shape[0] not in (1, 3):
        raise ValueError(f"expected (1|3, H, W) image, got shape {image.shape}")
    c, h, w = image.shape
    head = f"{'P5' if c == 1 else 'P6'}\n{w} {h}\n255\n".encode("ascii")
    return head + np.moveaxis(quantize(image), 0, -1).tobytes()


def read_image(path) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise OSError(f"cannot read image {path}: {e.strerror}") from e
    try:
        return decode(buf)
    except ImageFormatError as e:
        raise ImageFormatError(f"{path}: {str(e).rsplit(' at byte', 1)[0]}", e.offset) from None


def write_image(path, image: np.ndarray) -> None:
    path = Path(path)
    try:
        path.write_bytes(encode(image))
    except OSError as e:
        raise OSError(f"cannot write image {path}: {e.strerror}") from e
