"""8-bit image codecs: binary PGM (P5) / PPM (P6), and PNG import via pypng."""

from pathlib import Path
from typing import Tuple, Union

import numpy as np
import png

from src.errors import ImageFormatError

PathLike = Union[str, Path]


def _read_header(data: bytes, path: PathLike) -> Tuple[bytes, int, int, int, int]:
    """Parse a netpbm header; returns (magic, width, height, maxval, offset)."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ImageFormatError(f"{path}: truncated header")
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # Exactly one whitespace byte separates maxval from the raster.
    pos += 1
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError(f"{path}: malformed header values") from None
    return magic, width, height, maxval, pos


def read_pnm(path: PathLike) -> np.ndarray:
    """Read an 8-bit P5 or P6 file.

    Returns:
        uint8 array of shape (H, W) for P5 or (H, W, 3) for P6.

    Raises:
        ImageFormatError: on unknown magic, non-8-bit data or truncation.
    """
    data = Path(path).read_bytes()
    magic, width, height, maxval, offset = _read_header(data, path)
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"{path}: unsupported netpbm type {magic!r}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    count = width * height * channels
    raster = data[offset : offset + count]
    if len(raster) != count:
        raise ImageFormatError(f"{path}: expected {count} raster bytes, got {len(raster)}")
    pixels = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return pixels.reshape(height, width).copy()
    return pixels.reshape(height, width, 3).copy()


def write_pgm(path: PathLike, pixels: np.ndarray) -> Path:
    """Write a (H, W) uint8 array as binary PGM."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise ImageFormatError("write_pgm expects a 2D uint8 array")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = pixels.shape
    path.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())
    return path


def write_ppm(path: PathLike, pixels: np.ndarray) -> Path:
    """Write a (H, W, 3) uint8 array as binary PPM."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ImageFormatError("write_ppm expects an (H, W, 3) uint8 array")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width, _ = pixels.shape
    path.write_bytes(f"P6\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())
    return path


def read_png(path: PathLike) -> np.ndarray:
    """Read a PNG as uint8, dropping any alpha plane.

    Returns:
        (H, W) for greyscale, (H, W, 3) for colour.
    """
    try:
        width, height, rows, info = png.Reader(filename=str(path)).asDirect()
        planes = info["planes"]
        pixels = np.vstack([np.asarray(row, dtype=np.uint16) for row in rows])
    except png.Error as e:
        raise ImageFormatError(f"{path}: {e}") from None
    pixels = pixels.reshape(height, width, planes)
    if info["bitdepth"] == 16:
        pixels = pixels >> 8
    elif info["bitdepth"] < 8:
        pixels = pixels * (255 // ((1 << info["bitdepth"]) - 1))
    if info.get("alpha"):
        pixels = pixels[..., :-1]
    pixels = pixels.astype(np.uint8)
    if pixels.shape[2] == 1:
        return pixels[..., 0]
    return pixels


def read_image_u8(path: PathLike) -> np.ndarray:
    """Dispatch on suffix: .png through pypng, anything else as netpbm."""
    if Path(path).suffix.lower() == ".png":
        return read_png(path)
    return read_pnm(path)


def load_rgb(path: PathLike) -> np.ndarray:
    """Load an image as float64 [3, H, W] in [0, 1] (8-bit values / 255)."""
    pixels = read_image_u8(path)
    if pixels.ndim == 2:
        pixels = np.repeat(pixels[..., None], 3, axis=2)
    return np.transpose(pixels, (2, 0, 1)).astype(np.float64) / 255.0


def load_mask(path: PathLike) -> np.ndarray:
    """Load a mask as float64 [H, W] with values in {0, 1} (threshold at 128)."""
    pixels = read_image_u8(path)
    if pixels.ndim == 3:
        pixels = pixels[..., 0]
    return (pixels >= 128).astype(np.float64)


def save_rgb(path: PathLike, image: np.ndarray) -> Path:
    """Save a [3, H, W] image in [0, 1] as PPM (round(255·v))."""
    pixels = np.transpose(to_u8(image), (1, 2, 0))
    return write_ppm(path, np.ascontiguousarray(pixels))


def save_map(path: PathLike, values: np.ndarray) -> Path:
    """Save an [H, W] map in [0, 1] as PGM (round(255·v))."""
    return write_pgm(path, to_u8(values))


def to_u8(values: np.ndarray) -> np.ndarray:
    """Quantise [0, 1] values to 8 bits as round(255·v)."""
    return np.clip(np.rint(np.asarray(values, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
