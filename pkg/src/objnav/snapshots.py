"""Debug exports: map channels as PGM, a color-indexed PPM, and distance fields as PFM."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .semmap import CURRENT, EXPLORED, N_BASE_CHANNELS, OBSTACLE, PAST, SemanticMap

CHANNEL_NAMES = ("obstacle", "explored", "current_location", "past_locations")

# unexplored, explored, obstacle, past, current, then one color per category
_PALETTE = np.array([
    [255, 255, 255],
    [230, 230, 230],
    [60, 60, 60],
    [120, 170, 255],
    [220, 30, 30],
    [240, 160, 40],
    [150, 90, 200],
    [60, 180, 75],
    [70, 200, 220],
    [240, 50, 230],
    [160, 110, 60],
], dtype=np.uint8)


def channel_names(smap: SemanticMap, categories=None) -> list:
    cats = list(categories) if categories is not None else [f"cat_{i}" for i in range(smap.C)]
    return list(CHANNEL_NAMES) + [f"cat_{c}".replace(" ", "_") for c in cats]


def write_pgm(path, grid: np.ndarray) -> None:
    """Binary (P5) 8-bit grayscale; nonzero cells are white."""
    img = np.where(np.asarray(grid) != 0, 255, 0).astype(np.uint8)
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode() + np.ascontiguousarray(rgb, np.uint8).tobytes())


def _header(data: bytes, n_fields: int):
    """Split ``n_fields`` whitespace-separated header tokens from the binary body.

    Exactly one whitespace byte ends the header, as the formats require.
    """
    fields, pos = [], 0
    while len(fields) < n_fields:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    return fields, data[pos + 1:]


def read_pnm(path) -> np.ndarray:
    (magic, w, h, _maxval), body = _header(Path(path).read_bytes(), 4)
    w, h = int(w), int(h)
    if magic == b"P5":
        return np.frombuffer(body, np.uint8).reshape(h, w)
    return np.frombuffer(body, np.uint8).reshape(h, w, 3)


def color_index(smap: SemanticMap) -> np.ndarray:
    """Palette index per cell; later layers win (categories over obstacles over free)."""
    idx = np.zeros((smap.M, smap.M), np.uint8)
    idx[smap.channels[EXPLORED]] = 1
    idx[smap.channels[OBSTACLE]] = 2
    idx[smap.channels[PAST]] = 3
    for i in range(smap.C):
        idx[smap.channels[N_BASE_CHANNELS + i]] = 5 + (i % (len(_PALETTE) - 5))
    idx[smap.channels[CURRENT]] = 4
    return idx


def export_map(smap: SemanticMap, directory, prefix: str = "map", categories=None) -> list:
    """Write one PGM per channel plus a combined PPM; returns the written paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for k, name in enumerate(channel_names(smap, categories)):
        p = d / f"{prefix}_{name}.pgm"
        write_pgm(p, smap.channels[k])
        written.append(p)
    p = d / f"{prefix}_combined.ppm"
    write_ppm(p, _PALETTE[color_index(smap)])
    written.append(p)
    return written


def write_pfm(path, values: np.ndarray) -> None:
    """Portable float map, grayscale, little-endian; rows stored bottom-up per the format."""
    v = np.asarray(values, dtype="<f4")
    h, w = v.shape
    Path(path).write_bytes(f"Pf\n{w} {h}\n-1.0\n".encode() + np.ascontiguousarray(v[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    (_magic, w, h, scale), body = _header(Path(path).read_bytes(), 4)
    w, h, scale = int(w), int(h), float(scale)
    dtype = "<f4" if scale < 0 else ">f4"
    return np.frombuffer(body, dtype).reshape(h, w)[::-1].astype(np.float64)
