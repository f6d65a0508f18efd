"""Artifact writers: binary PGM images and plain CSV tables."""

import numpy as np

__all__ = ["write_pgm", "write_csv", "write_image_csv"]


def write_pgm(path, image, lo=0.0, hi=1.0):
    """8-bit binary PGM (P5), row-major, with a fixed grayscale window."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM writer expects a 2-D image")
    scaled = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    data = np.round(scaled * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_image_csv(path, image):
    """Raw CSV dump of a 2-D field, one image row per line."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image CSV writer expects a 2-D image")
    with open(path, "w") as fh:
        for row in img:
            fh.write(",".join(f"{v:.12e}" for v in row) + "\n")


def write_csv(path, header, columns):
    """Write named columns; floats at 12 significant digits (byte-stable)."""
    columns = [list(c) for c in columns]
    n = len(columns[0])
    if any(len(c) != n for c in columns):
        raise ValueError("columns must share length")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(n):
            cells = []
            for col in columns:
                v = col[k]
                cells.append(str(v) if isinstance(v, (int, np.integer)) else f"{v:.12e}")
            fh.write(",".join(cells) + "\n")
