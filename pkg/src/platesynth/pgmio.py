"""Portable graymap (PGM, P2/P5) reading and writing."""

from __future__ import annotations

import numpy as np


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read an 8- or 16-bit PGM file.  Returns (array[h, w], maxval)."""
    with open(path, "rb") as f:
        data = f.read()

    tokens = []
    i = 0
    # header tokens with '#' comment handling; stop after maxval
    while len(tokens) < 4 and i < len(data):
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4:
        raise ValueError("truncated PGM header")
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"not a PGM file (magic {magic!r})")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise ValueError("invalid PGM dimensions")

    if magic == b"P5":
        i += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        count = width * height
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=i)
        if raw.size != count:
            raise ValueError("truncated PGM pixel data")
        arr = raw.astype(np.uint16 if maxval > 255 else np.uint8)
    else:
        vals = data[i:].split()
        if len(vals) < width * height:
            raise ValueError("truncated PGM pixel data")
        arr = np.array([int(v) for v in vals[: width * height]],
                       dtype=np.uint16 if maxval > 255 else np.uint8)
    return arr.reshape(height, width), maxval


def write_pgm(path, arr: np.ndarray, maxval: int = 255, binary: bool = True):
    """Write a 2-D unsigned array as PGM (P5 when binary, else P2)."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("PGM data must be 2-D")
    if arr.max(initial=0) > maxval:
        raise ValueError("pixel value exceeds maxval")
    h, w = arr.shape
    header = f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.uint8
            f.write(arr.astype(dtype).tobytes())
        else:
            for row in arr:
                f.write((" ".join(str(int(v)) for v in row) + "\n").encode("ascii"))
