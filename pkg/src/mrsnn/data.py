"""IDX dataset files and rate encoding of analog values into spike trains."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, CountMismatch, TruncatedFile

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
POISSON = "poisson-rate"
REGULAR = "regular-rate"


@dataclass(frozen=True, eq=False)
class Dataset:
    images: np.ndarray  # (N, H, W) uint8
    labels: np.ndarray  # (N,) uint8

    def __len__(self):
        return len(self.labels)


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def read_idx(path, expect_magic=None) -> np.ndarray:
    """Parse one big-endian IDX file of unsigned bytes.

    The magic number's low byte is the number of dimensions; the byte before
    it must be 0x08 (unsigned byte data).
    """
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: no room for the magic number")
    (magic,) = struct.unpack(">I", raw[:4])
    if expect_magic is not None and magic != expect_magic:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{expect_magic:08x}")
    if magic >> 8 != 0x08 or not 1 <= (magic & 0xFF) <= 3:
        raise BadMagic(f"{path}: unsupported magic 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFile(f"{path}: header cut short")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header < size:
        raise TruncatedFile(f"{path}: {len(raw) - header} data bytes, header promises {size}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path) -> Dataset:
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return Dataset(images, labels)


def write_idx(path, array) -> None:
    """Write a uint8 array (1 to 3 dimensions) as an uncompressed IDX file."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = struct.pack(">I", 0x0800 | array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    Path(path).write_bytes(header + array.tobytes())


def encode_spikes(values, steps: int, scheme: str = POISSON, rng=None,
                  rate_scale: float = 1.0) -> np.ndarray:
    """Encode values in [0, 1] as a ``(steps, *values.shape)`` boolean raster.

    ``poisson-rate`` draws Bernoulli(value * rate_scale) per step.
    ``regular-rate`` emits round(value * steps) evenly spaced spikes.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values < 0) or np.any(values > 1):
        raise ValueError("values must lie in [0, 1]")
    if scheme == POISSON:
        p = np.clip(values * rate_scale, 0.0, 1.0)
        rng = np.random.default_rng(rng)
        return rng.random((steps,) + values.shape) < p
    if scheme == REGULAR:
        counts = np.rint(values * steps)
        t = np.arange(1, steps + 1).reshape((steps,) + (1,) * values.ndim)
        # a spike whenever the running quota t*count/steps crosses an integer
        return np.floor(t * counts / steps) > np.floor((t - 1) * counts / steps)
    raise ValueError(f"unknown encoding scheme {scheme!r}")
