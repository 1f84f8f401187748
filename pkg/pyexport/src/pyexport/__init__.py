"""Export in-memory embedding arrays to NPY or EMBV1 files.

A thin adapter between ML pipelines that hold embeddings as arrays and tools
that read them from disk. All validation happens before any byte is written,
and values are widened to float64 (lossless for float32 inputs).

The EMBV1 writer is implemented against the byte-level format description
(little-endian: magic "EMBV", u32 version=1, u32 n, u32 d, u8 has_labels,
n*d float64 row-major, then n int64 labels when present) rather than shared
code, so this package has no runtime dependency beyond numpy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__version__ = "0.1.0"

_MAGIC = b"EMBV"
_HEADER = struct.Struct("<4sIIIB")

FORMATS = ("npy", "embv1")


class ExportError(ValueError):
    """Invalid export specification; raised before anything touches disk."""


@dataclass(frozen=True)
class ExportSpec:
    """What to write: an (n, d) array, optional length-n labels, path, format."""

    data: object
    path: str
    format: str = "embv1"
    labels: object | None = None

    def resolve(self):
        if self.format not in FORMATS:
            raise ExportError(f"format must be one of {FORMATS}, got {self.format!r}")
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ExportError(f"data must be a 2-D (n, d) array, got shape {data.shape}")
        if not np.issubdtype(data.dtype, np.floating) and not np.issubdtype(
            data.dtype, np.integer
        ):
            raise ExportError(f"data must be numeric, got dtype {data.dtype}")
        data = np.ascontiguousarray(data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise ExportError("data contains NaN or Inf")
        labels = None
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != data.shape[0]:
                raise ExportError(
                    f"labels must be 1-D of length {data.shape[0]}, got shape {labels.shape}"
                )
            if not np.issubdtype(labels.dtype, np.integer):
                raise ExportError(f"labels must be integers, got dtype {labels.dtype}")
            labels = np.ascontiguousarray(labels, dtype=np.int64)
        return data, labels


def export(spec: ExportSpec) -> Path:
    """Validate the spec, write the file, return the written path."""
    data, labels = spec.resolve()
    path = Path(spec.path)
    if spec.format == "npy":
        if labels is not None:
            raise ExportError("the NPY format cannot carry labels; use embv1")
        np.save(path, data)
        if path.suffix != ".npy":
            path = path.with_name(path.name + ".npy")
        return path
    n, d = data.shape
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, n, d, int(labels is not None)))
        fh.write(data.astype("<f8", copy=False).tobytes())
        if labels is not None:
            fh.write(labels.astype("<i8", copy=False).tobytes())
    return path
