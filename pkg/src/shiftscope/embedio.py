"""Loading, validation, normalization and persistence of embedding datasets.

Supported on-disk formats:

* NPY (version 1.x header, 2-D C-order float32/float64; written as float64)
* CSV (RFC-4180 with a header row; an optional label column)
* EMBV1, a little-endian binary format::

    magic "EMBV" | u32 version=1 | u32 n | u32 d | u8 has_labels
    n*d float64 row-major | [n int64 labels]
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, IoError, ParseError, UnsupportedArray

_MAGIC = b"EMBV"
_HEADER = struct.Struct("<4sIIIB")


@dataclass(frozen=True)
class EmbeddingSet:
    """An immutable n x d matrix of embedding vectors with optional integer labels."""

    data: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise UnsupportedArray(
                f"embedding data must be a 2-D array with n,d >= 1, got shape {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise UnsupportedArray("embedding data contains NaN or Inf")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels, dtype=np.int64)
            if labels.ndim != 1 or labels.shape[0] != data.shape[0]:
                raise UnsupportedArray(
                    f"labels must be 1-D of length n={data.shape[0]}, got shape {labels.shape}"
                )
            if np.any(labels < 0):
                raise UnsupportedArray("labels must be non-negative")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def take(self, indices, name: str | None = None) -> "EmbeddingSet":
        """Row subset preserving (point, label) pairing."""
        idx = np.asarray(indices, dtype=np.int64)
        labels = self.labels[idx] if self.labels is not None else None
        return EmbeddingSet(self.data[idx], labels, name if name is not None else self.name)

    def equals(self, other: "EmbeddingSet") -> bool:
        """Bitwise equality of data and labels (name ignored)."""
        if self.data.shape != other.data.shape:
            return False
        if not np.array_equal(self.data, other.data):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


def load_npy(path) -> EmbeddingSet:
    """Load a 2-D float NPY file. Row i of the file becomes point i."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            magic = fh.read(6)
            if magic != b"\x93NUMPY":
                raise FormatError(f"{path}: not an NPY file (bad magic)")
            fh.seek(0)
            arr = np.load(fh, allow_pickle=False)
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"{path}: malformed NPY ({exc})") from exc
    if arr.ndim != 2:
        raise UnsupportedArray(f"{path}: expected a 2-D array, got {arr.ndim}-D")
    if arr.dtype not in (np.float32, np.float64):
        raise UnsupportedArray(f"{path}: expected float32/float64 data, got {arr.dtype}")
    return EmbeddingSet(arr.astype(np.float64), name=path.stem)


def save_npy(dataset: EmbeddingSet, path) -> None:
    """Write the data matrix as a float64 NPY file (labels are not representable)."""
    try:
        np.save(Path(path), np.asarray(dataset.data, dtype=np.float64))
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def load_csv(path, label_column: str | None = None) -> EmbeddingSet:
    """Load a header-ed CSV; rows become points, an optional column becomes labels."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    if label_column is not None and label_column not in header:
        raise FormatError(f"{path}: no column named {label_column!r}")
    label_idx = header.index(label_column) if label_column is not None else -1
    width = len(header)
    data = []
    labels = [] if label_column is not None else None
    for r, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(
                f"{path}: ragged row {r + 2} has {len(row)} cells, expected {width}"
            )
        point = []
        for c, cell in enumerate(row):
            if c == label_idx:
                try:
                    labels.append(int(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-integer label {cell!r} at row {r + 2}, column {header[c]!r}",
                        row=r + 2,
                        column=header[c],
                    ) from None
            else:
                try:
                    point.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r} at row {r + 2}, column {header[c]!r}",
                        row=r + 2,
                        column=header[c],
                    ) from None
        data.append(point)
    if not data:
        raise FormatError(f"{path}: no data rows")
    return EmbeddingSet(
        np.asarray(data, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64) if labels is not None else None,
        name=path.stem,
    )


def save_embv1(dataset: EmbeddingSet, path) -> None:
    """Write the EMBV1 binary format; load_embv1 is its exact inverse."""
    has_labels = dataset.labels is not None
    try:
        with Path(path).open("wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, 1, dataset.n, dataset.d, int(has_labels)))
            fh.write(np.ascontiguousarray(dataset.data, dtype="<f8").tobytes())
            if has_labels:
                fh.write(np.ascontiguousarray(dataset.labels, dtype="<i8").tobytes())
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def load_embv1(path) -> EmbeddingSet:
    """Read an EMBV1 file written by save_embv1."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, d, has_labels = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported EMBV version {version}")
    if has_labels not in (0, 1):
        raise FormatError(f"{path}: bad has_labels byte {has_labels}")
    need = _HEADER.size + 8 * n * d + (8 * n if has_labels else 0)
    if len(blob) != need:
        raise FormatError(f"{path}: expected {need} bytes, found {len(blob)}")
    off = _HEADER.size
    data = np.frombuffer(blob, dtype="<f8", count=n * d, offset=off).reshape(n, d)
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype="<i8", count=n, offset=off + 8 * n * d)
    return EmbeddingSet(data.copy(), labels.copy() if labels is not None else None, name=path.stem)


def l2_normalize(dataset: EmbeddingSet) -> EmbeddingSet:
    """Scale each row to unit Euclidean norm; zero rows pass through with a warning."""
    norms = np.linalg.norm(dataset.data, axis=1)
    zero = norms == 0.0
    nzero = int(zero.sum())
    if nzero:
        warnings.warn(f"l2_normalize: {nzero} zero-norm rows left unchanged", stacklevel=2)
    safe = np.where(zero, 1.0, norms)
    return EmbeddingSet(dataset.data / safe[:, None], dataset.labels, dataset.name)


_LOADERS = {".npy": load_npy, ".embv1": load_embv1, ".csv": load_csv}


def load_auto(path, label_column: str | None = None) -> EmbeddingSet:
    """Dispatch on file extension (.npy, .embv1, .csv)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return load_csv(path, label_column)
    loader = _LOADERS.get(suffix)
    if loader is None:
        raise FormatError(f"{path}: unknown embedding file extension {suffix!r}")
    return loader(path)
