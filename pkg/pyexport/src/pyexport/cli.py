"""One-shot conversion command: read an NPY or CSV embedding file, write EMBV1.

Usage: pyexport INPUT OUTPUT [--label-column NAME]
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import ExportError, ExportSpec, export


def _read_csv(path: Path, label_column: str | None):
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if label_column is not None and label_column not in header:
        raise ExportError(f"{path}: no column named {label_column!r}")
    label_idx = header.index(label_column) if label_column is not None else -1
    data = []
    labels = [] if label_column is not None else None
    for row in rows:
        data.append([float(c) for i, c in enumerate(row) if i != label_idx])
        if labels is not None:
            labels.append(int(row[label_idx]))
    return np.asarray(data, dtype=np.float64), labels


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pyexport", description="Convert NPY/CSV embeddings to EMBV1."
    )
    parser.add_argument("input", help="NPY or CSV file of shape (n, d)")
    parser.add_argument("output", help="EMBV1 file to write")
    parser.add_argument("--label-column", default=None, help="CSV column to use as labels")
    args = parser.parse_args(argv)

    src = Path(args.input)
    try:
        if src.suffix.lower() == ".csv":
            data, labels = _read_csv(src, args.label_column)
        else:
            data = np.load(src, allow_pickle=False)
            labels = None
        path = export(ExportSpec(data, args.output, format="embv1", labels=labels))
    except (ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
