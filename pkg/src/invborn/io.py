"""File formats: CSV fields and data, JSON reports, binary matrix cache.

Binary matrices are stored as two little-endian int64 dimensions (rows,
cols) followed by the entries as little-endian float64 in row-major order.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

_HEADER = np.dtype("<i8")
_DATA = np.dtype("<f8")


def fmt(x):
    return repr(float(x))


def write_matrix(path, matrix):
    matrix = np.ascontiguousarray(matrix, dtype=_DATA)
    if matrix.ndim != 2:
        raise ValueError("only 2-D matrices can be cached")
    with open(path, "wb") as fh:
        fh.write(np.asarray(matrix.shape, dtype=_HEADER).tobytes())
        fh.write(matrix.tobytes(order="C"))


def read_matrix(path):
    raw = Path(path).read_bytes()
    rows, cols = np.frombuffer(raw[:16], dtype=_HEADER)
    data = np.frombuffer(raw[16:], dtype=_DATA)
    if data.size != rows * cols:
        raise ValueError(f"{path}: header says {rows}x{cols}, found {data.size} values")
    return data.reshape(rows, cols).copy()


def config_hash(params):
    """Stable content hash of a JSON-serializable mapping."""
    blob = json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_data_csv(path, phi, n_detectors):
    phi = np.asarray(phi)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_index", "detector_index", "value"])
        for idx, v in enumerate(phi):
            s, d = divmod(idx, n_detectors)
            w.writerow([s, d, fmt(v)])


def read_data_csv(path):
    """Return ``(source_index, detector_index, values)`` arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"source_index", "detector_index", "value"}:
        raise ValueError(f"{path}: expected columns source_index, detector_index, value")
    src = np.array([int(r["source_index"]) for r in rows])
    det = np.array([int(r["detector_index"]) for r in rows])
    val = np.array([float(r["value"]) for r in rows])
    return src, det, val


def write_geometry_csv(path, points):
    """``points`` maps a kind (``source``, ``detector``, ``voxel``...) to an (n, 3) array."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "index", "x", "y", "z"])
        for kind, pts in points.items():
            for i, p in enumerate(np.asarray(pts, dtype=float)):
                w.writerow([kind, i, fmt(p[0]), fmt(p[1]), fmt(p[2])])


def read_geometry_csv(path):
    out = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.setdefault(r["kind"], []).append([float(r["x"]), float(r["y"]), float(r["z"])])
    return {k: np.array(v) for k, v in out.items()}


def write_field_csv(path, coords, columns):
    """Field values per voxel. ``coords`` is (n, 3) or None (index column only)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["x", "y", "z"] if coords is not None else ["index"]
        w.writerow(head + list(columns))
        values = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
        for i, row in enumerate(values):
            lead = [fmt(c) for c in coords[i]] if coords is not None else [i]
            w.writerow(lead + [fmt(v) for v in row])


def read_field_csv(path):
    """Return ``(header, array)`` for a field CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in r] for r in reader]
    return header, np.array(rows)


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
