"""
On-disk formats.

* Cloud files: CSV with header ``x1,...,xd[,weight]``, one point per row.
* Matrices: CSV whose header row and first column hold the labels.
* Embeddings: a 16-byte magic, a version byte, a fixed little-endian header,
  the dropped slice indices, then the row-major float64 matrix.
* Run configs: ``key=value`` lines written next to an output file.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .embedding import LssotEmbedding
from .errors import LssotError
from .slicer import make_cloud

MAGIC = b"LSSOT-EMBEDDING\x00"
VERSION = 1
# rows, M, L, d, has_seed, seed, eps, n_dropped
_HEADER = struct.Struct("<QQQQBqdQ")
_DIGEST_BYTES = 32
UNIT_TOL = 1e-6


class DataError(LssotError):
    """Malformed input file."""


def fmt(x):
    return repr(float(x))


def read_cloud(path):
    """Parse a cloud CSV; points within 1e-6 of unit norm are renormalized."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    has_weight = bool(header) and header[-1] == "weight"
    coords = header[:-1] if has_weight else header
    expected = [f"x{i + 1}" for i in range(len(coords))]
    if coords != expected or len(coords) < 2:
        raise DataError(f"{path}: header must be x1,...,xd[,weight] with d >= 2, got {','.join(header)}")
    d = len(coords)
    data = []
    for i, row in enumerate(rows[1:], start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} columns, expected {len(header)}")
        vals = []
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {i}, column {header[j]}: not a number: {cell!r}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: row {i}, column {header[j]}: value is not finite")
            vals.append(v)
        data.append(vals)
    if not data:
        raise DataError(f"{path}: no data rows")
    arr = np.array(data)
    pts = arr[:, :d]
    norms = np.linalg.norm(pts, axis=1)
    off = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
    if off.size:
        i = int(off[0])
        raise DataError(f"{path}: row {i + 1} has norm {norms[i]:.6g}, not a unit vector")
    weights = arr[:, d] if has_weight else None
    if weights is not None and np.any(weights < 0):
        i = int(np.flatnonzero(weights < 0)[0])
        raise DataError(f"{path}: row {i + 1}, column weight: negative weight")
    try:
        return make_cloud(pts, weights, normalize=True)
    except LssotError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_cloud(path, cloud, with_weights=None):
    d = cloud.d
    if with_weights is None:
        with_weights = not np.allclose(cloud.weights, 1.0 / cloud.n, rtol=0, atol=1e-15)
    header = [f"x{i + 1}" for i in range(d)] + (["weight"] if with_weights else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, wt in zip(cloud.points, cloud.weights):
            w.writerow([fmt(v) for v in p] + ([fmt(wt)] if with_weights else []))


def write_matrix(path, values, labels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + list(labels))
        for lab, row in zip(labels, np.asarray(values)):
            w.writerow([lab] + [fmt(v) for v in row])


def read_matrix(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: matrix file needs a header and at least one row")
    labels = rows[0][1:]
    try:
        values = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if values.shape != (len(labels), len(labels)):
        raise DataError(f"{path}: expected a {len(labels)}x{len(labels)} matrix, got {values.shape}")
    return values, labels


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in r])


def write_embedding(path, emb):
    matrix = np.ascontiguousarray(emb.matrix, dtype="<f8")
    dropped = np.asarray(emb.dropped_slices, dtype="<u8")
    has_seed = emb.slice_seed is not None
    header = _HEADER.pack(
        matrix.shape[0], emb.M, emb.L, emb.d, int(has_seed),
        int(emb.slice_seed) if has_seed else 0, float(emb.eps), dropped.size,
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(header)
        fh.write(bytes.fromhex(emb.slice_digest))
        fh.write(dropped.tobytes())
        fh.write(matrix.tobytes())


def is_embedding_file(path):
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def read_embedding(path):
    buf = Path(path).read_bytes()
    if buf[:16] != MAGIC:
        raise DataError(f"{path}: not an embedding file")
    if buf[16] != VERSION:
        raise DataError(f"{path}: unsupported embedding version {buf[16]}")
    pos = 17
    rows, M, L, d, has_seed, seed, eps, n_dropped = _HEADER.unpack_from(buf, pos)
    pos += _HEADER.size
    digest = buf[pos:pos + _DIGEST_BYTES].hex()
    pos += _DIGEST_BYTES
    dropped = np.frombuffer(buf, "<u8", n_dropped, pos).astype(np.int64)
    pos += 8 * n_dropped
    if len(buf) - pos != 8 * rows * M or rows + n_dropped != L:
        raise DataError(f"{path}: truncated or inconsistent embedding file")
    matrix = np.frombuffer(buf, "<f8", rows * M, pos).reshape(rows, M).astype(np.float64)
    matrix.setflags(write=False)
    return LssotEmbedding(
        matrix=matrix,
        slice_ids=np.setdiff1d(np.arange(L), dropped),
        slice_seed=seed if has_seed else None,
        slice_digest=digest,
        L=L,
        M=M,
        d=d,
        eps=eps,
        dropped_slices=dropped,
    )


def write_runconfig(path, config):
    """Write ``config`` as key=value lines to ``<path>.runconfig``; returns that path."""
    side = Path(str(path) + ".runconfig")
    side.write_text("".join(f"{k}={v}\n" for k, v in config.items()))
    return side


def read_runconfig(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            out[k] = v
    return out
