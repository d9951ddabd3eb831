"""
snapshot_io.py - CSNAP1 binary format and CSV interchange

CSNAP1 layout (all little-endian):
    8 bytes   magic b"CSNAP1\\0\\0"
    4 x u32   version, N, M, d
    N*d f64   node coordinates, row-major (node by node)
    N*M f64   snapshot data, column-major (snapshot by snapshot)

Every CSV written here starts with the schema line `# christoffel-osp v1`.
Node indices are 0-based in every file.
"""

import csv
import json
import logging
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    BadMagicError,
    DimensionMismatchError,
    MissingFileError,
    SnapshotFormatError,
    TruncatedPayloadError,
)
from ..models.scores import ChristoffelScore
from ..models.sensing import Grid, SensorSelection, SnapshotSet
from .measurement import grid_1d

logger = logging.getLogger("sensing.snapshot_io")

MAGIC = b"CSNAP1\x00\x00"
FORMAT_VERSION = 1
HEADER_DTYPE = np.dtype("<u4")
PAYLOAD_DTYPE = np.dtype("<f8")
HEADER_SIZE = len(MAGIC) + 4 * HEADER_DTYPE.itemsize
SCHEMA_LINE = "# christoffel-osp v1"


def _require_file(path: str) -> None:
    if not os.path.isfile(path):
        raise MissingFileError(f"No such file: {path}")


def encode_snapshots(snapshots: SnapshotSet) -> bytes:
    """Serialize a snapshot set to CSNAP1 bytes."""
    n_nodes, n_snapshots = snapshots.data.shape
    header = np.array(
        [FORMAT_VERSION, n_nodes, n_snapshots, snapshots.grid.dim], dtype=HEADER_DTYPE
    )
    coords = np.ascontiguousarray(snapshots.grid.coords, dtype=PAYLOAD_DTYPE)
    data = np.asfortranarray(snapshots.data, dtype=PAYLOAD_DTYPE)
    return MAGIC + header.tobytes() + coords.tobytes(order="C") + data.tobytes(order="F")


def decode_snapshots(payload: bytes) -> SnapshotSet:
    """
    Parse CSNAP1 bytes.

    Raises:
        BadMagicError: payload does not start with the magic
        DimensionMismatchError: header fields are inconsistent
        TruncatedPayloadError: payload size disagrees with the header
    """
    if len(payload) < len(MAGIC) or payload[:len(MAGIC)] != MAGIC:
        raise BadMagicError("Not a CSNAP1 file (bad magic)")
    if len(payload) < HEADER_SIZE:
        raise TruncatedPayloadError("CSNAP1 header is truncated")

    version, n_nodes, n_snapshots, dim = (
        int(v) for v in np.frombuffer(payload, dtype=HEADER_DTYPE, count=4, offset=len(MAGIC))
    )
    if version != FORMAT_VERSION:
        raise SnapshotFormatError(f"Unsupported CSNAP1 version {version}")
    if dim not in (1, 2) or n_nodes < 1 or n_snapshots < 1:
        raise DimensionMismatchError(
            f"Invalid CSNAP1 header: N={n_nodes}, M={n_snapshots}, d={dim}"
        )

    expected = HEADER_SIZE + PAYLOAD_DTYPE.itemsize * n_nodes * (dim + n_snapshots)
    if len(payload) != expected:
        raise TruncatedPayloadError(
            f"CSNAP1 payload has {len(payload)} bytes, header announces {expected}"
        )

    coords = np.frombuffer(payload, dtype=PAYLOAD_DTYPE, count=n_nodes * dim, offset=HEADER_SIZE)
    data_offset = HEADER_SIZE + PAYLOAD_DTYPE.itemsize * n_nodes * dim
    data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE, count=n_nodes * n_snapshots, offset=data_offset)
    try:
        return SnapshotSet(
            grid=Grid(coords=coords.reshape(n_nodes, dim).astype(float)),
            data=data.reshape((n_nodes, n_snapshots), order="F").astype(float),
        )
    except ValueError as e:
        raise SnapshotFormatError(f"Invalid CSNAP1 content: {e}")


def save_snapshots(snapshots: SnapshotSet, path: str) -> None:
    """Write a snapshot set to a CSNAP1 file."""
    with open(path, "wb") as f:
        f.write(encode_snapshots(snapshots))
    logger.info(f"Wrote {snapshots.n_snapshots} snapshots on {snapshots.n_nodes} nodes to {path}")


def load_snapshots(path: str) -> SnapshotSet:
    """Read a snapshot set from a CSNAP1 file or, for *.csv paths, from CSV."""
    _require_file(path)
    if path.lower().endswith(".csv"):
        return load_snapshots_csv(path)
    with open(path, "rb") as f:
        return decode_snapshots(f.read())


def _data_rows(path: str) -> List[List[str]]:
    with open(path, newline="") as f:
        return [row for row in csv.reader(f) if row and not row[0].startswith("#")]


def save_snapshots_csv(snapshots: SnapshotSet, path: str) -> None:
    """
    Write snapshots as CSV: one row per node, one column per snapshot.

    Header: node,x[,y],s0,...,s{M-1}
    """
    coord_names = ["x", "y"][:snapshots.grid.dim]
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f)
        writer.writerow(["node"] + coord_names + [f"s{n}" for n in range(snapshots.n_snapshots)])
        for j in range(snapshots.n_nodes):
            writer.writerow(
                [j] + [repr(float(c)) for c in snapshots.grid.coords[j]]
                + [repr(float(v)) for v in snapshots.data[j]]
            )


def _snapshot_rows_layout(path: str, header: List[str], body: List[List[str]]) -> SnapshotSet:
    """Header of node ids 0..N-1, then one row per snapshot."""
    if [int(name) for name in header] != list(range(len(header))):
        raise DimensionMismatchError(f"{path}: node ids must be 0..N-1 in order")
    if any(len(row) != len(header) for row in body):
        raise DimensionMismatchError(f"{path}: ragged rows")
    try:
        table = np.array([[float(v) for v in row] for row in body])
    except ValueError as e:
        raise SnapshotFormatError(f"{path}: non-numeric entry ({e})")
    try:
        return SnapshotSet(grid=grid_1d(len(header)), data=table.T)
    except ValueError as e:
        raise SnapshotFormatError(f"{path}: {e}")


def _node_rows_layout(path: str, header: List[str], body: List[List[str]]) -> SnapshotSet:
    """node,x[,y],s0,... with one row per node."""
    dim = sum(1 for name in header[1:3] if name in ("x", "y"))
    if dim == 0:
        raise DimensionMismatchError(f"{path}: missing coordinate columns")
    if any(len(row) != len(header) for row in body):
        raise DimensionMismatchError(f"{path}: ragged rows")
    try:
        nodes = [int(row[0]) for row in body]
        table = np.array([[float(v) for v in row[1:]] for row in body])
    except ValueError as e:
        raise SnapshotFormatError(f"{path}: non-numeric entry ({e})")
    if nodes != list(range(len(body))):
        raise DimensionMismatchError(f"{path}: node ids must be 0..N-1 in order")
    try:
        return SnapshotSet(grid=Grid(coords=table[:, :dim]), data=table[:, dim:])
    except ValueError as e:
        raise SnapshotFormatError(f"{path}: {e}")


def load_snapshots_csv(path: str) -> SnapshotSet:
    """
    Read snapshots from CSV in either layout:

    - node rows, as written by save_snapshots_csv: header node,x[,y],s0,...
    - snapshot rows: a header of node ids 0..N-1, then one snapshot per row
      on the unit-interval grid
    """
    _require_file(path)
    rows = _data_rows(path)
    if len(rows) < 2:
        raise TruncatedPayloadError(f"{path} has no data rows")
    header, body = rows[0], rows[1:]
    if header[0] == "node":
        return _node_rows_layout(path, header, body)
    if all(name.strip().isdigit() for name in header):
        return _snapshot_rows_layout(path, header, body)
    raise SnapshotFormatError(f"{path}: header must start with 'node' or list node ids 0..N-1")


def save_scores_csv(scores: Sequence[float], path: str) -> None:
    """Write node_index,score rows."""
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f)
        writer.writerow(["node_index", "score"])
        for j, value in enumerate(np.asarray(scores, dtype=float)):
            writer.writerow([j, repr(float(value))])


def load_scores_csv(path: str) -> np.ndarray:
    """Read a node_index,score CSV into a dense length-N vector."""
    _require_file(path)
    rows = _data_rows(path)
    if not rows or rows[0][:2] != ["node_index", "score"]:
        raise SnapshotFormatError(f"{path}: expected header node_index,score")
    try:
        pairs = [(int(row[0]), float(row[1])) for row in rows[1:]]
    except (ValueError, IndexError) as e:
        raise SnapshotFormatError(f"{path}: malformed score row ({e})")
    if [j for j, _ in pairs] != list(range(len(pairs))):
        raise DimensionMismatchError(f"{path}: node indices must be 0..N-1 in order")
    return np.array([value for _, value in pairs])


def save_christoffel_score(score: ChristoffelScore, path: str) -> None:
    save_scores_csv(score.scores, path)


def selection_rows(selection: SensorSelection) -> List[Tuple[int, int, int]]:
    return [(rank, node, int(rank < selection.n_anchor)) for rank, node in enumerate(selection.indices)]


def save_selection_csv(selection: SensorSelection, path: str) -> None:
    """Write rank,node_index,is_anchor rows."""
    with open(path, "w", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f)
        writer.writerow(["rank", "node_index", "is_anchor"])
        writer.writerows(selection_rows(selection))


def load_selection_csv(path: str) -> SensorSelection:
    """Read a selection CSV; anchors must form a prefix."""
    _require_file(path)
    rows = _data_rows(path)
    if not rows or rows[0] != ["rank", "node_index", "is_anchor"]:
        raise SnapshotFormatError(f"{path}: expected header rank,node_index,is_anchor")
    try:
        body = sorted((int(r[0]), int(r[1]), int(r[2])) for r in rows[1:])
    except (ValueError, IndexError) as e:
        raise SnapshotFormatError(f"{path}: malformed selection row ({e})")
    flags = [flag for _, _, flag in body]
    n_anchor = sum(flags)
    if flags != [1] * n_anchor + [0] * (len(flags) - n_anchor):
        raise SnapshotFormatError(f"{path}: anchors must precede mobile sensors")
    try:
        return SensorSelection(indices=[node for _, node, _ in body], n_anchor=n_anchor)
    except ValueError as e:
        raise SnapshotFormatError(f"{path}: {e}")


def save_selection_json(selection: SensorSelection, path: str, extra: Optional[dict] = None) -> None:
    payload = {"indices": list(selection.indices), "n_anchor": selection.n_anchor}
    if extra:
        payload.update(extra)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
