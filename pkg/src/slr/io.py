"""Reading and writing point clouds.

Three formats are supported:

``labeled_csv``
    Text with header ``x,y,z,label``; label is ``0`` (ground), ``1``
    (non_ground) or ``2`` (unlabeled).  The names ``ground``,
    ``non_ground`` and ``unlabeled`` are also accepted on input.
``ply``
    Vertex element with ``x``/``y``/``z`` float or double properties and an
    optional ``uchar label``; ASCII or binary little-endian.  Other vertex
    properties are skipped.  Cloud metadata is kept in ``comment`` lines.
``bin``
    Little-endian: magic ``SLRC``, ``u64`` count, ``u32`` length of a UTF-8
    JSON object holding the cloud metadata, the JSON itself, then per point
    three ``f64`` coordinates and one ``u8`` label.
"""

from __future__ import annotations

import io
import json
import os
from pathlib import Path

import numpy as np

from .cloud import Label, PointCloud
from .errors import CloudFormatError

__all__ = ["FORMATS", "load_cloud", "store_cloud", "guess_format"]

FORMATS = ("labeled_csv", "ply", "bin")

BIN_MAGIC = b"SLRC"
BIN_RECORD = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("label", "u1")])

_LABEL_NAMES = {"ground": 0, "non_ground": 1, "unlabeled": 2, "0": 0, "1": 1, "2": 2}

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_META_COMMENT = "slr-meta "


def guess_format(path) -> str:
    ext = Path(path).suffix.lower()
    if ext == ".ply":
        return "ply"
    if ext == ".bin":
        return "bin"
    if ext in (".csv", ".txt"):
        return "labeled_csv"
    raise ValueError(f"cannot infer point-cloud format from extension {ext!r}")


def load_cloud(path, format: str | None = None) -> PointCloud:
    """Read a point cloud from ``path``.

    Args:
        path: file to read.
        format: one of :data:`FORMATS`; inferred from the extension if omitted.

    Raises:
        CloudFormatError: malformed record or header, unknown label token.
        OSError: the file cannot be opened.
    """
    format = format or guess_format(path)
    if format == "labeled_csv":
        return _load_csv(path)
    if format == "ply":
        return _load_ply(path)
    if format == "bin":
        return _load_bin(path)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def store_cloud(cloud: PointCloud, path, format: str | None = None, *, ascii: bool = False) -> None:
    """Write ``cloud`` to ``path``.

    ``ascii`` only affects PLY output (binary little-endian by default).
    """
    format = format or guess_format(path)
    if format == "labeled_csv":
        _store_csv(cloud, path)
    elif format == "ply":
        _store_ply(cloud, path, ascii=ascii)
    elif format == "bin":
        _store_bin(cloud, path)
    else:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


# -- labeled_csv -------------------------------------------------------------

def _store_csv(cloud: PointCloud, path) -> None:
    with open(path, "w", newline="") as f:
        f.write("x,y,z,label\n")
        if len(cloud):
            buf = io.StringIO()
            np.savetxt(buf, cloud.xyz, fmt="%.17g", delimiter=",")
            rows = buf.getvalue().splitlines()
            f.writelines(f"{r},{lab}\n" for r, lab in zip(rows, cloud.labels.tolist()))


def _load_csv(path) -> PointCloud:
    xyz = []
    labels = []
    with open(path, newline="") as f:
        header = f.readline()
        if [h.strip() for h in header.strip().split(",")] != ["x", "y", "z", "label"]:
            raise CloudFormatError(f"expected header 'x,y,z,label', got {header.strip()!r}", path, 1)
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise CloudFormatError(f"expected 4 fields, got {len(parts)}", path, lineno)
            try:
                xyz.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise CloudFormatError(f"non-numeric coordinate in {line!r}", path, lineno) from None
            token = parts[3].strip().lower()
            if token not in _LABEL_NAMES:
                raise CloudFormatError(f"unknown label token {parts[3]!r}", path, lineno)
            labels.append(_LABEL_NAMES[token])
    try:
        return PointCloud(np.array(xyz, dtype=np.float64).reshape(-1, 3), np.array(labels, dtype=np.uint8))
    except ValueError as e:
        raise CloudFormatError(str(e), path) from None


# -- bin ---------------------------------------------------------------------

def _store_bin(cloud: PointCloud, path) -> None:
    meta = json.dumps(cloud.meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(BIN_MAGIC)
        f.write(np.uint64(len(cloud)).astype("<u8").tobytes())
        f.write(np.uint32(len(meta)).astype("<u4").tobytes())
        f.write(meta)
        _store_bin_records(cloud, f)


def _load_bin(path) -> PointCloud:
    size = os.path.getsize(path)
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) < 16 or head[:4] != BIN_MAGIC:
            raise CloudFormatError("missing SLRC magic header", path)
        n = int(np.frombuffer(head[4:12], dtype="<u8")[0])
        m = int(np.frombuffer(head[12:16], dtype="<u4")[0])
        expected = 16 + m + n * BIN_RECORD.itemsize
        if size != expected:
            raise CloudFormatError(f"header announces {n} points ({expected} bytes) but file has {size} bytes", path)
        try:
            meta = json.loads(f.read(m).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise CloudFormatError("corrupt metadata block", path) from None
        if not isinstance(meta, dict):
            raise CloudFormatError("metadata block is not a JSON object", path)
        rec = np.fromfile(f, dtype=BIN_RECORD, count=n)
    xyz = np.column_stack([rec["x"], rec["y"], rec["z"]]).astype(np.float64)
    labels = rec["label"].copy()
    if labels.size and labels.max() > 2:
        bad = int(np.argmax(labels > 2))
        raise CloudFormatError(f"unknown label value {labels[bad]} at record {bad}", path)
    try:
        return PointCloud(xyz, labels, meta)
    except ValueError as e:
        raise CloudFormatError(str(e), path) from None


# -- ply ---------------------------------------------------------------------

def _store_ply(cloud: PointCloud, path, ascii: bool = False) -> None:
    lines = ["ply", f"format {'ascii' if ascii else 'binary_little_endian'} 1.0"]
    for k, v in cloud.meta.items():
        lines.append(f"comment {_META_COMMENT}{k}={v}".replace("\n", " "))
    lines += [
        f"element vertex {len(cloud)}",
        "property double x",
        "property double y",
        "property double z",
        "property uchar label",
        "end_header",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii", errors="replace")
    with open(path, "wb") as f:
        f.write(header)
        if ascii:
            rows = [
                f"{x!r} {y!r} {z!r} {lab}\n"
                for (x, y, z), lab in zip(cloud.xyz.tolist(), cloud.labels.tolist())
            ]
            f.write("".join(rows).encode("ascii"))
        else:
            _store_bin_records(cloud, f)


def _store_bin_records(cloud: PointCloud, f) -> None:
    rec = np.empty(len(cloud), dtype=BIN_RECORD)
    rec["x"], rec["y"], rec["z"] = cloud.xyz.T
    rec["label"] = cloud.labels
    rec.tofile(f)


def _load_ply(path) -> PointCloud:
    with open(path, "rb") as f:
        first = f.readline()
        if first.strip() != b"ply":
            raise CloudFormatError("not a PLY file (missing 'ply' magic)", path, 1)
        fmt = None
        meta = {}
        elements = []  # (name, count, [(prop, dtype)])
        lineno = 1
        while True:
            raw = f.readline()
            lineno += 1
            if not raw:
                raise CloudFormatError("unexpected end of file inside header", path, lineno)
            line = raw.decode("ascii", errors="replace").strip()
            if line == "end_header":
                break
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "format":
                fmt = tok[1] if len(tok) > 1 else None
            elif tok[0] == "comment":
                body = line[len("comment "):]
                if body.startswith(_META_COMMENT) and "=" in body:
                    k, v = body[len(_META_COMMENT):].split("=", 1)
                    meta[k] = v
            elif tok[0] == "element":
                elements.append((tok[1], int(tok[2]), []))
            elif tok[0] == "property":
                if not elements:
                    raise CloudFormatError("property before any element", path, lineno)
                if tok[1] == "list":
                    elements[-1][2].append((tok[-1], None))
                else:
                    if tok[1] not in _PLY_TYPES:
                        raise CloudFormatError(f"unsupported property type {tok[1]!r}", path, lineno)
                    elements[-1][2].append((tok[2], _PLY_TYPES[tok[1]]))
            elif tok[0] in ("obj_info",):
                continue
            else:
                raise CloudFormatError(f"unrecognised header line {line!r}", path, lineno)
        header_lines = lineno

        if fmt not in ("ascii", "binary_little_endian"):
            raise CloudFormatError(f"unsupported PLY format {fmt!r}", path)
        if not elements or elements[0][0] != "vertex":
            raise CloudFormatError("first element must be 'vertex'", path)
        _, n, props = elements[0]
        names = [p for p, _ in props]
        if any(dt is None for _, dt in props):
            raise CloudFormatError("list properties on vertex are not supported", path)
        for axis in "xyz":
            if axis not in names:
                raise CloudFormatError(f"vertex element lacks property {axis!r}", path)

        if fmt == "binary_little_endian":
            dtype = np.dtype([(p, "<" + dt) for p, dt in props])
            rec = np.fromfile(f, dtype=dtype, count=n)
            if rec.shape[0] != n:
                raise CloudFormatError(f"expected {n} vertices, found {rec.shape[0]}", path)
            cols = {p: rec[p] for p in names}
        else:
            rows = []
            for i in range(n):
                raw = f.readline()
                if not raw:
                    raise CloudFormatError(f"expected {n} vertices, found {i}", path, header_lines + i + 1)
                parts = raw.split()
                if len(parts) < len(props):
                    raise CloudFormatError(
                        f"expected {len(props)} values, got {len(parts)}", path, header_lines + i + 1
                    )
                try:
                    rows.append([float(v) for v in parts[: len(props)]])
                except ValueError:
                    raise CloudFormatError(f"non-numeric value in {raw!r}", path, header_lines + i + 1) from None
            arr = np.array(rows, dtype=np.float64).reshape(n, len(props))
            cols = {p: arr[:, k] for k, p in enumerate(names)}

    xyz = np.column_stack([cols["x"], cols["y"], cols["z"]]).astype(np.float64)
    if "label" in cols:
        lab = np.asarray(cols["label"])
        if lab.size and (lab.min() < 0 or lab.max() > 2 or not np.all(lab == np.round(lab))):
            bad = int(np.argmax((lab < 0) | (lab > 2) | (lab != np.round(lab))))
            line = header_lines + bad + 1 if fmt == "ascii" else None
            raise CloudFormatError(f"unknown label value {lab[bad]!r}", path, line)
        labels = lab.astype(np.uint8)
    else:
        labels = np.full(n, Label.UNLABELED, dtype=np.uint8)
    try:
        return PointCloud(xyz, labels, meta)
    except ValueError as e:
        raise CloudFormatError(str(e), path) from None
