"""CSV ingestion and the binary model archive.

Archive layout (all integers little-endian)::

    magic      8 bytes   b"DLDSARC\\0"
    version    uint32
    hlen       uint32    length of the JSON header
    header     hlen bytes, UTF-8 JSON with sorted keys
    payload    float64 little-endian arrays, in header order, C order
    crc32      uint32    over every preceding byte

The header names the variant, lists each array's name and shape, and
carries the training configuration and a trace summary. Writing is fully
deterministic, so save -> load -> save reproduces the same bytes.
"""

import csv
import json
import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .continuous import ContinuousModel
from .discrete import DiscreteModel
from .errors import DimensionError, DomainError, IntegrityError, ParseError, VersionError
from .trajectory import Trajectory

MAGIC = b"DLDSARC\0"
FORMAT_VERSION = 1
VARIANTS = ("discrete", "discrete_identity", "continuous")


# --------------------------------------------------------------------------
# CSV

def zscore(Y):
    """Per-column standardisation; constant columns are only centred."""
    Y = np.asarray(Y, dtype=float)
    # exact test: a rounded mean would leave tiny spurious spread
    const = np.ptp(Y, axis=0) == 0
    # z-scores are scale-free; dividing by the column maximum first keeps
    # tiny magnitudes from underflowing when squared
    scale = np.abs(Y).max(axis=0, initial=0.0)
    scale[scale == 0] = 1.0
    Y = Y / scale
    Z = Y - Y.mean(axis=0)
    Z[:, const] = 0.0
    sd = Z.std(axis=0)
    sd[const] = 1.0
    return Z / sd


def read_table(path, has_header=False):
    """Rectangular numeric table as ``(array, header or None)``.

    Blank lines are skipped. Line numbers in errors are 1-based file lines.
    """
    rows, header = [], None
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if has_header and header is None:
                header = [cell.strip() for cell in row]
                width = len(header)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: line {lineno}, column {col}: "
                                     f"non-numeric value {cell.strip()!r}") from None
                if not np.isfinite(v):
                    raise ParseError(f"{path}: line {lineno}, column {col}: "
                                     f"non-finite value {cell.strip()!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        return np.zeros((0, width or 0)), header
    return np.array(rows, dtype=float), header


def load_csv(path, has_header=False, dt=1.0, zscore_channels=False):
    """Read a time-by-channel CSV into a :class:`Trajectory`.

    Raises
    ------
    ParseError
        Ragged rows, non-numeric or non-finite cells (message names line
        and column).
    DomainError
        Fewer than two data rows.
    """
    Y, _ = read_table(path, has_header)
    if Y.shape[0] < 2:
        raise DomainError(f"{path}: need at least 2 data rows, got {Y.shape[0]}")
    if zscore_channels:
        Y = zscore(Y)
    return Trajectory(Y, dt)


def write_csv(path, table, header=None):
    """Write a 2-D array with full float precision (``%.17g``)."""
    table = np.asarray(table, dtype=float)
    if table.ndim == 1:
        table = table[:, None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            if len(header) != table.shape[1]:
                raise DimensionError("header length does not match the table width")
            w.writerow(header)
        for row in table:
            w.writerow(["%.17g" % v for v in row])


# --------------------------------------------------------------------------
# model archive

@dataclass
class ModelArchive:
    """Decoded archive: the model plus everything stored next to it."""

    variant: str
    model: object
    config: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION


def _model_arrays(model):
    if isinstance(model, DiscreteModel):
        return [("D", model.D), ("f", model.f)]
    if isinstance(model, ContinuousModel):
        return [("G", model.G)]
    raise DomainError(f"cannot archive object of type {type(model).__name__}")


def _infer_variant(model):
    if isinstance(model, ContinuousModel):
        return "continuous"
    return "discrete"


def encode_archive(model, variant=None, config=None, trace=None, meta=None):
    """Archive bytes for ``model``."""
    variant = variant or _infer_variant(model)
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}")
    if (variant == "continuous") != isinstance(model, ContinuousModel):
        raise DomainError(f"variant {variant!r} does not match {type(model).__name__}")
    arrays = _model_arrays(model)
    header = {
        "variant": variant,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
        "config": config or {},
        "trace": trace or {},
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join([MAGIC, struct.pack("<II", FORMAT_VERSION, len(hbytes)), hbytes]
                    + [np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in arrays])
    return body + struct.pack("<I", zlib.crc32(body))


def decode_archive(data):
    """Inverse of :func:`encode_archive`."""
    if len(data) < len(MAGIC) + 12:
        raise IntegrityError("archive is truncated")
    if data[:len(MAGIC)] != MAGIC:
        raise IntegrityError("not a model archive (bad magic bytes)")
    version, hlen = struct.unpack_from("<II", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionError(f"archive format version {version}, this build reads {FORMAT_VERSION}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise IntegrityError("checksum mismatch: archive is truncated or corrupted")
    pos = len(MAGIC) + 8
    try:
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"unreadable archive header: {exc}") from None
    pos += hlen
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        n = int(np.prod(shape)) * 8
        if pos + n > len(data) - 4:
            raise IntegrityError("archive payload is shorter than its header declares")
        arrays[spec["name"]] = np.frombuffer(data, dtype="<f8", count=n // 8, offset=pos).reshape(shape).astype(float)
        pos += n
    if pos != len(data) - 4:
        raise IntegrityError("archive has trailing bytes")
    variant = header["variant"]
    if variant == "continuous":
        model = ContinuousModel(arrays["G"])
    else:
        model = DiscreteModel(arrays["D"], arrays["f"])
    return ModelArchive(variant, model, header["config"], header["trace"], header["meta"], version)


def save_model(model, path, variant=None, config=None, trace=None, meta=None):
    """Write an archive; the file appears atomically (temp file + rename)."""
    data = encode_archive(model, variant, config, trace, meta)
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return path


def load_archive(path):
    with open(path, "rb") as fh:
        return decode_archive(fh.read())


def load_model(path):
    return load_archive(path).model
