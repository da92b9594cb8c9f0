"""
Dense float32 tensors and the FDT1 binary container.

Layout of an FDT1 file::

    b"FDT1" | u32 LE header length | UTF-8 JSON header | zero pad to 8 | blobs

Blob offsets in the header are relative to the first byte after the header
padding; every blob starts on an 8-byte boundary and holds little-endian
float32 values in row-major order.
"""

from __future__ import annotations

import json

import logging

import math

import struct

from dataclasses import dataclass

from pathlib import Path

from typing import Iterable, Mapping, Optional, Union

import numpy as np

from common.errors import ContainerError, ShapeError

logger = logging.getLogger(__name__)

MAGIC = b"FDT1"

ALIGN = 8

DTYPES = {"f32": np.dtype("<f4")}

MAX_RANK = 3

PathLike = Union[str, Path]


def check_shape(shape) -> None:

    if not 1 <= len(shape) <= MAX_RANK:

        raise ShapeError(f"tensor rank must be 1..{MAX_RANK}, got {len(shape)}")

    if any(d < 1 for d in shape):

        raise ShapeError(f"tensor dims must be >= 1, got {list(shape)}")


def as_tensor(array) -> np.ndarray:

    """float32, C-contiguous, read-only. Rank 1..3, every dim >= 1.

    Writable input is copied; an array that already satisfies all of this is
    returned as is.
    """

    if (isinstance(array, np.ndarray) and array.dtype == np.float32
            and array.flags.c_contiguous and not array.flags.writeable):

        check_shape(array.shape)

        return array

    out = np.array(array, dtype=np.float32, order="C")

    check_shape(out.shape)

    out.flags.writeable = False

    return out


@dataclass(frozen=True)

class TensorEntry:

    name: str

    dtype: str

    shape: tuple[int, ...]

    offset: int

    nbytes: int

    def to_dict(self) -> dict:

        return {
            "name": self.name,
            "dtype": self.dtype,
            "shape": list(self.shape),
            "offset": self.offset,
            "nbytes": self.nbytes,
        }


def _pad_to(n: int, align: int = ALIGN) -> int:

    return (-n) % align


def container_write(
    path: PathLike,
    entries: Iterable[tuple[str, np.ndarray]],
    meta: Optional[Mapping[str, str]] = None,
) -> None:

    entries = list(entries)

    if not entries:

        raise ContainerError("no tensors")

    names = [name for name, _ in entries]

    if any(not name for name in names):

        raise ContainerError("tensor names must be non-empty")

    if len(set(names)) != len(names):

        dup = sorted({n for n in names if names.count(n) > 1})

        raise ContainerError(f"duplicate tensor name: {', '.join(dup)}")

    meta = {str(k): str(v) for k, v in (meta or {}).items()}

    blobs: list[bytes] = []

    table: list[TensorEntry] = []

    offset = 0

    for name, value in entries:

        arr = np.ascontiguousarray(value, dtype=DTYPES["f32"])

        check_shape(arr.shape)

        blob = arr.tobytes()

        table.append(TensorEntry(name, "f32", tuple(arr.shape), offset, len(blob)))

        blobs.append(blob + b"\x00" * _pad_to(len(blob)))

        offset += len(blobs[-1])

    header = json.dumps(
        {"tensors": [e.to_dict() for e in table], "meta": meta},
        ensure_ascii=False, separators=(",", ":"),
    ).encode("utf-8")

    prefix = MAGIC + struct.pack("<I", len(header)) + header

    prefix += b"\x00" * _pad_to(len(prefix))

    with open(path, "wb") as f:

        f.write(prefix)

        for blob in blobs:

            f.write(blob)

    logger.debug("wrote %d tensors to %s", len(table), path)


def _parse_entry(raw) -> TensorEntry:

    if not isinstance(raw, dict):

        raise ContainerError("corrupt container: tensor entry is not an object")

    try:

        name = raw["name"]

        dtype = raw["dtype"]

        shape = tuple(raw["shape"])

        offset = raw["offset"]

        nbytes = raw["nbytes"]

    except (KeyError, TypeError) as e:

        raise ContainerError(f"corrupt container: bad tensor entry ({e})") from None

    if not isinstance(name, str) or not name:

        raise ContainerError("corrupt container: bad tensor name")

    if not isinstance(dtype, str) or dtype not in DTYPES:

        raise ContainerError(f"unsupported dtype: {dtype!r}")

    ints = (offset, nbytes) + shape

    if not shape or any(not isinstance(v, int) or isinstance(v, bool) for v in ints):

        raise ContainerError(f"corrupt container: bad geometry for '{name}'")

    if len(shape) > MAX_RANK or any(d < 1 for d in shape) or offset < 0:

        raise ContainerError(f"corrupt container: bad geometry for '{name}'")

    if nbytes != math.prod(shape) * DTYPES[dtype].itemsize:

        raise ContainerError(f"corrupt container: size mismatch for '{name}'")

    if offset % ALIGN:

        raise ContainerError(f"corrupt container: misaligned blob '{name}'")

    return TensorEntry(name, dtype, shape, offset, nbytes)


def container_read(path: PathLike) -> tuple[dict[str, np.ndarray], dict[str, str]]:

    buf = Path(path).read_bytes()

    if len(buf) < 8 or buf[:4] != MAGIC:

        raise ContainerError("not an FDT1 file")

    (header_len,) = struct.unpack_from("<I", buf, 4)

    header_end = 8 + header_len

    if header_end > len(buf):

        raise ContainerError("corrupt container: truncated header")

    try:

        header = json.loads(buf[8:header_end].decode("utf-8"))

    except (UnicodeDecodeError, json.JSONDecodeError) as e:

        raise ContainerError(f"corrupt container: bad header ({e})") from None

    if not isinstance(header, dict) or not isinstance(header.get("tensors"), list):

        raise ContainerError("corrupt container: header has no tensor table")

    meta = header.get("meta", {})

    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):

        raise ContainerError("corrupt container: meta must map str to str")

    data_start = header_end + _pad_to(header_end)

    data_len = len(buf) - data_start

    table = [_parse_entry(raw) for raw in header["tensors"]]

    names = [e.name for e in table]

    if len(set(names)) != len(names):

        raise ContainerError("corrupt container: duplicate tensor name")

    spans = sorted((e.offset, e.offset + e.nbytes) for e in table)

    for (_, end), (start, _) in zip(spans, spans[1:]):

        if start < end:

            raise ContainerError("corrupt container: overlapping blobs")

    tensors: dict[str, np.ndarray] = {}

    for e in table:

        if data_len < 0 or e.offset + e.nbytes > data_len:

            raise ContainerError(f"corrupt container: blob '{e.name}' is truncated")

        arr = np.frombuffer(
            buf, dtype=DTYPES[e.dtype], count=e.nbytes // 4, offset=data_start + e.offset
        ).reshape(e.shape)

        tensors[e.name] = as_tensor(arr)

    return tensors, dict(meta)
