"""Binary checkpoint files (layout documented in docs/checkpoint_format.md).

All integers are little-endian::

    magic        8 bytes   b"SURFCKPT"
    version      u32       FORMAT_VERSION
    fingerprint  32 bytes  sha256 digest of the NetworkSpec canonical form
    count        u32       number of table entries
    table        count x entry
        role     u8        0 = learnable parameter, 1 = buffer
        path_len u16, path utf-8 bytes
        dtype    u8        1 = float32, 2 = float64
        ndim     u8, dims  ndim x u32
        offset   u64       byte offset from the start of the data section
        nbytes   u64
    data         concatenated little-endian arrays
"""
from __future__ import annotations

import io
import os
import struct
from pathlib import Path

import numpy as np

from .spec import NetworkSpec
from .state import NetworkState

MAGIC = b"SURFCKPT"
FORMAT_VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODES = {np.dtype("float32"): 1, np.dtype("float64"): 2}


class CheckpointError(ValueError):
    pass


def _entries(state: NetworkState):
    for role, table in ((0, state.params), (1, state.buffers)):
        for path, arr in table.items():
            yield role, path, arr


def checkpoint_bytes(state: NetworkState) -> bytes:
    head = io.BytesIO()
    data = io.BytesIO()
    entries = list(_entries(state))
    head.write(MAGIC)
    head.write(struct.pack("<I", FORMAT_VERSION))
    head.write(bytes.fromhex(state.fingerprint))
    head.write(struct.pack("<I", len(entries)))
    for role, path, arr in entries:
        code = _CODES.get(arr.dtype)
        if code is None:
            raise CheckpointError(f"{path}: unsupported dtype {arr.dtype}")
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()
        name = path.encode("utf-8")
        head.write(struct.pack("<BH", role, len(name)))
        head.write(name)
        head.write(struct.pack("<BB", code, arr.ndim))
        head.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        head.write(struct.pack("<QQ", data.tell(), len(raw)))
        data.write(raw)
    return head.getvalue() + data.getvalue()


def save_checkpoint(state: NetworkState, path) -> Path:
    path = Path(path)
    payload = checkpoint_bytes(state)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return path


def _read(buf: memoryview, pos: int, fmt: str):
    size = struct.calcsize(fmt)
    if pos + size > len(buf):
        raise CheckpointError("truncated checkpoint")
    return struct.unpack_from(fmt, buf, pos), pos + size


def load_checkpoint(path, spec: NetworkSpec | None = None) -> NetworkState:
    """Read a checkpoint; when ``spec`` is given its fingerprint must match the file's."""
    raw = Path(path).read_bytes()
    buf = memoryview(raw)
    if raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    (version,), pos = _read(buf, 8, "<I")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    fingerprint = raw[pos : pos + 32].hex()
    pos += 32
    if spec is not None and spec.fingerprint() != fingerprint:
        raise CheckpointError(
            f"spec fingerprint mismatch: file has {fingerprint}, network is {spec.fingerprint()}"
        )
    (count,), pos = _read(buf, pos, "<I")
    table = []
    for _ in range(count):
        (role, nlen), pos = _read(buf, pos, "<BH")
        name = bytes(buf[pos : pos + nlen]).decode("utf-8")
        pos += nlen
        (code, ndim), pos = _read(buf, pos, "<BB")
        dims, pos = _read(buf, pos, f"<{ndim}I")
        (offset, nbytes), pos = _read(buf, pos, "<QQ")
        table.append((role, name, code, dims, offset, nbytes))
    state = NetworkState(fingerprint, mode="eval")
    for role, name, code, dims, offset, nbytes in table:
        start = pos + offset
        if start + nbytes > len(raw):
            raise CheckpointError(f"{path}: data for {name} runs past end of file")
        dt = _DTYPES[code]
        arr = np.frombuffer(raw, dtype=dt, count=nbytes // dt.itemsize, offset=start)
        arr = arr.reshape(dims).astype(dt.newbyteorder("="), copy=True)
        (state.params if role == 0 else state.buffers)[name] = arr
    if spec is not None:
        want = list(spec.parameter_shapes().items())
        got = [(k, v.shape) for k, v in state.params.items()]
        if want != got:
            raise CheckpointError(f"{path}: parameter table does not match {spec.name}")
    return state
