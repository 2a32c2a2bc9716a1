"""NVW1 tensor container and the engine WeightSet.

Binary layout (all little-endian):

    magic   "NVW1"
    version u8 (=1)
    count   u32
    per tensor:
        name    u16 length + UTF-8 bytes
        dtype   u8  (0 = float32)
        rank    u8
        dims    rank x u32
        layout  u8  (0 = dense, 1 = 4x4 block-sparse, 2 = block-diagonal)
        layout 1: n_blocks u32, n_blocks x u32 ascending row-major block ids,
                  then n_blocks x 16 float32 block payloads
        layout 2: n_blocks u32, then the diagonal blocks back to back
        layout 0: prod(dims) float32 values, row-major
    metadata:
        count   u32
        per item: key u16+UTF-8, value u16+UTF-8

The same container carries model weights, decoder state snapshots and golden
test vectors (tensors named "in.*"/"out.*" plus a tolerance metadata key), so
one parser serves all three.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingTensorError, WeightFormatError
from .kernels import BLOCK, BlockDiagonalMatrix, BlockSparseMatrix

MAGIC = b"NVW1"
VERSION = 1

LAYOUT_DENSE = 0
LAYOUT_BLOCK_SPARSE = 1
LAYOUT_BLOCK_DIAGONAL = 2

Entry = np.ndarray | BlockSparseMatrix | BlockDiagonalMatrix


def entry_shape(entry: Entry) -> tuple[int, ...]:
    return tuple(entry.shape)


def entry_sparsity(entry: Entry) -> float:
    """Fraction of zero weights implied by the storage layout (dense -> 0)."""
    if isinstance(entry, (BlockSparseMatrix, BlockDiagonalMatrix)):
        return entry.sparsity
    return 0.0


@dataclass
class WeightSet:
    """Named tensors plus string metadata."""

    tensors: dict[str, Entry] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def get(self, name: str, shape: tuple[int, ...] | None = None) -> Entry:
        """Fetch a tensor, raising MissingTensorError naming the offender."""
        if name not in self.tensors:
            raise MissingTensorError(name)
        entry = self.tensors[name]
        if shape is not None and entry_shape(entry) != tuple(shape):
            raise MissingTensorError(
                name, f"expected shape {tuple(shape)}, found {entry_shape(entry)}"
            )
        return entry

    def dense(self, name: str, shape: tuple[int, ...] | None = None) -> np.ndarray:
        entry = self.get(name, shape)
        if isinstance(entry, (BlockSparseMatrix, BlockDiagonalMatrix)):
            return entry.to_dense()
        return entry

    def meta_float(self, key: str, default: float) -> float:
        return float(self.metadata.get(key, default))

    def meta_int(self, key: str, default: int) -> int:
        return int(self.metadata.get(key, default))

    def names(self) -> list[str]:
        return sorted(self.tensors)


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise WeightFormatError("string too long for container")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.blob):
            raise WeightFormatError(f"truncated container while reading {what}")
        out = self.blob[self.off : self.off + n]
        self.off += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def string(self, what: str) -> str:
        return self.take(self.u16(what), what).decode("utf-8")

    def f32(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(4 * count, what), dtype="<f4").copy()


def write_weights_bytes(ws: WeightSet) -> bytes:
    out = [MAGIC, struct.pack("<BI", VERSION, len(ws.tensors))]
    for name in sorted(ws.tensors):
        entry = ws.tensors[name]
        out.append(_pack_str(name))
        if isinstance(entry, BlockSparseMatrix):
            dims = (entry.rows, entry.cols)
            out.append(struct.pack("<BB", 0, len(dims)))
            out.append(struct.pack(f"<{len(dims)}I", *dims))
            out.append(struct.pack("<B", LAYOUT_BLOCK_SPARSE))
            grid_cols = entry.cols // BLOCK
            ids = entry.block_rows * grid_cols + entry.block_cols
            order = np.argsort(ids, kind="stable")
            out.append(struct.pack("<I", entry.n_blocks))
            out.append(ids[order].astype("<u4").tobytes())
            out.append(entry.blocks[order].astype("<f4").tobytes())
        elif isinstance(entry, BlockDiagonalMatrix):
            dims = entry.shape
            out.append(struct.pack("<BB", 0, len(dims)))
            out.append(struct.pack(f"<{len(dims)}I", *dims))
            out.append(struct.pack("<BI", LAYOUT_BLOCK_DIAGONAL, entry.n_blocks))
            out.append(entry.blocks.astype("<f4").tobytes())
        else:
            arr = np.asarray(entry, dtype=np.float32)
            dims = arr.shape if arr.ndim else (1,)
            out.append(struct.pack("<BB", 0, len(dims)))
            out.append(struct.pack(f"<{len(dims)}I", *dims))
            out.append(struct.pack("<B", LAYOUT_DENSE))
            out.append(arr.astype("<f4").tobytes())
    out.append(struct.pack("<I", len(ws.metadata)))
    for key in sorted(ws.metadata):
        out.append(_pack_str(key))
        out.append(_pack_str(ws.metadata[key]))
    return b"".join(out)


def read_weights_bytes(blob: bytes) -> WeightSet:
    r = _Reader(blob)
    if r.take(4, "magic") != MAGIC:
        raise WeightFormatError(f"bad magic {blob[:4]!r}")
    version = r.u8("version")
    if version != VERSION:
        raise WeightFormatError(f"unsupported container version {version}")
    count = r.u32("tensor count")
    tensors: dict[str, Entry] = {}
    for _ in range(count):
        name = r.string("tensor name")
        dtype = r.u8(f"{name} dtype")
        if dtype != 0:
            raise WeightFormatError(f"tensor '{name}': unsupported dtype tag {dtype}")
        rank = r.u8(f"{name} rank")
        dims = tuple(r.u32(f"{name} dim") for _ in range(rank))
        layout = r.u8(f"{name} layout")
        if layout == LAYOUT_DENSE:
            n = int(np.prod(dims)) if dims else 1
            tensors[name] = r.f32(n, f"{name} data").reshape(dims)
        elif layout == LAYOUT_BLOCK_SPARSE:
            if len(dims) != 2:
                raise WeightFormatError(f"tensor '{name}': block-sparse needs rank 2")
            n_blocks = r.u32(f"{name} block count")
            ids = np.frombuffer(r.take(4 * n_blocks, f"{name} block ids"), dtype="<u4").astype(np.int64)
            data = r.f32(n_blocks * BLOCK * BLOCK, f"{name} blocks").reshape(-1, BLOCK, BLOCK)
            grid_cols = dims[1] // BLOCK
            tensors[name] = BlockSparseMatrix(dims[0], dims[1], ids // grid_cols, ids % grid_cols, data)
        elif layout == LAYOUT_BLOCK_DIAGONAL:
            if len(dims) != 2 or dims[0] != dims[1]:
                raise WeightFormatError(f"tensor '{name}': block-diagonal needs a square matrix")
            n_blocks = r.u32(f"{name} block count")
            if n_blocks == 0 or dims[0] % n_blocks:
                raise WeightFormatError(f"tensor '{name}': {n_blocks} blocks do not divide {dims[0]}")
            b = dims[0] // n_blocks
            data = r.f32(n_blocks * b * b, f"{name} blocks").reshape(n_blocks, b, b)
            tensors[name] = BlockDiagonalMatrix(data)
        else:
            raise WeightFormatError(f"tensor '{name}': unknown layout tag {layout}")
    meta_count = r.u32("metadata count")
    metadata = {}
    for _ in range(meta_count):
        key = r.string("metadata key")
        metadata[key] = r.string("metadata value")
    if r.off != len(blob):
        raise WeightFormatError("trailing bytes after metadata")
    return WeightSet(tensors, metadata)


def write_weights(path, ws: WeightSet) -> None:
    with open(path, "wb") as fh:
        fh.write(write_weights_bytes(ws))


def read_weights(path) -> WeightSet:
    with open(path, "rb") as fh:
        return read_weights_bytes(fh.read())
