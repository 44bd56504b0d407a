"""Block-structured index files and the IO-counting accessor.

A Delaunay graph is persisted as fixed-size blocks of per-point records.
Reading one point's record costs one block fetch on buffer miss; that
fetch count is the cost model every benchmark in this package reports.
The in-memory directory (and the coordinate table loaded with it) is
free: only record/block reads through :meth:`BlockStore.fetch_record`
are charged.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

from .errors import IoFailure, RecordTooLarge, UnknownPoint
from .geom import DelaunayIndex, PointRecord

MAGIC_VORONOI = b"VORIDX1\x00"
MAGIC_RTREE = b"RTRIDX1\x00"

_HEADER = struct.Struct("<8sII")  # magic, block_size, record_count
_DIR_ENTRY = struct.Struct("<IH")  # block_number, byte_offset
_REC_FIXED = struct.Struct("<IddH")  # point_id, x, y, degree

MIN_BLOCK_SIZE = 64
MAX_BLOCK_SIZE = 65536  # byte offsets are u16
DEFAULT_BLOCK_SIZE = 1024
DEFAULT_CACHE_BLOCKS = 64


@dataclass(frozen=True)
class VoronoiFileRecord:
    """Decoded per-point record: coordinates plus Voronoi neighbour ids."""

    point_id: int
    x: float
    y: float
    neighbour_ids: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.neighbour_ids)


def record_size(degree: int) -> int:
    """Serialized record size in bytes: fixed header plus 4 per neighbour."""
    return _REC_FIXED.size + 4 * degree


def _check_block_size(block_size: int) -> None:
    if not (MIN_BLOCK_SIZE <= block_size <= MAX_BLOCK_SIZE):
        raise ValueError(
            f"block_size must be in [{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}], got {block_size}"
        )


def pack_first_fit(sizes: Sequence[int], block_size: int):
    """First-fit placement of record sizes into blocks, in id order.

    Returns (placements, block_count) where placements[i] is the
    (block_number, offset) of record i.  Records never span blocks.
    """
    placements = []
    free = []  # free bytes per block
    first_open = 0
    for i, size in enumerate(sizes):
        if size > block_size:
            raise RecordTooLarge(
                f"record {i} needs {size} bytes, block payload is {block_size}"
            )
        b = first_open
        while b < len(free) and free[b] < size:
            b += 1
        if b == len(free):
            free.append(block_size)
        placements.append((b, block_size - free[b]))
        free[b] -= size
        while first_open < len(free) and free[first_open] < _REC_FIXED.size:
            first_open += 1
    return placements, len(free)


def serialize_index(index: DelaunayIndex, block_size: int = DEFAULT_BLOCK_SIZE) -> bytes:
    """Serialize a Delaunay graph as a `VORIDX1` file image.

    Layout: 16-byte header (magic, u32 block_size, u32 point_count,
    little-endian), then point_count directory entries (u32 block
    number, u16 offset), then the data blocks, zero padded.
    """
    _check_block_size(block_size)
    points = sorted(index.points, key=lambda p: p.id)
    n = len(points)
    if [p.id for p in points] != list(range(n)):
        raise ValueError("index files require dense point ids 0..n-1")

    encoded = []
    for p in points:
        neigh = index.adjacency[p.id]
        if list(neigh) != sorted(set(neigh)) or p.id in neigh:
            raise ValueError(f"adjacency of point {p.id} is not a sorted proper set")
        encoded.append(
            _REC_FIXED.pack(p.id, p.x, p.y, len(neigh))
            + struct.pack(f"<{len(neigh)}I", *neigh)
        )

    placements, block_count = pack_first_fit([len(e) for e in encoded], block_size)
    blocks = [bytearray(block_size) for _ in range(block_count)]
    for rec, (b, off) in zip(encoded, placements):
        blocks[b][off : off + len(rec)] = rec

    out = bytearray()
    out += _HEADER.pack(MAGIC_VORONOI, block_size, n)
    for b, off in placements:
        out += _DIR_ENTRY.pack(b, off)
    for blk in blocks:
        out += blk
    return bytes(out)


def write_index(
    index: DelaunayIndex, path, block_size: int = DEFAULT_BLOCK_SIZE
) -> None:
    """Write the `VORIDX1` file image of a Delaunay graph to ``path``."""
    image = serialize_index(index, block_size)
    try:
        with open(path, "wb") as fh:
            fh.write(image)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _decode_record(buf, off) -> VoronoiFileRecord:
    pid, x, y, degree = _REC_FIXED.unpack_from(buf, off)
    neigh = struct.unpack_from(f"<{degree}I", buf, off + _REC_FIXED.size)
    return VoronoiFileRecord(pid, x, y, neigh)


class BlockFile:
    """Shared machinery: header, directory, LRU block buffer, counters.

    One IO is counted per block fetched on a buffer miss, never on a hit;
    a hit makes the block most-recently-used.  ``cache_blocks=0`` disables
    buffering entirely, which is the strict one-IO-per-record-read
    accounting.  Instances are stateful and must not be shared between
    concurrent searches; open one store per worker instead.
    """

    MAGIC = b""

    def __init__(self, path, cache_blocks: int = DEFAULT_CACHE_BLOCKS):
        if cache_blocks < 0:
            raise ValueError("cache_blocks must be >= 0")
        self.path = path
        self.cache_blocks = cache_blocks
        try:
            self._fh = open(path, "rb")
            header = self._fh.read(_HEADER.size)
        except OSError as exc:
            raise IoFailure(f"cannot open {path}: {exc}") from exc
        if len(header) != _HEADER.size:
            raise IoFailure(f"{path}: truncated header")
        magic, block_size, count = _HEADER.unpack(header)
        if magic != self.MAGIC:
            raise IoFailure(f"{path}: bad magic {magic!r}, expected {self.MAGIC!r}")
        _check_block_size(block_size)
        self.block_size = block_size
        self.record_count = count
        raw_dir = self._fh.read(_DIR_ENTRY.size * count)
        if len(raw_dir) != _DIR_ENTRY.size * count:
            raise IoFailure(f"{path}: truncated directory")
        self.directory = [
            _DIR_ENTRY.unpack_from(raw_dir, i * _DIR_ENTRY.size) for i in range(count)
        ]
        self._data_start = _HEADER.size + _DIR_ENTRY.size * count
        self._buffer = OrderedDict()
        self.io_count = 0
        self.expansion_count = 0

    # -- counters ---------------------------------------------------------

    def reset_counters(self) -> None:
        self.io_count = 0
        self.expansion_count = 0

    def read_counters(self) -> tuple[int, int]:
        """(block IOs, vertex/node expansions) since the last reset."""
        return self.io_count, self.expansion_count

    def note_expansion(self) -> None:
        self.expansion_count += 1

    # -- block access -------------------------------------------------------

    def _read_block(self, bno: int) -> bytes:
        try:
            self._fh.seek(self._data_start + bno * self.block_size)
            raw = self._fh.read(self.block_size)
        except OSError as exc:
            raise IoFailure(f"cannot read block {bno} of {self.path}: {exc}") from exc
        if len(raw) != self.block_size:
            raise IoFailure(f"{self.path}: truncated block {bno}")
        return raw

    def _decode_block(self, raw: bytes, bno: int):
        return raw

    def load_block(self, bno: int):
        buf = self._buffer
        blk = buf.get(bno)
        if blk is not None:
            buf.move_to_end(bno)
            return blk
        blk = self._decode_block(self._read_block(bno), bno)
        self.io_count += 1
        if self.cache_blocks > 0:
            buf[bno] = blk
            if len(buf) > self.cache_blocks:
                buf.popitem(last=False)
        return blk

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class BlockStore(BlockFile):
    """IO-counting accessor over a `VORIDX1` Delaunay-graph file.

    Coordinates of all points are decoded into memory when the store is
    opened and are not charged as IOs, mirroring the free directory;
    only adjacency-record reads count.
    """

    MAGIC = MAGIC_VORONOI

    def __init__(self, path, cache_blocks: int = DEFAULT_CACHE_BLOCKS):
        super().__init__(path, cache_blocks)
        xs = [0.0] * self.record_count
        ys = [0.0] * self.record_count
        try:
            self._fh.seek(self._data_start)
            blob = self._fh.read()
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        bs = self.block_size
        for pid, (bno, off) in enumerate(self.directory):
            base = bno * bs + off
            rid, x, y, _deg = _REC_FIXED.unpack_from(blob, base)
            if rid != pid:
                raise IoFailure(f"{path}: directory points id {pid} at record {rid}")
            xs[pid] = x
            ys[pid] = y
        self.xs = xs
        self.ys = ys

    @property
    def point_count(self) -> int:
        return self.record_count

    def coords(self, point_id: int) -> tuple[float, float]:
        return self.xs[point_id], self.ys[point_id]

    def fetch_record(self, point_id: int) -> VoronoiFileRecord:
        """Decode one point's record, charging one IO on buffer miss."""
        if not 0 <= point_id < self.record_count:
            raise UnknownPoint(f"point id {point_id} not in directory")
        bno, off = self.directory[point_id]
        return _decode_record(self.load_block(bno), off)


def read_index(path) -> DelaunayIndex:
    """Load a `VORIDX1` file back into a DelaunayIndex.

    Points and adjacency are reproduced exactly; triangles are not
    persisted in the file and come back empty.
    """
    with BlockStore(path, cache_blocks=0) as store:
        points = []
        adjacency = {}
        for pid in range(store.point_count):
            rec = store.fetch_record(pid)
            points.append(PointRecord(rec.point_id, rec.x, rec.y))
            adjacency[rec.point_id] = rec.neighbour_ids
    return DelaunayIndex(points=tuple(points), adjacency=adjacency, triangles=())
