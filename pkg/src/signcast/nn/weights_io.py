"""SLW1 weight container: the on-disk format for trained parameters.

Layout (everything little-endian, no padding, no trailing bytes):

    magic   4 bytes  "SLW1"
    version u16      1
    dtype   u8       0 = float32
    count   u32      number of records
    record  u16 name length, UTF-8 name,
            u8 rank, rank * u32 dims,
            prod(dims) * f32 values

Each failure mode gets its own exception so callers can tell a corrupt
download from a model/architecture mismatch.
"""

import struct

import numpy as np

MAGIC = b"SLW1"
VERSION = 1
DTYPE_F32 = 0

# guard against absurd allocations from corrupt headers
_MAX_ELEMENTS = 1 << 31


class WeightFormatError(ValueError):
    """Base class for SLW1 read/write failures."""


class BadMagicError(WeightFormatError):
    pass


class VersionMismatchError(WeightFormatError):
    pass


class UnknownDtypeError(WeightFormatError):
    pass


class TruncatedFileError(WeightFormatError):
    pass


class TrailingDataError(WeightFormatError):
    pass


class RecordError(WeightFormatError):
    """Malformed record: empty/duplicate name, oversized dims, bad UTF-8."""


class ShapeMismatchError(WeightFormatError):
    """Loaded tensors do not fit the target model's parameter shapes."""


class ModelWeights:
    """Ordered (name, tensor) records as stored in an SLW1 container."""

    def __init__(self, records, version=VERSION, dtype_tag=DTYPE_F32):
        names = [name for name, _ in records]
        if len(set(names)) != len(names):
            raise RecordError(f"duplicate record names: {names}")
        self.records = [(name, np.asarray(arr)) for name, arr in records]
        self.version = version
        self.dtype_tag = dtype_tag

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        if len(self.records) != len(other.records):
            return False
        return all(
            a == b and x.shape == y.shape and np.array_equal(x, y)
            for (a, x), (b, y) in zip(self.records, other.records)
        )


def save_weights(weights):
    """Serialize a ModelWeights (or a model exposing .state()) to bytes."""
    if hasattr(weights, "state"):
        weights = weights.state()
    chunks = [MAGIC, struct.pack("<HB", VERSION, DTYPE_F32),
              struct.pack("<I", len(weights.records))]
    for name, arr in weights.records:
        encoded = name.encode("utf-8")
        if not encoded or len(encoded) > 0xFFFF:
            raise RecordError(f"record name {name!r} is empty or too long")
        arr = np.asarray(arr)
        if arr.ndim > 0xFF:
            raise RecordError(f"{name}: rank {arr.ndim} exceeds format limit")
        if not np.all(np.isfinite(arr)):
            raise RecordError(f"{name}: non-finite parameter values")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise TruncatedFileError(
                f"file ends inside {what} (need {n} bytes at offset {self.pos})"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_weights(data):
    """Parse SLW1 bytes into a ModelWeights; strict about every byte."""
    r = _Reader(bytes(data))
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version, dtype_tag) = r.unpack("<HB", "header")
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version}")
    if dtype_tag != DTYPE_F32:
        raise UnknownDtypeError(f"unknown dtype tag {dtype_tag}")
    (count,) = r.unpack("<I", "record count")
    records = []
    seen = set()
    for _ in range(count):
        (name_len,) = r.unpack("<H", "record name length")
        if name_len == 0:
            raise RecordError("empty record name")
        try:
            name = r.take(name_len, "record name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise RecordError(f"record name is not valid UTF-8: {exc}") from exc
        if name in seen:
            raise RecordError(f"duplicate record name {name!r}")
        seen.add(name)
        (rank,) = r.unpack("<B", f"rank of {name!r}")
        dims = r.unpack(f"<{rank}I", f"dims of {name!r}") if rank else ()
        n_elem = 1
        for d in dims:
            n_elem *= d
        if n_elem > _MAX_ELEMENTS:
            raise RecordError(f"{name}: {n_elem} elements exceeds format limit")
        raw = r.take(4 * n_elem, f"values of {name!r}")
        arr = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        records.append((name, arr))
    if r.pos != len(r.data):
        raise TrailingDataError(f"{len(r.data) - r.pos} trailing bytes after last record")
    return ModelWeights(records)


def write_weights_file(path, weights):
    with open(path, "wb") as fh:
        fh.write(save_weights(weights))


def read_weights_file(path):
    with open(path, "rb") as fh:
        return load_weights(fh.read())
