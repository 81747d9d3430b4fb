"""Interleaved batch storage, storage accounting and the IBAT file format.

A batch of ``m`` systems with ``n`` unknowns each is one flat float64 buffer
where row ``i`` of system ``j`` lives at ``i * m + j``.  Every sweep step then
touches one contiguous run of ``m`` values.
"""

from __future__ import annotations

import contextlib
import enum
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import MalformedBatchFile, ShapeMismatch

__all__ = [
    "AllocationCounter",
    "FootprintReport",
    "InterleavedBatch",
    "StorageVariant",
    "alloc_reals",
    "count_allocations",
    "deinterleave",
    "footprint",
    "interleave",
    "read_ibat",
    "write_ibat",
]


# ---------------------------------------------------------------------------
# allocation accounting

class AllocationCounter:
    """Tally of real-valued buffers handed out by :func:`alloc_reals`."""

    def __init__(self):
        self.elements = 0
        self.calls = 0
        self.sizes = []

    def _record(self, count):
        self.elements += count
        self.calls += 1
        self.sizes.append(count)


_active_counters: list[AllocationCounter] = []


@contextlib.contextmanager
def count_allocations():
    """Count every library buffer allocated inside the ``with`` block.

    Only storage that the solvers keep (factors, batches, band copies) goes
    through :func:`alloc_reals`, so the tally is directly comparable with
    :func:`footprint`.
    """
    counter = AllocationCounter()
    _active_counters.append(counter)
    try:
        yield counter
    finally:
        _active_counters.remove(counter)


def alloc_reals(count, *, zero=True):
    """Allocate a flat float64 buffer of ``count`` reals and record it."""
    for counter in _active_counters:
        counter._record(count)
    if zero:
        return np.zeros(count, dtype=np.float64)
    return np.empty(count, dtype=np.float64)


# ---------------------------------------------------------------------------
# the batch buffer

@dataclass(eq=False)
class InterleavedBatch:
    """``n x m`` right-hand sides (or solutions) in interleaved order.

    Attributes
    ----------
    data : ndarray
        Flat float64 buffer of length ``n * m``.
    n : int
        Unknowns per system.
    m : int
        Number of systems.
    """

    data: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        self.n = int(self.n)
        self.m = int(self.m)
        if self.n < 1 or self.m < 1:
            raise ShapeMismatch(f"batch needs n, m >= 1, got n={self.n}, m={self.m}")
        if not isinstance(self.data, np.ndarray) or self.data.dtype != np.float64:
            raise TypeError("batch data must be a float64 ndarray")
        if self.data.ndim != 1 or self.data.size != self.n * self.m:
            raise ShapeMismatch(
                f"batch data has shape {self.data.shape}, expected ({self.n * self.m},)"
            )
        if not self.data.flags.c_contiguous:
            raise ShapeMismatch("batch data must be contiguous")

    @classmethod
    def zeros(cls, n, m):
        return cls(alloc_reals(n * m), n, m)

    @classmethod
    def from_rows(cls, rows):
        """Wrap a copy of an ``(n, m)`` array whose column ``j`` is system ``j``."""
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ShapeMismatch(f"expected a 2-D (n, m) array, got shape {rows.shape}")
        n, m = rows.shape
        batch = cls.zeros(n, m)
        batch.view()[...] = rows
        return batch

    @property
    def shape(self):
        return (self.n, self.m)

    def view(self):
        """Writable ``(n, m)`` view; column ``j`` is system ``j``."""
        return self.data.reshape(self.n, self.m)

    def column(self, j):
        """Copy of system ``j`` as a length-``n`` vector."""
        return self.view()[:, j].copy()

    def copy(self):
        out = InterleavedBatch.zeros(self.n, self.m)
        out.data[...] = self.data
        return out


def interleave(systems):
    """Pack ``m`` vectors of length ``n`` into an :class:`InterleavedBatch`.

    Element ``i`` of system ``j`` ends up at flat index ``i * m + j``.

    >>> interleave([[1.0, 2.0], [3.0, 4.0]]).data
    array([1., 3., 2., 4.])
    """
    vectors = [np.asarray(s, dtype=np.float64) for s in systems]
    if not vectors:
        raise ShapeMismatch("need at least one system")
    n = vectors[0].shape[0] if vectors[0].ndim == 1 else -1
    for k, v in enumerate(vectors):
        if v.ndim != 1 or v.shape[0] != n:
            raise ShapeMismatch(f"system {k} has shape {v.shape}, expected ({n},)")
    if n < 1:
        raise ShapeMismatch("systems must have at least one unknown")
    batch = InterleavedBatch.zeros(n, len(vectors))
    rows = batch.view()
    for j, v in enumerate(vectors):
        rows[:, j] = v
    return batch


def deinterleave(batch):
    """Return the systems of ``batch`` as an ``(m, n)`` array (row ``j`` = system ``j``)."""
    return np.ascontiguousarray(batch.view().T)


# ---------------------------------------------------------------------------
# footprint

class StorageVariant(enum.Enum):
    TRI_PER_SYSTEM = "TriPerSystem"
    TRI_SHARED = "TriShared"
    PENT_PER_SYSTEM = "PentPerSystem"
    PENT_SHARED = "PentShared"
    PENT_UNIFORM = "PentUniform"


_BASELINE = {
    StorageVariant.TRI_PER_SYSTEM: StorageVariant.TRI_PER_SYSTEM,
    StorageVariant.TRI_SHARED: StorageVariant.TRI_PER_SYSTEM,
    StorageVariant.PENT_PER_SYSTEM: StorageVariant.PENT_PER_SYSTEM,
    StorageVariant.PENT_SHARED: StorageVariant.PENT_PER_SYSTEM,
    StorageVariant.PENT_UNIFORM: StorageVariant.PENT_PER_SYSTEM,
}


def _element_count(variant, n, m):
    if variant is StorageVariant.TRI_PER_SYSTEM:
        return 4 * n * m
    if variant is StorageVariant.TRI_SHARED:
        return 3 * n + n * m
    if variant is StorageVariant.PENT_PER_SYSTEM:
        return 6 * n * m
    if variant is StorageVariant.PENT_SHARED:
        return 5 * n + n * m
    if variant is StorageVariant.PENT_UNIFORM:
        return 4 * n + n * m
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class FootprintReport:
    variant: StorageVariant
    n: int
    m: int
    element_count: int
    reduction_vs_baseline: float

    @property
    def bytes(self):
        return 8 * self.element_count


def footprint(variant, n, m):
    """Stored reals (bands/factor vectors plus right-hand sides) for a variant.

    Scalars and indices are not counted.  ``reduction_vs_baseline`` compares
    against the per-system layout of the same bandwidth.
    """
    variant = StorageVariant(variant)
    n, m = int(n), int(m)
    if n < 2 or m < 1:
        raise ValueError(f"footprint needs n >= 2 and m >= 1, got n={n}, m={m}")
    count = _element_count(variant, n, m)
    base = _element_count(_BASELINE[variant], n, m)
    return FootprintReport(variant, n, m, count, 1.0 - count / base)


# ---------------------------------------------------------------------------
# IBAT: "IBAT" | u32 version | u64 n | u64 m | n*m little-endian f64

IBAT_MAGIC = b"IBAT"
IBAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def write_ibat(path, batch):
    """Write ``batch`` to ``path`` atomically (temp file + rename)."""
    path = os.fspath(path)
    header = _HEADER.pack(IBAT_MAGIC, IBAT_VERSION, batch.n, batch.m)
    payload = batch.data.astype("<f8", copy=False).tobytes()
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".ibat-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def read_ibat(path):
    """Read an IBAT file; raises :class:`MalformedBatchFile` on any defect."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise MalformedBatchFile(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, m = _HEADER.unpack_from(raw)
    if magic != IBAT_MAGIC:
        raise MalformedBatchFile(f"{path}: bad magic {magic!r}")
    if version != IBAT_VERSION:
        raise MalformedBatchFile(f"{path}: unsupported version {version}")
    if n < 1 or m < 1:
        raise MalformedBatchFile(f"{path}: empty shape n={n}, m={m}")
    expected = _HEADER.size + 8 * n * m
    if len(raw) != expected:
        raise MalformedBatchFile(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, expected {8 * n * m}"
        )
    batch = InterleavedBatch.zeros(n, m)
    batch.data[...] = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return batch
