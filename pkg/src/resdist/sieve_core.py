"""Segmented sieves for per-integer arithmetic data.

One pass over a segment ``[lo, hi]`` divides every prime power ``p^k <= hi``
(``p <= sqrt(hi)``) out of a residual cofactor while accumulating

* ``big_a``  -- A(n), the sum of prime factors with multiplicity,
* ``phi``    -- Euler's totient,
* ``p1, p2`` -- the largest and second-largest prime factors (with multiplicity),
* ``max_sq`` -- the largest prime whose square divides n.

Whatever survives in the cofactor is a single prime exceeding ``sqrt(hi)``.
"""
from __future__ import annotations

import hashlib
import math
import multiprocessing
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, ResourceLimitError

DEFAULT_SEGMENT_SIZE = 1 << 20
MAX_N = 1 << 40
DEFAULT_TABLE_BUDGET = 512 * 1024 * 1024  # bytes

CACHE_MAGIC = b"AEQD"
CACHE_VERSION = 1
_RECORD_DTYPE = np.dtype("<u8")
FIELDS = ("n", "big_a", "phi", "p1", "p2", "max_sq")


# --------------------------------------------------------------------------
# primes

def _small_primes(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.flatnonzero(sieve).astype(np.int64)


def primes_in_range(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Primes in ``[lo, hi]``; ``base`` must contain every prime <= sqrt(hi)."""
    lo = max(lo, 2)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(hi - lo + 1, dtype=bool)
    r = math.isqrt(hi)
    for p in base:
        p = int(p)
        if p > r:
            break
        start = max(p * p, -(-lo // p) * p)
        flags[start - lo :: p] = False
    return np.flatnonzero(flags).astype(np.int64) + lo


@dataclass(frozen=True)
class PrimeTable:
    """All primes up to ``limit`` with pi(x) lookups."""

    limit: int
    primes: np.ndarray
    pi_checkpoints: dict[int, int] = field(default_factory=dict)

    def pi(self, x: float) -> int:
        if x > self.limit:
            raise PreconditionError(f"pi({x}) requested but table limit is {self.limit}")
        if x < 2:
            return 0
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def primes_upto(self, x: float) -> np.ndarray:
        return self.primes[: self.pi(x)]

    def __len__(self) -> int:
        return len(self.primes)


_table_cache: dict[int, PrimeTable] = {}


def estimated_table_bytes(limit: int) -> int:
    # 8 bytes per prime (1.26 x/log x bounds pi(x) above) plus one sieve segment
    count = 1.26 * limit / math.log(max(limit, 3)) + 10
    return int(8 * count) + min(limit, DEFAULT_SEGMENT_SIZE)


def build_prime_table(limit: int, memory_budget: int = DEFAULT_TABLE_BUDGET) -> PrimeTable:
    if limit < 2:
        raise DomainError("build_prime_table requires limit >= 2")
    need = estimated_table_bytes(limit)
    if need > memory_budget:
        raise ResourceLimitError(
            f"prime table to {limit} needs ~{need >> 20} MiB, budget is {memory_budget >> 20} MiB"
        )
    cached = _table_cache.get(limit)
    if cached is not None:
        return cached
    base = _small_primes(math.isqrt(limit))
    chunks = []
    lo = 2
    while lo <= limit:
        hi = min(limit, lo + DEFAULT_SEGMENT_SIZE - 1)
        chunks.append(primes_in_range(lo, hi, base))
        lo = hi + 1
    primes = np.concatenate(chunks)
    primes.setflags(write=False)
    checkpoints = {}
    c = 10
    while c <= limit:
        checkpoints[c] = int(np.searchsorted(primes, c, side="right"))
        c *= 10
    checkpoints[limit] = len(primes)
    table = PrimeTable(limit, primes, checkpoints)
    if limit <= 10**8:
        _table_cache[limit] = table
    return table


# --------------------------------------------------------------------------
# per-integer records

@dataclass(frozen=True)
class SegmentRecord:
    n: int
    big_a: int
    phi: int
    p1: int
    p2: int
    max_sq: int


@dataclass
class SegmentArrays:
    """Column-wise records for every n in [lo, hi]."""

    lo: int
    hi: int
    big_a: np.ndarray
    phi: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    max_sq: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def records(self) -> list[SegmentRecord]:
        cols = [self.n.tolist(), self.big_a.tolist(), self.phi.tolist(),
                self.p1.tolist(), self.p2.tolist(), self.max_sq.tolist()]
        return [SegmentRecord(*row) for row in zip(*cols)]

    def to_bytes(self) -> bytes:
        stacked = np.stack([self.n, self.big_a, self.phi, self.p1, self.p2, self.max_sq], axis=1)
        return stacked.astype(_RECORD_DTYPE).tobytes()


def _check_range(lo: int, hi: int) -> None:
    if lo < 1 or hi < lo:
        raise DomainError(f"need 1 <= lo <= hi, got lo={lo}, hi={hi}")
    if hi > MAX_N:
        raise DomainError(f"hi={hi} exceeds the 2^40 range cap")


def sieve_arrays(lo: int, hi: int, primes: PrimeTable | np.ndarray) -> SegmentArrays:
    _check_range(lo, hi)
    r = math.isqrt(hi)
    if isinstance(primes, PrimeTable):
        if primes.limit < r:
            raise PreconditionError(f"prime table limit {primes.limit} < isqrt({hi}) = {r}")
        base = primes.primes
    else:
        base = primes
        if r >= 2 and (len(base) == 0 or base[-1] < r):
            if np.searchsorted(base, r, side="right") < _small_primes(r).size:
                raise PreconditionError(f"supplied primes do not reach isqrt({hi}) = {r}")

    n = np.arange(lo, hi + 1, dtype=np.int64)
    resid = n.copy()
    big_a = np.zeros_like(n)
    phi = n.copy()
    p1 = np.ones_like(n)
    p2 = np.ones_like(n)
    max_sq = np.ones_like(n)

    for p in base:
        p = int(p)
        if p > r:
            break
        pk, k = p, 1
        while pk <= hi:
            sl = slice((-lo) % pk, None, pk)
            resid[sl] //= p
            big_a[sl] += p
            p2[sl] = p1[sl]
            p1[sl] = p
            if k == 1:
                phi[sl] = phi[sl] // p * (p - 1)
            elif k == 2:
                # primes ascend, so the last write is the largest
                max_sq[sl] = p
            pk *= p
            k += 1

    big = resid > 1
    rest = resid[big]
    big_a[big] += rest
    phi[big] = phi[big] // rest * (rest - 1)
    p2[big] = p1[big]
    p1[big] = rest
    return SegmentArrays(lo, hi, big_a, phi, p1, p2, max_sq)


def sieve_segment(lo: int, hi: int, table: PrimeTable) -> list[SegmentRecord]:
    return sieve_arrays(lo, hi, table).records()


def segment_bounds(lo: int, hi: int, size: int = DEFAULT_SEGMENT_SIZE) -> Iterator[tuple[int, int]]:
    if size < 1:
        raise DomainError("segment size must be positive")
    while lo <= hi:
        top = min(hi, lo + size - 1)
        yield lo, top
        lo = top + 1


# --------------------------------------------------------------------------
# scanning with mergeable accumulators

class Accumulator:
    """Order-independent reduction over segments.

    Subclasses implement ``fresh`` (an empty copy with the same parameters),
    ``update`` (consume one :class:`SegmentArrays`) and ``merge``.
    """

    def fresh(self) -> "Accumulator":
        raise NotImplementedError

    def update(self, seg: SegmentArrays) -> None:
        raise NotImplementedError

    def merge(self, other: "Accumulator") -> None:
        raise NotImplementedError


@dataclass
class SmoothCounter(Accumulator):
    z: int
    count: int = 0

    def fresh(self):
        return SmoothCounter(self.z)

    def update(self, seg):
        self.count += int(np.count_nonzero(seg.p1 <= self.z))

    def merge(self, other):
        self.count += other.count


@dataclass
class RecordDigest(Accumulator):
    """SHA-256 per segment of the cache-format bytes, plus exact column totals."""

    segments: dict[int, tuple[int, str]] = field(default_factory=dict)
    totals: dict[str, int] = field(default_factory=lambda: dict.fromkeys(FIELDS[1:], 0))

    def fresh(self):
        return RecordDigest()

    def update(self, seg):
        self.segments[seg.lo] = (seg.hi, hashlib.sha256(seg.to_bytes()).hexdigest())
        for name in FIELDS[1:]:
            # a segment of <= 2^20 values below 2^40 cannot overflow int64
            self.totals[name] += int(getattr(seg, name).sum(dtype=np.int64))

    def merge(self, other):
        self.segments.update(other.segments)
        for k, v in other.totals.items():
            self.totals[k] += v

    def hexdigest(self) -> str:
        h = hashlib.sha256()
        for lo in sorted(self.segments):
            hi, d = self.segments[lo]
            h.update(f"{lo}:{hi}:{d};".encode())
        return h.hexdigest()


_worker_primes: np.ndarray | None = None


def _init_worker(primes: np.ndarray) -> None:
    global _worker_primes
    _worker_primes = primes


def _scan_one(args):
    lo, hi, templates = args
    seg = sieve_arrays(lo, hi, _worker_primes)
    parts = [t.fresh() for t in templates]
    for acc in parts:
        acc.update(seg)
    return parts


def scan(
    x: int,
    accumulators: Sequence[Accumulator],
    *,
    lo: int = 1,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
    primes: np.ndarray | None = None,
) -> Sequence[Accumulator]:
    """Feed every segment of ``[lo, x]`` to each accumulator; returns them merged.

    With ``threads > 1`` segments go to a process pool; each worker fills
    fresh copies that are merged back here. All shipped accumulators merge by
    integer addition or keyed union, so results do not depend on scheduling.
    """
    _check_range(lo, x)
    if primes is None:
        primes = _small_primes(math.isqrt(x))
    bounds = list(segment_bounds(lo, x, segment_size))
    if threads <= 1 or len(bounds) == 1:
        for a, b in bounds:
            seg = sieve_arrays(a, b, primes)
            for acc in accumulators:
                acc.update(seg)
        return accumulators

    templates = [acc.fresh() for acc in accumulators]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx,
                             initializer=_init_worker, initargs=(primes,)) as pool:
        for parts in pool.map(_scan_one, [(a, b, templates) for a, b in bounds]):
            for acc, part in zip(accumulators, parts):
                acc.merge(part)
    return accumulators


def psi_smooth_count(x: int, z: int, *, segment_size: int = DEFAULT_SEGMENT_SIZE, threads: int = 1) -> int:
    """Psi(x, z): the number of n <= x with no prime factor above z (n = 1 included)."""
    x, z = math.floor(x), math.floor(z)
    if x < 1 or z < 1:
        raise DomainError("psi_smooth_count requires x >= 1 and z >= 1")
    if z >= x:
        return x
    counter = SmoothCounter(z)
    scan(x, [counter], segment_size=segment_size, threads=threads)
    return counter.count


# --------------------------------------------------------------------------
# factorization of individual n

def factorize(n: int, table: PrimeTable) -> list[tuple[int, int]]:
    """Trial division by the table's primes; the table must reach isqrt(n)."""
    if n < 1:
        raise DomainError("factorize requires n >= 1")
    if table.limit < math.isqrt(n):
        raise PreconditionError(f"table limit {table.limit} cannot factor {n}")
    out = []
    for p in _primes_list(table):
        if p * p > n:
            break
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            out.append((p, k))
    if n > 1:
        out.append((n, 1))
    return out


_list_cache: dict[int, list[int]] = {}


def _primes_list(table: PrimeTable) -> list[int]:
    key = id(table.primes)
    lst = _list_cache.get(key)
    if lst is None:
        # n <= 2^40 never needs a trial divisor above 2^20
        cut = int(np.searchsorted(table.primes, 1 << 20, side="right"))
        lst = _list_cache[key] = table.primes[:cut].tolist()
    return lst


@dataclass(frozen=True)
class Decomposition:
    """``n = m * prod(tail)`` with ``P(m) <= y < tail[0] < ... < tail[-1]`` and ``tail[-1] > z``."""

    m: int
    tail: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.m * math.prod(self.tail)


def decompose(n: int, y: float, z: float, table: PrimeTable) -> Decomposition | None:
    """Split off the y-smooth part of n.

    Returns None when n is z-smooth or some prime above y divides n twice;
    otherwise the (unique) decomposition.
    """
    m = 1
    tail = []
    for p, k in factorize(n, table):
        if p <= y:
            m *= p**k
        elif k > 1:
            return None
        else:
            tail.append(p)
    if not tail or tail[-1] <= z:
        return None
    return Decomposition(m, tuple(tail))


# --------------------------------------------------------------------------
# binary segment cache

_HEADER = struct.Struct("<4sB")


def write_segment_cache(path: str | Path, x: int, *, lo: int = 1,
                        segment_size: int = DEFAULT_SEGMENT_SIZE) -> int:
    """Stream records for [lo, x] to ``path``; returns the number of records."""
    _check_range(lo, x)
    primes = _small_primes(math.isqrt(x))
    written = 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION))
        for a, b in segment_bounds(lo, x, segment_size):
            seg = sieve_arrays(a, b, primes)
            fh.write(seg.to_bytes())
            written += len(seg)
    return written


def read_segment_cache(path: str | Path) -> np.ndarray:
    """Load a cache file as an ``(count, 6)`` uint64 array in FIELDS order."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated segment cache")
    magic, version = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise ValueError(f"bad cache magic {magic!r}")
    if version != CACHE_VERSION:
        raise ValueError(f"unsupported cache version {version}")
    body = raw[_HEADER.size :]
    width = len(FIELDS) * _RECORD_DTYPE.itemsize
    if len(body) % width:
        raise ValueError("cache body is not a whole number of records")
    return np.frombuffer(body, dtype=_RECORD_DTYPE).reshape(-1, len(FIELDS))
