"""Residue histograms of A(n) and phi(n) built from sieve segments."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .sieve_core import DEFAULT_SEGMENT_SIZE, Accumulator, scan

A_MOD_Q = "A_mod_q"
PHI_MOD_Q = "phi_mod_q"
KINDS = (A_MOD_Q, PHI_MOD_Q)


@dataclass
class ResidueHistogram:
    """counts[a] = #{n <= x : g(n) = a mod q} for g = A or phi."""

    q: int
    kind: str
    x: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def coprime_mask(self) -> np.ndarray:
        return np.gcd(np.arange(self.q), self.q) == 1

    @property
    def coprime_total(self) -> int:
        """#{n <= x : gcd(g(n), q) = 1}."""
        return int(self.counts[self.coprime_mask].sum())

    def __getitem__(self, a: int) -> int:
        return int(self.counts[a % self.q])


@dataclass
class ResidueCounter(Accumulator):
    kind: str
    q: int
    counts: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown histogram kind {self.kind!r}")
        if self.q < 1:
            raise DomainError("histogram modulus must be >= 1")
        if self.counts is None:
            self.counts = np.zeros(self.q, dtype=np.int64)

    def fresh(self):
        return ResidueCounter(self.kind, self.q)

    def update(self, seg):
        vals = seg.big_a if self.kind == A_MOD_Q else seg.phi
        self.counts += np.bincount(vals % self.q, minlength=self.q)

    def merge(self, other):
        self.counts += other.counts

    def histogram(self, x: int) -> ResidueHistogram:
        return ResidueHistogram(self.q, self.kind, x, self.counts.copy())


def build_histograms(
    x: int,
    requests: Iterable[tuple[str, int]],
    *,
    extra: Sequence[Accumulator] = (),
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
) -> dict[tuple[str, int], ResidueHistogram]:
    """One sieve pass to x filling every requested (kind, q) histogram.

    ``extra`` accumulators ride along on the same pass.
    """
    x = math.floor(x)
    counters = {key: ResidueCounter(*key) for key in dict.fromkeys(requests)}
    scan(x, [*counters.values(), *extra], segment_size=segment_size, threads=threads)
    return {key: c.histogram(x) for key, c in counters.items()}


def histogram_A(x: int, q: int, **kw) -> ResidueHistogram:
    return build_histograms(x, [(A_MOD_Q, q)], **kw)[(A_MOD_Q, q)]


def histogram_phi(x: int, q: int, **kw) -> ResidueHistogram:
    return build_histograms(x, [(PHI_MOD_Q, q)], **kw)[(PHI_MOD_Q, q)]
