"""Desk-scale checks of the residue-class distribution of A(n) and phi(n).

Every report compares a histogram against an empirical main term (x/q, or
coprime counts spread over phi(q) classes); analytic shapes such as
x/(log x)^(1-alpha) only serve as normalisations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import euler_phi, prime_divisors
from .characters import DirichletCharacter, alpha, enumerate_characters
from .cyclotomic import Cyclotomic
from .errors import DomainError
from .histograms import (A_MOD_Q, PHI_MOD_Q, ResidueHistogram, build_histograms, histogram_A,
                         histogram_phi)
from .sieve_core import (DEFAULT_SEGMENT_SIZE, Accumulator, PrimeTable, scan, segment_bounds,
                         sieve_arrays, _small_primes)

# Dence-Pomerance constants for #{n <= x : phi(n) = i mod 3} ~ c_i x / sqrt(log x)
DP_C1 = 0.6109
DP_C2 = 0.3284
MERTENS = 0.2614972128476428


# --------------------------------------------------------------------------
# Fourier identities

def exp_sum_A(hist: ResidueHistogram, r: int) -> Cyclotomic:
    """sum_{n <= x} e(r A(n)/q) = sum_a counts[a] e(ra/q), exactly."""
    if hist.kind != A_MOD_Q:
        raise DomainError("exp_sum_A needs an A(n) histogram")
    q = hist.q
    idx = r * np.arange(q) % q
    folded = np.zeros(q, dtype=np.int64)
    np.add.at(folded, idx, hist.counts)
    return Cyclotomic.from_counts(folded.tolist(), q)


def counts_from_exp_sums(sums: Sequence[Cyclotomic], q: int) -> list[int]:
    """Invert r -> S_r back to class counts: counts[a] = (1/q) sum_r e(-ar/q) S_r."""
    out = []
    for a in range(q):
        acc = Cyclotomic.rational(0, q)
        for r, s in enumerate(sums):
            acc = acc + s * Cyclotomic.root(-a * r, q)
        val = (acc / q).as_rational()
        if val is None or val.denominator != 1:
            raise ArithmeticError(f"inversion at a={a} is not an integer: {acc}")
        out.append(int(val))
    return out


def char_sum_phi(hist: ResidueHistogram, chi: DirichletCharacter) -> Cyclotomic:
    """sum_{n <= x} chi(phi(n)) = sum_{(a,q)=1} counts[a] chi(a), exactly."""
    if hist.kind != PHI_MOD_Q:
        raise DomainError("char_sum_phi needs a phi(n) histogram")
    if chi.q != hist.q:
        raise DomainError("character modulus differs from histogram modulus")
    n_exp = chi.group.exponent
    k = chi.indices(np.arange(hist.q))
    live = k >= 0
    folded = np.zeros(n_exp, dtype=np.int64)
    np.add.at(folded, k[live], hist.counts[live])
    return Cyclotomic.from_counts(folded.tolist(), n_exp)


def counts_from_char_sums(hist_q: int, sums: Sequence[Cyclotomic]) -> dict[int, int]:
    """counts[a] = (1/phi(q)) sum_chi conj(chi(a)) S_chi for every unit a."""
    table = enumerate_characters(hist_q)
    out = {}
    for a in table.group.units.tolist():
        acc = Cyclotomic.rational(0, table.group.exponent)
        for chi, s in zip(table, sums):
            acc = acc + s * chi(a).conjugate().exact()
        val = (acc / table.group.phi).as_rational()
        if val is None or val.denominator != 1:
            raise ArithmeticError(f"inversion at a={a} is not an integer")
        out[a] = int(val)
    return out


# --------------------------------------------------------------------------
# discrepancy reports

@dataclass
class DiscrepancyReport:
    q: int
    x: int
    model: str
    epsilon: float
    max_abs_dev: float
    max_rel_dev: float
    normalized: float
    rows: list[dict] = field(default_factory=list)

    def csv_rows(self, kind: str) -> list[dict]:
        return [{"kind": kind, "x": self.x, "q": self.q, **row} for row in self.rows]


def _report(hist: ResidueHistogram, expected: dict[int, Fraction | float], scale: float,
            model: str, epsilon: float) -> DiscrepancyReport:
    rows = []
    max_abs = max_rel = 0.0
    for a, exp in expected.items():
        count = int(hist.counts[a])
        dev = float(count - exp)
        rel = abs(dev) / float(exp) if exp else (0.0 if count == 0 else math.inf)
        max_abs = max(max_abs, abs(dev))
        max_rel = max(max_rel, rel)
        rows.append({"a": a, "count": count, "expected": float(exp), "deviation": dev,
                     "normalized": abs(dev) / scale if scale else 0.0})
    return DiscrepancyReport(hist.q, hist.x, model, epsilon, max_abs, max_rel,
                             max_abs / scale if scale else 0.0, rows)


def theorem12_report(x: int, q: int, epsilon: float = 0.5, *, hist: ResidueHistogram | None = None,
                     **kw) -> DiscrepancyReport:
    """Deviation of #{n <= x : A(n) = a mod q} from x/q.

    normalized = max_a |count - x/q| * q (log x)^(1/2 - eps) / x.
    """
    if hist is None:
        hist = histogram_A(x, q, **kw)
    x = hist.x
    expected = {a: Fraction(x, q) for a in range(q)}
    scale = x / (q * math.log(x) ** (0.5 - epsilon)) if x > 1 else 1.0
    return _report(hist, expected, scale, "x/q", epsilon)


def theorem13_report(x: int, q: int, epsilon: float = 0.5, *, hist: ResidueHistogram | None = None,
                     **kw) -> DiscrepancyReport:
    """phi(n) over coprime classes mod q, gcd(q, 6) = 1, against coprime_total/phi(q)."""
    if math.gcd(q, 6) != 1:
        raise DomainError(f"theorem13_report needs q coprime to 6, got {q}")
    if hist is None:
        hist = histogram_phi(x, q, **kw)
    x = hist.x
    phq = euler_phi(q)
    main = Fraction(hist.coprime_total, phq)
    expected = {a: main for a in np.flatnonzero(hist.coprime_mask).tolist()}
    a_q = float(alpha(q))
    scale = x / (phq * math.log(x) ** (1 - a_q * (1 / 3 + epsilon))) if x > 1 else 1.0
    return _report(hist, expected, scale, "coprime_total/phi(q)", epsilon)


def mod3_coprime_counts(hist: ResidueHistogram) -> dict[int, int]:
    """#{n <= x : gcd(phi(n), q) = 1, phi(n) = i mod 3} for i = 1, 2 (3 | q)."""
    if hist.q % 3:
        raise DomainError("mod-3 split needs 3 | q")
    units = np.flatnonzero(hist.coprime_mask)
    return {i: int(hist.counts[units[units % 3 == i]].sum()) for i in (1, 2)}


def theorem14_report(x: int, q: int, epsilon: float = 0.5, *, hist: ResidueHistogram | None = None,
                     **kw) -> DiscrepancyReport:
    """phi(n) over coprime classes mod q, gcd(q, 6) = 3, against (2/phi(q)) times the mod-3 coprime count."""
    if math.gcd(q, 6) != 3:
        raise DomainError(f"theorem14_report needs gcd(q, 6) = 3, got {q}")
    if hist is None:
        hist = histogram_phi(x, q, **kw)
    x = hist.x
    phq = euler_phi(q)
    split = mod3_coprime_counts(hist)
    expected = {a: Fraction(2 * split[a % 3], phq) for a in np.flatnonzero(hist.coprime_mask).tolist()}
    a_q = float(alpha(q))
    scale = x / (phq * math.log(x) ** (1 - a_q * (1 / 3 + epsilon))) if x > 1 else 1.0
    return _report(hist, expected, scale, "2/phi(q)*coprime_total[mod 3]", epsilon)


# --------------------------------------------------------------------------
# prime sums, coprimality counts, Dence-Pomerance

def lemma42_profile(q: int, xs: Iterable[float], table: PrimeTable) -> list[tuple[float, float]]:
    """(x, sum_{p<=x, (p-1,q)=1} 1/p - alpha(q) loglog x) for each x."""
    if q < 1:
        raise DomainError("q must be positive")
    xs = sorted(xs)
    if xs and xs[-1] > table.limit:
        raise DomainError(f"grid reaches {xs[-1]} beyond table limit {table.limit}")
    a = float(alpha(q)) if q % 2 else 0.0
    ps = table.primes_upto(xs[-1]) if xs else table.primes[:0]
    keep = np.ones(len(ps), dtype=bool)
    for ell in prime_divisors(q) if q > 1 else []:
        keep &= (ps - 1) % ell != 0
    terms = np.where(keep, 1.0 / ps, 0.0)
    partial = np.cumsum(terms)
    out = []
    for x in xs:
        c = int(np.searchsorted(ps, math.floor(x), side="right"))
        s = float(partial[c - 1]) if c else 0.0
        out.append((float(x), s - a * math.log(math.log(x))))
    return out


def prop41_ratio(x: int, q: int, *, hist: ResidueHistogram | None = None, **kw) -> float:
    """#{n <= x : (phi(n), q) = 1} / (x / (log x)^(1 - alpha(q)))."""
    if q % 2 == 0:
        raise DomainError(f"prop41_ratio needs odd q, got {q}")
    if hist is None:
        hist = histogram_phi(x, q, **kw)
    x = hist.x
    return hist.coprime_total / (x / math.log(x) ** (1 - float(alpha(q))))


@dataclass
class DencePomerance:
    x: int
    count1: int
    count2: int

    @property
    def scale(self) -> float:
        return self.x / math.sqrt(math.log(self.x))

    @property
    def norm1(self) -> float:
        return self.count1 / self.scale

    @property
    def norm2(self) -> float:
        return self.count2 / self.scale

    @property
    def ratio(self) -> float:
        return self.count1 / self.count2


def dence_pomerance(x: int, *, hist: ResidueHistogram | None = None, **kw) -> DencePomerance:
    if hist is None:
        hist = histogram_phi(x, 3, **kw)
    if hist.q != 3 or hist.kind != PHI_MOD_Q:
        raise DomainError("dence_pomerance needs a phi(n) mod 3 histogram")
    return DencePomerance(hist.x, int(hist.counts[1]), int(hist.counts[2]))


# --------------------------------------------------------------------------
# the x/4 lower bound and its injections

def phi_values(x: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> np.ndarray:
    """phi(n) for 0 <= n <= x (phi(0) stored as 0)."""
    primes = _small_primes(math.isqrt(x))
    parts = [np.zeros(1, dtype=np.int64)]
    for a, b in segment_bounds(1, x, segment_size):
        parts.append(sieve_arrays(a, b, primes).phi)
    return np.concatenate(parts)


@dataclass
class ReductionCheck:
    x: int
    q: int
    a: int
    lhs: int            # 3 * #{n <= x : (phi(n), q) = 1, phi(n) = a mod 3}
    rhs: int            # #{n <= x/4 : (phi(n), q) = 1}
    class_sizes: tuple[int, int, int]
    injections_ok: bool

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs and self.injections_ok


def verify_reduction_inequality(x: int, q: int, a: int, *, phi: np.ndarray | None = None) -> ReductionCheck:
    """Check 3 S_0 >= #{n <= x/4 : (phi(n), q) = 1} and the maps behind it.

    The right side splits into n with phi(n) = a mod 3 (kept), odd n with
    phi(n) = -a mod 3 (sent to 4n) and even n with phi(n) = -a mod 3 (sent
    to 2n); each image must land in S_0.
    """
    if q % 3:
        raise DomainError(f"reduction check needs 3 | q, got {q}")
    if math.gcd(a, q) != 1:
        raise DomainError(f"a={a} is not coprime to q={q}")
    if phi is None or len(phi) <= x:
        phi = phi_values(x)
    vals = phi[1 : x + 1]
    cop = np.gcd(vals, q) == 1
    in_s0 = np.zeros(x + 1, dtype=bool)
    in_s0[1:] = cop & (vals % 3 == a % 3)
    lhs = 3 * int(in_s0.sum())

    quarter = x // 4
    n = np.arange(1, quarter + 1)
    small = phi[1 : quarter + 1]
    base = np.gcd(small, q) == 1
    same = base & (small % 3 == a % 3)
    other = base & (small % 3 == (-a) % 3)
    odd = other & (n % 2 == 1)
    even = other & (n % 2 == 0)
    rhs = int(base.sum())

    ok = bool(in_s0[n[same]].all() and in_s0[4 * n[odd]].all() and in_s0[2 * n[even]].all())
    return ReductionCheck(x, q, a, lhs, rhs, (int(same.sum()), int(odd.sum()), int(even.sum())), ok)


# --------------------------------------------------------------------------
# the three removal conditions

@dataclass
class ConditionCounter(Accumulator):
    """Failures of (i) P(n) > z, (ii) p > y => p^2 does not divide n, (iii) P_2(n) > y."""

    y: float
    z: float
    q: int
    fails: np.ndarray | None = None          # rows: all n / gcd(phi(n), q) = 1; cols: i, ii, iii, any
    coprime_total: int = 0

    def __post_init__(self):
        if self.fails is None:
            self.fails = np.zeros((2, 4), dtype=np.int64)

    def fresh(self):
        return ConditionCounter(self.y, self.z, self.q)

    def update(self, seg):
        f1 = seg.p1 <= self.z
        f2 = seg.max_sq > self.y
        f3 = seg.p2 <= self.y
        fa = f1 | f2 | f3
        cop = np.gcd(seg.phi, self.q) == 1
        for row, mask in enumerate((None, cop)):
            for col, f in enumerate((f1, f2, f3, fa)):
                self.fails[row, col] += int(np.count_nonzero(f if mask is None else f & mask))
        self.coprime_total += int(np.count_nonzero(cop))

    def merge(self, other):
        self.fails += other.fails
        self.coprime_total += other.coprime_total


@dataclass
class ConditionReport:
    x: int
    y: float
    z: float
    q: int
    fail_i: int
    fail_ii: int
    fail_iii: int
    fail_any: int
    coprime_fail_i: int
    coprime_fail_ii: int
    coprime_fail_iii: int
    coprime_fail_any: int
    coprime_total: int

    @property
    def coprime_fail_fraction(self) -> float:
        return self.coprime_fail_any / self.coprime_total if self.coprime_total else 0.0


def conditions_filter(x: int, y: float, z: float, q: int, *, counter: ConditionCounter | None = None,
                      **kw) -> ConditionReport:
    if counter is None:
        counter = ConditionCounter(y, z, q)
        scan(x, [counter], **kw)
    f = counter.fails
    return ConditionReport(x, y, z, q, *map(int, f[0]), *map(int, f[1]), counter.coprime_total)


__all__ = [
    "DP_C1", "DP_C2", "MERTENS", "exp_sum_A", "counts_from_exp_sums", "char_sum_phi",
    "counts_from_char_sums", "DiscrepancyReport", "theorem12_report", "theorem13_report",
    "theorem14_report", "mod3_coprime_counts", "lemma42_profile", "prop41_ratio", "DencePomerance",
    "dence_pomerance", "phi_values", "ReductionCheck", "verify_reduction_inequality",
    "ConditionCounter", "ConditionReport", "conditions_filter", "build_histograms",
    "histogram_A", "histogram_phi",
]
