"""Partial sums of multiplicative functions against the mean-value bound.

For f : N -> unit disk with prime sums close to ``rho * (pi(Y) - pi(y))`` the
bound on ``|sum_{n<=x} f(n)|`` has three pieces::

    main   = (|rho| x / log z) (log x / log y)^|rho| exp(sum_{p<=y} |f(p)|/p)
    smooth = Psi(x, z)
    error  = M x (log x)^2 (err(y) + 1/y)

valid for M >= 1, 4 < y <= sqrt(z), z < x.  This module evaluates each piece
and the exact left-hand side.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .characters import DirichletCharacter
from .cyclotomic import Cyclotomic
from .errors import DomainError
from .histograms import A_MOD_Q, PHI_MOD_Q, ResidueCounter, ResidueHistogram
from .sieve_core import DEFAULT_SEGMENT_SIZE, PrimeTable, SmoothCounter, build_prime_table, scan


@dataclass(frozen=True)
class MultFunctionSpec:
    """A multiplicative f given on prime powers.

    When f(n) depends only on A(n) mod q or phi(n) mod q, ``kind``/``modulus``
    name that residue and ``class_index`` maps residues a to k with
    f = e(k/order) (or -1 where f vanishes); sums then run over histograms.
    """

    name: str
    prime_power: Callable[[int, int], complex]
    kind: str | None = None
    modulus: int = 1
    order: int = 1
    class_index: Callable[[np.ndarray], np.ndarray] | None = None
    on_primes: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, n: int) -> complex:
        out = 1 + 0j
        m, p = n, 2
        while p * p <= m:
            if m % p == 0:
                k = 0
                while m % p == 0:
                    m //= p
                    k += 1
                out *= self.prime_power(p, k)
            p += 1
        if m > 1:
            out *= self.prime_power(m, 1)
        return out

    def prime_values(self, primes: np.ndarray) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        if self.on_primes is not None:
            return self.on_primes(primes)
        return np.array([self.prime_power(int(p), 1) for p in primes], dtype=complex)

    @property
    def uses_histogram(self) -> bool:
        return self.kind is not None and self.class_index is not None


def _e(t: float) -> complex:
    return cmath.exp(2j * math.pi * t)


def constant_one() -> MultFunctionSpec:
    return MultFunctionSpec(
        "one", lambda p, k: 1 + 0j, A_MOD_Q, 1, 1,
        class_index=lambda a: np.zeros_like(a),
        on_primes=lambda ps: np.ones(len(ps), dtype=complex),
    )


def e_of_A(r: int, q: int) -> MultFunctionSpec:
    """n -> e(r A(n) / q)."""
    if q < 1:
        raise DomainError("q must be positive")
    r %= q
    return MultFunctionSpec(
        f"eA(r={r},q={q})", lambda p, k: _e(r * k * p % q / q), A_MOD_Q, q, q,
        class_index=lambda a: r * np.asarray(a) % q,
        on_primes=lambda ps: np.exp(2j * np.pi * (r * ps % q) / q),
    )


def sign_A() -> MultFunctionSpec:
    """n -> (-1)^A(n), which is e(A(n)/2)."""
    f = e_of_A(1, 2)
    return MultFunctionSpec("signA", lambda p, k: (-1) ** (k * p), A_MOD_Q, 2, 2,
                            class_index=f.class_index, on_primes=lambda ps: np.where(ps % 2, -1.0, 1.0) + 0j)


def chi_of_phi(chi: DirichletCharacter) -> MultFunctionSpec:
    """n -> chi(phi(n)); on primes this is chi(p - 1)."""
    q = chi.q
    return MultFunctionSpec(
        f"chiphi(q={q},exps={list(chi.exps)})",
        lambda p, k: chi.value(p ** (k - 1) * (p - 1)),
        PHI_MOD_Q, q, chi.group.exponent,
        class_index=chi.indices,
        on_primes=lambda ps: chi.values(ps - 1),
    )


# --------------------------------------------------------------------------
# partial sums

def histogram_sum(f: MultFunctionSpec, hist: ResidueHistogram) -> Cyclotomic:
    """sum_a hist[a] f(a), exactly, one root of unity per residue class."""
    if not f.uses_histogram:
        raise DomainError(f"{f.name} does not factor through a residue histogram")
    if hist.kind != f.kind or hist.q != f.modulus:
        raise DomainError(f"histogram ({hist.kind}, {hist.q}) does not match {f.name}")
    k = np.asarray(f.class_index(np.arange(hist.q)))
    live = k >= 0
    counts = np.zeros(f.order, dtype=np.int64)
    np.add.at(counts, k[live], hist.counts[live])
    return Cyclotomic.from_counts(counts.tolist(), f.order)


def _generic_values(f: MultFunctionSpec, x: int) -> np.ndarray:
    """f(n) for 0 <= n <= x by multiplying in prime-power factors (O(x log log x))."""
    vals = np.ones(x + 1, dtype=complex)
    vals[0] = 0
    table = build_prime_table(max(x, 2))
    for p in table.primes.tolist():
        mult = np.arange(p, x + 1, p)
        rest = mult // p
        k = np.ones(len(mult), dtype=np.int64)
        while True:
            div = rest % p == 0
            if not div.any():
                break
            k[div] += 1
            rest[div] //= p
        local = np.array([1] + [f.prime_power(p, j) for j in range(1, int(k.max()) + 1)], dtype=complex)
        vals[mult] *= local[k]
    return vals


def partial_sum_exact(f: MultFunctionSpec, x: int, *, hist: ResidueHistogram | None = None,
                      segment_size: int = DEFAULT_SEGMENT_SIZE, threads: int = 1) -> Cyclotomic:
    if x < 1:
        raise DomainError("partial sums need x >= 1")
    if hist is None:
        counter = ResidueCounter(f.kind, f.modulus)
        scan(x, [counter], segment_size=segment_size, threads=threads)
        hist = counter.histogram(x)
    return histogram_sum(f, hist)


def partial_sum(f: MultFunctionSpec, x: int, q_context: int | None = None, *,
                hist: ResidueHistogram | None = None, **kw) -> complex:
    """sum_{n <= x} f(n); exact through a histogram when f allows it, else per-n."""
    x = math.floor(x)
    if q_context is not None and f.uses_histogram and q_context != f.modulus:
        raise DomainError(f"q_context={q_context} disagrees with {f.name}")
    if f.uses_histogram:
        return complex(partial_sum_exact(f, x, hist=hist, **kw))
    if x < 1:
        raise DomainError("partial sums need x >= 1")
    return complex(_generic_values(f, x)[1:].sum())


# --------------------------------------------------------------------------
# hypothesis fit

@dataclass
class HypothesisFit:
    y: float
    rho: complex
    grid: list[float]
    residuals: list[float]
    m_err: float


def fit_hypothesis(f: MultFunctionSpec, y: float, y_max: float, grid_size: int, rho: complex,
                   table: PrimeTable) -> HypothesisFit:
    """|sum_{y<p<=Y} f(p) - rho (pi(Y) - pi(y))| / Y on a geometric grid of Y in [y, y_max]."""
    if grid_size < 1:
        raise DomainError("empty Y grid")
    if y < 5:
        raise DomainError("fit_hypothesis needs y >= 5")
    if y_max > table.limit:
        raise DomainError(f"Ymax={y_max} exceeds prime table limit {table.limit}")
    if y_max < y:
        raise DomainError("Ymax must be >= y")
    primes = table.primes_upto(y_max)
    primes = primes[primes > y]
    partial = np.cumsum(f.prime_values(primes)) if len(primes) else np.zeros(0, dtype=complex)
    grid = np.geomspace(y, y_max, grid_size) if grid_size > 1 else np.array([float(y_max)])
    residuals = []
    for big_y in grid:
        c = int(np.searchsorted(primes, math.floor(big_y), side="right"))
        s = partial[c - 1] if c else 0j
        residuals.append(float(abs(s - rho * c) / big_y))
    return HypothesisFit(float(y), complex(rho), [float(g) for g in grid], residuals, max(residuals))


# --------------------------------------------------------------------------
# the bound

def loglog(x: float) -> float:
    return math.log(math.log(x))


def recipe(x: float, epsilon: float) -> tuple[float, float]:
    """y = exp((log x)^(eps/2)), z = x^(1/loglog x)."""
    return math.exp(math.log(x) ** (epsilon / 2)), x ** (1 / loglog(x))


def check_parameters(x: float, y: float, z: float, m: float = 1.0) -> None:
    """Raise DomainError naming the first violated standing hypothesis."""
    if not m >= 1:
        raise DomainError(f"M >= 1 violated (M={m})")
    if not y > 4:
        raise DomainError(f"4 < y violated (y={y})")
    if not y <= math.sqrt(z):
        raise DomainError(f"y <= z^(1/2) violated (y={y}, z^(1/2)={math.sqrt(z)})")
    if not z < x:
        raise DomainError(f"z < x violated (z={z}, x={x})")


@dataclass
class BoundBreakdown:
    x: float
    y: float
    z: float
    M: float
    err_y: float
    rho_abs: float
    main_term: float
    smooth_term: float
    error_term: float
    lhs: complex
    extras: dict = field(default_factory=dict)

    @property
    def rhs(self) -> float:
        return self.main_term + self.smooth_term + self.error_term

    @property
    def ratio(self) -> float:
        return abs(self.lhs) / self.rhs if self.rhs else math.inf

    def to_json(self) -> dict:
        def d(v):
            return f"{v:.12g}"
        out = {k: d(v) for k, v in asdict(self).items() if isinstance(v, float)}
        out["lhs"] = {"re": d(self.lhs.real), "im": d(self.lhs.imag)}
        out["lhs_abs"] = d(abs(self.lhs))
        out["ratio"] = d(self.ratio)
        out.update(self.extras)
        return out


def prime_weight_sum(f: MultFunctionSpec, y: float, table: PrimeTable) -> float:
    """sum_{p <= y} |f(p)| / p, exactly from the table."""
    ps = table.primes_upto(y)
    return math.fsum((np.abs(f.prime_values(ps)) / ps).tolist())


def theorem_bound(f: MultFunctionSpec, x: int, y: float, z: float, M: float, err_y: float,
                  rho: complex, table: PrimeTable | None = None, *,
                  segment_size: int = DEFAULT_SEGMENT_SIZE, threads: int = 1) -> BoundBreakdown:
    check_parameters(x, y, z, M)
    x = math.floor(x)
    if table is None:
        table = build_prime_table(max(math.ceil(y), 2))
    r = abs(rho)
    lx = math.log(x)
    main = r * x / math.log(z) * (lx / math.log(y)) ** r * math.exp(prime_weight_sum(f, y, table))
    error = M * x * lx**2 * (err_y + 1 / y)

    smooth = SmoothCounter(math.floor(z))
    if f.uses_histogram:
        counter = ResidueCounter(f.kind, f.modulus)
        scan(x, [counter, smooth], segment_size=segment_size, threads=threads)
        lhs = complex(histogram_sum(f, counter.histogram(x)))
    else:
        scan(x, [smooth], segment_size=segment_size, threads=threads)
        lhs = complex(_generic_values(f, x)[1:].sum())
    return BoundBreakdown(float(x), float(y), float(z), float(M), float(err_y), r,
                          main, float(smooth.count), error, lhs, extras={"f": f.name})
