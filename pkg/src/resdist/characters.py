"""Dirichlet characters mod q in exponent-vector form.

The unit group (Z/q)^x is split by CRT into prime-power components, each
with a fixed generator list (smallest primitive root for odd prime powers,
{-1, 5} for 2^e with e >= 3).  A character is an integer vector ``a``, one
entry per generator, and takes the value ``e(sum_i a_i * log_i(n) / ord_i)``
on units.  Values are handled as indices mod the group exponent ``N`` so
sums can be evaluated exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .arith import euler_phi, factor, is_prime, is_squarefree, mobius, omega, prime_divisors
from .cyclotomic import CharValue, Cyclotomic, root_table
from .errors import DomainError, UnsupportedModulusError


# --------------------------------------------------------------------------
# unit group

@dataclass(frozen=True, eq=False)
class Component:
    ell: int
    e: int
    gens: tuple[int, ...]
    orders: tuple[int, ...]
    dlog: np.ndarray  # (ell^e, len(gens)); rows of non-units are -1

    @property
    def modulus(self) -> int:
        return self.ell**self.e

    def level_generators(self, f: int) -> list[int]:
        """Generators of the units congruent to 1 mod ell^f."""
        if f == 0 or (self.ell == 2 and f == 1):
            return list(self.gens)
        if f >= self.e:
            return []
        return [1 + self.ell**f]


def _primitive_root(m: int, order: int) -> int:
    for g in range(2, m):
        if math.gcd(g, m) == 1 and all(pow(g, order // p, m) != 1 for p, _ in factor(order)):
            return g
    return 1


@lru_cache(maxsize=None)
def _component(ell: int, e: int) -> Component:
    m = ell**e
    if ell == 2 and e >= 3:
        gens, orders = (m - 1, 5), (2, 1 << (e - 2))
        dlog = np.full((m, 2), -1, dtype=np.int64)
        t5 = 1
        for b in range(orders[1]):
            dlog[t5] = (0, b)
            dlog[(m - t5) % m] = (1, b)
            t5 = t5 * 5 % m
    elif m <= 2:
        gens, orders = (), ()
        dlog = np.zeros((m, 0), dtype=np.int64)
    else:
        order = euler_phi(m)
        g = _primitive_root(m, order)
        gens, orders = (g,), (order,)
        dlog = np.full((m, 1), -1, dtype=np.int64)
        t = 1
        for i in range(order):
            dlog[t, 0] = i
            t = t * g % m
    dlog.setflags(write=False)
    return Component(ell, e, gens, orders, dlog)


@dataclass(frozen=True, eq=False)
class UnitGroup:
    q: int
    components: tuple[Component, ...]

    @cached_property
    def orders(self) -> tuple[int, ...]:
        return tuple(o for c in self.components for o in c.orders)

    @cached_property
    def exponent(self) -> int:
        return math.lcm(*self.orders) if self.orders else 1

    @cached_property
    def phi(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def is_unit(self) -> np.ndarray:
        r = np.arange(self.q)
        return np.gcd(r, self.q) == 1

    @cached_property
    def units(self) -> np.ndarray:
        return np.flatnonzero(self.is_unit)

    @cached_property
    def dlog(self) -> np.ndarray:
        """(q, #generators) exponent vectors of every residue; non-unit rows are -1."""
        r = np.arange(self.q)
        cols = [c.dlog[r % c.modulus] for c in self.components]
        out = np.concatenate(cols, axis=1) if cols else np.zeros((self.q, 0), dtype=np.int64)
        out[~self.is_unit] = -1
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        """N / ord_i, mapping a generator exponent to an index mod N."""
        return np.array([self.exponent // o for o in self.orders], dtype=np.int64)

    def encode(self, u: int) -> tuple[int, ...]:
        u %= self.q
        if math.gcd(u, self.q) != 1:
            raise DomainError(f"{u} is not a unit mod {self.q}")
        return tuple(int(v) for v in self.dlog[u])

    def decode(self, vec) -> int:
        vec = list(vec)
        residues, moduli = [], []
        i = 0
        for c in self.components:
            val = 1
            for g in c.gens:
                val = val * pow(g, vec[i], c.modulus) % c.modulus
                i += 1
            residues.append(val)
            moduli.append(c.modulus)
        return _crt(residues, moduli) % self.q if self.q > 1 else 0

    def component_slices(self) -> list[slice]:
        out, i = [], 0
        for c in self.components:
            out.append(slice(i, i + len(c.gens)))
            i += len(c.gens)
        return out

    @cached_property
    def component_conductor_exps(self) -> list[np.ndarray]:
        """Per component: conductor exponent f for each sub-character (mixed-radix index)."""
        out = []
        for c in self.components:
            if not c.orders:
                out.append(np.zeros(1, dtype=np.int64))
                continue
            nc = math.lcm(*c.orders)
            w = np.array([nc // o for o in c.orders], dtype=np.int64)
            sub = _exponent_grid(c.orders)
            fexp = np.full(len(sub), -1, dtype=np.int64)
            for f in range(c.e + 1):
                gens = c.level_generators(f)
                if gens:
                    logs = c.dlog[np.array(gens)]
                    trivial = ((sub * w) @ logs.T % nc == 0).all(axis=1)
                else:
                    trivial = np.ones(len(sub), dtype=bool)
                fexp[(fexp < 0) & trivial] = f
            out.append(fexp)
        return out


def _crt(residues, moduli) -> int:
    x, m = 0, 1
    for r, n in zip(residues, moduli):
        t = (r - x) * pow(m, -1, n) % n
        x += m * t
        m *= n
    return x


def _exponent_grid(orders) -> np.ndarray:
    if not orders:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices(orders).reshape(len(orders), -1).T.astype(np.int64)


@lru_cache(maxsize=256)
def unit_group(q: int) -> UnitGroup:
    if q < 1:
        raise DomainError("modulus must be >= 1")
    comps = tuple(_component(ell, e) for ell, e in factor(q)) if q > 1 else ()
    return UnitGroup(q, comps)


# --------------------------------------------------------------------------
# characters

@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    group: UnitGroup
    exps: tuple[int, ...]

    def __post_init__(self):
        if len(self.exps) != len(self.group.orders):
            raise DomainError("exponent vector length does not match the unit group")
        exps = tuple(int(a) % o for a, o in zip(self.exps, self.group.orders))
        object.__setattr__(self, "exps", exps)

    @property
    def q(self) -> int:
        return self.group.q

    def __eq__(self, other):
        return isinstance(other, DirichletCharacter) and other.q == self.q and other.exps == self.exps

    def __hash__(self):
        return hash((self.q, self.exps))

    def __repr__(self):
        return f"DirichletCharacter(q={self.q}, exps={self.exps})"

    @property
    def is_principal(self) -> bool:
        return not any(self.exps)

    @cached_property
    def order(self) -> int:
        return math.lcm(*(o // math.gcd(a, o) for a, o in zip(self.exps, self.group.orders))) if self.exps else 1

    def index(self, n: int) -> int | None:
        """k with chi(n) = e(k/N), N the group exponent; None off the units."""
        r = n % self.q
        if not self.group.is_unit[r]:
            return None
        row = self.group.dlog[r]
        return int(np.dot(np.array(self.exps, dtype=np.int64) * self.group.weights, row)) % self.group.exponent

    def __call__(self, n: int) -> CharValue:
        k = self.index(n)
        return CharValue.nil() if k is None else CharValue(k, self.group.exponent)

    def value(self, n: int) -> complex:
        return complex(self(n))

    def indices(self, ns) -> np.ndarray:
        """Vectorised :meth:`index`; -1 marks non-units."""
        ns = np.asarray(ns, dtype=np.int64) % self.q
        rows = self.group.dlog[ns]
        k = rows @ (np.array(self.exps, dtype=np.int64) * self.group.weights) % self.group.exponent
        return np.where(self.group.is_unit[ns], k, -1)

    def values(self, ns) -> np.ndarray:
        k = self.indices(ns)
        roots = root_table(self.group.exponent)
        return np.where(k >= 0, roots[np.maximum(k, 0)], 0)

    @cached_property
    def parity(self) -> int:
        """chi(-1), always +1 or -1."""
        if self.q <= 2:
            return 1
        k = self.index(self.q - 1)
        return 1 if k == 0 else -1

    @cached_property
    def conductor(self) -> int:
        d = 1
        for c, sl, fexp in zip(self.group.components, self.group.component_slices(),
                               self.group.component_conductor_exps):
            idx = _mixed_radix(self.exps[sl], c.orders)
            d *= c.ell ** int(fexp[idx])
        return d

    def component(self, ell: int) -> "DirichletCharacter":
        """The factor chi_ell, a character mod ell^e with ell^e || q."""
        for c, sl in zip(self.group.components, self.group.component_slices()):
            if c.ell == ell:
                return DirichletCharacter(unit_group(c.modulus), self.exps[sl])
        raise DomainError(f"{ell} does not divide {self.q}")

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.q != self.q:
            raise DomainError("characters have different moduli")
        return DirichletCharacter(self.group, tuple(a + b for a, b in zip(self.exps, other.exps)))

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(self.group, tuple(-a for a in self.exps))

    def __pow__(self, j: int) -> "DirichletCharacter":
        return DirichletCharacter(self.group, tuple(a * j for a in self.exps))


def _mixed_radix(digits, radices) -> int:
    idx = 0
    for d, r in zip(digits, radices):
        idx = idx * r + d
    return idx


@dataclass(frozen=True, eq=False)
class CharacterTable:
    group: UnitGroup
    exps: np.ndarray  # (phi(q), #generators)

    @property
    def q(self) -> int:
        return self.group.q

    def __len__(self) -> int:
        return len(self.exps)

    def __getitem__(self, i: int) -> DirichletCharacter:
        return DirichletCharacter(self.group, tuple(int(a) for a in self.exps[i]))

    def __iter__(self) -> Iterator[DirichletCharacter]:
        return (self[i] for i in range(len(self)))

    def index_of(self, chi: DirichletCharacter) -> int:
        return _mixed_radix(chi.exps, self.group.orders)

    @cached_property
    def value_indices(self) -> np.ndarray:
        """(#chars, q) array: chi(n) = e(k/N) for k >= 0; -1 off the units."""
        k = ((self.exps * self.group.weights) @ self.group.dlog.T % self.group.exponent).astype(np.int32)
        k[:, ~self.group.is_unit] = -1
        return k

    @cached_property
    def conductors(self) -> np.ndarray:
        g = self.group
        d = np.ones(len(self), dtype=np.int64)
        for c, sl, fexp in zip(g.components, g.component_slices(), g.component_conductor_exps):
            idx = np.zeros(len(self), dtype=np.int64)
            for col, o in zip(range(sl.start, sl.stop), c.orders):
                idx = idx * o + self.exps[:, col]
            d *= c.ell ** fexp[idx]
        return d

    @cached_property
    def conductor_exps(self) -> np.ndarray:
        """(#chars, #components) conductor exponent per prime of q."""
        g = self.group
        cols = []
        for c, sl, fexp in zip(g.components, g.component_slices(), g.component_conductor_exps):
            idx = np.zeros(len(self), dtype=np.int64)
            for col, o in zip(range(sl.start, sl.stop), c.orders):
                idx = idx * o + self.exps[:, col]
            cols.append(fexp[idx])
        return np.stack(cols, axis=1) if cols else np.zeros((len(self), 0), dtype=np.int64)

    @cached_property
    def parities(self) -> np.ndarray:
        if self.q <= 2:
            return np.ones(len(self), dtype=np.int64)
        k = self.value_indices[:, self.q - 1]
        return np.where(k == 0, 1, -1)


@lru_cache(maxsize=8)
def enumerate_characters(q: int) -> CharacterTable:
    g = unit_group(q)
    exps = _exponent_grid(g.orders)
    exps.setflags(write=False)
    return CharacterTable(g, exps)


def principal(q: int) -> DirichletCharacter:
    g = unit_group(q)
    return DirichletCharacter(g, (0,) * len(g.orders))


def conductor(chi: DirichletCharacter) -> int:
    return chi.conductor


def inner_product(chi: DirichletCharacter, other: DirichletCharacter) -> Cyclotomic:
    """Exact (1/phi(q)) sum over units of chi(v) * conj(other(v))."""
    g = chi.group
    k = (chi.indices(g.units) - other.indices(g.units)) % g.exponent
    counts = np.bincount(k, minlength=g.exponent)
    return Cyclotomic.from_counts(counts.tolist(), g.exponent) / g.phi


# --------------------------------------------------------------------------
# alpha, rho_chi, S_{chi, ell}

def alpha(q: int) -> Fraction:
    """prod over primes l | q of (1 - 1/(l - 1)); zero for even q (and q = 0)."""
    if q < 0:
        raise DomainError("alpha requires q >= 0")
    if q == 0 or q % 2 == 0:
        return Fraction(0)
    out = Fraction(1)
    for ell in prime_divisors(q):
        out *= 1 - Fraction(1, ell - 1)
    return out


def alpha_degenerate(q: int) -> bool:
    """True where alpha(q) = 0 only because 2 | q (or q = 0)."""
    return q == 0 or q % 2 == 0


def _shift_set(g: UnitGroup) -> np.ndarray:
    # u with u and u + 1 both units: these are v - 1 for units v with v - 1 a unit
    return np.flatnonzero(g.is_unit & np.roll(g.is_unit, -1))


def rho_chi_exact(chi: DirichletCharacter) -> Cyclotomic:
    """(1/phi(q)) sum_{(v,q)=1} chi(v - 1), exactly, by direct summation."""
    if chi.q < 2:
        raise DomainError("rho_chi needs q >= 2")
    g = chi.group
    k = chi.indices(_shift_set(g))
    counts = np.bincount(k, minlength=g.exponent)
    return Cyclotomic.from_counts(counts.tolist(), g.exponent) / g.phi


def rho_chi_bruteforce(chi: DirichletCharacter) -> complex:
    if chi.q < 2:
        raise DomainError("rho_chi needs q >= 2")
    g = chi.group
    v = g.units
    return complex(chi.values(v - 1).sum() / g.phi)


def rho_chi_closed(chi: DirichletCharacter) -> Fraction:
    """Closed form: zero unless cond is squarefree, else (-1)^omega(cond) chi(-1) alpha / prod(l - 2)."""
    q = chi.q
    if q % 2 == 0:
        raise UnsupportedModulusError(f"closed form for rho_chi holds for odd q only, got {q}")
    if q < 2:
        raise DomainError("rho_chi needs q >= 2")
    d = chi.conductor
    if not is_squarefree(d):
        return Fraction(0)
    value = alpha(q) * chi.parity * (-1) ** omega(d)
    for ell in prime_divisors(d):
        value /= ell - 2
    return value


def _component_info(chi: DirichletCharacter, ell: int, e: int | None):
    for c in chi.group.components:
        if c.ell == ell:
            if e is not None and e != c.e:
                raise DomainError(f"{ell}^{e} does not exactly divide {chi.q}")
            return c
    raise DomainError(f"{ell} does not divide {chi.q}")


def s_chi_ell(chi: DirichletCharacter, ell: int, e: int | None = None) -> Cyclotomic:
    """Direct sum over units v mod ell^e of chi_ell(v - 1)."""
    c = _component_info(chi, ell, e)
    part = chi.component(ell)
    g = part.group
    v = g.units
    k = part.indices(v - 1)
    k = k[k >= 0]
    counts = np.bincount(k, minlength=g.exponent)
    return Cyclotomic.from_counts(counts.tolist(), g.exponent)


def s_chi_ell_closed(chi: DirichletCharacter, ell: int, e: int | None = None) -> int:
    """[chi_ell trivial] phi(ell^e) - [cond(chi_ell) | ell] chi_ell(-1) ell^(e-1)."""
    c = _component_info(chi, ell, e)
    part = chi.component(ell)
    m = c.modulus
    first = euler_phi(m) if part.is_principal else 0
    second = part.parity * ell ** (c.e - 1) if ell % part.conductor == 0 else 0
    return first - second


# --------------------------------------------------------------------------
# Ramanujan sums and counting

def ramanujan_rho(q: int, r: int) -> Fraction:
    """(1/phi(q)) sum_{(v,q)=1} e(rv/q) = mu(q')/phi(q') with q' = q/(q, r)."""
    if q < 1:
        raise DomainError("q must be positive")
    qq = q // math.gcd(q, r % q) if r % q else 1
    return Fraction(mobius(qq), euler_phi(qq))


def ramanujan_rho_direct(q: int, r: int) -> Cyclotomic:
    g = unit_group(q)
    counts = np.bincount(r * g.units % q, minlength=q)
    return Cyclotomic.from_counts(counts.tolist(), q) / g.phi


def count_primitive(d: int) -> int:
    """Number of primitive characters mod an odd squarefree d: prod over l | d of (l - 2)."""
    if d < 1 or d % 2 == 0:
        raise DomainError(f"count_primitive needs odd d, got {d}")
    if not is_squarefree(d):
        raise DomainError(f"count_primitive needs squarefree d, got {d}")
    return math.prod(ell - 2 for ell in prime_divisors(d))


def psi_special(q: int) -> DirichletCharacter:
    """The character mod q induced by the nontrivial character mod 3."""
    if q % 3:
        raise DomainError(f"3 does not divide {q}")
    if q % 2 == 0:
        raise DomainError(f"psi_special is defined here for odd q, got {q}")
    g = unit_group(q)
    exps = []
    for c in g.components:
        if c.ell == 3:
            exps.append(c.orders[0] // 2)
        else:
            exps.extend([0] * len(c.orders))
    return DirichletCharacter(g, tuple(exps))


# --------------------------------------------------------------------------
# per-modulus survey (all characters at once)

@dataclass
class RhoSurvey:
    """All rho_chi for one odd modulus, by brute force and by the closed form."""

    q: int
    alpha: Fraction
    conductors: np.ndarray
    closed: list[Fraction]
    brute: np.ndarray            # complex, direct summation
    exact_match: np.ndarray      # bool, exact agreement (see survey_rho)
    psi_index: int | None = None
    prime_used: int = 0
    orbit_ok: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def max_float_error(self) -> float:
        closed = np.array([float(c) for c in self.closed])
        return float(np.abs(self.brute - closed).max()) if len(closed) else 0.0

    def sum_abs_sq(self) -> Fraction:
        return sum((c * c for c in self.closed), Fraction(0))

    def max_nonexceptional(self) -> Fraction:
        """max |rho_chi| over chi other than the principal character and psi."""
        best = Fraction(0)
        for i, c in enumerate(self.closed):
            if i == 0 or i == self.psi_index:
                continue
            best = max(best, abs(c))
        return best


def _prime_1_mod(n: int, above: int) -> int:
    p = (above // n + 1) * n + 1
    while not is_prime(p):
        p += n
    return p


def _root_of_unity_mod(n: int, p: int) -> int:
    """An element of exact order n in F_p (n | p - 1)."""
    if n == 1:
        return 1
    for h in range(2, p):
        g = pow(h, (p - 1) // n, p)
        if all(pow(g, n // ell, p) != 1 for ell, _ in factor(n)):
            return g
    raise ArithmeticError(f"no element of order {n} mod {p}")


def _unit_generators(n: int) -> list[int]:
    """A small generating set of (Z/n)^x, chosen greedily."""
    target = euler_phi(n)
    gens, span = [], {1}
    for j in range(2, n):
        if len(span) == target:
            break
        if math.gcd(j, n) != 1 or j in span:
            continue
        gens.append(j)
        grown, frontier = set(span), list(span)
        while frontier:
            nxt = []
            for s in frontier:
                t = s * j % n
                if t not in grown:
                    grown.add(t)
                    nxt.append(t)
            frontier = nxt
        span = grown
    return gens


def survey_rho(q: int) -> RhoSurvey:
    """rho_chi for every chi mod an odd q >= 3, by both routes.

    Exact agreement is decided in F_P for a prime P = 1 mod N (N the group
    exponent) with P > 2 phi(q), under a fixed embedding zeta_N -> g.  The
    difference beta = phi(q) rho_chi - m_chi lies in Z[zeta_N] with every
    conjugate bounded by |S| + |m| < P, so if beta vanishes mod every prime
    above P it is zero.  Checking all characters covers all embeddings
    because the conjugates of chi are its powers chi^j, provided m_chi is
    constant on those orbits; that is verified on a generating set of j.
    """
    if q < 3 or q % 2 == 0:
        raise UnsupportedModulusError(f"survey_rho needs odd q >= 3, got {q}")
    table = enumerate_characters(q)
    g = table.group
    n_exp = g.exponent
    a = alpha(q)

    cexps = table.conductor_exps
    ells = np.array([c.ell for c in g.components], dtype=np.int64)
    squarefree = (cexps <= 1).all(axis=1)
    omegas = (cexps >= 1).sum(axis=1)
    # phi(q) * closed is an integer: prod_{l^e||q} l^(e-1) (l-2), divided by prod_{l | cond} (l-2)
    base = math.prod(c.ell ** (c.e - 1) * (c.ell - 2) for c in g.components)
    denom = np.prod(np.where(cexps >= 1, ells - 2, 1), axis=1) if len(ells) else np.ones(len(table), np.int64)
    sign = np.where(omegas % 2 == 0, 1, -1) * table.parities
    m = np.where(squarefree, sign * (base // denom), 0)
    closed = [Fraction(int(v), g.phi) for v in m]

    shift = _shift_set(g)
    k = table.value_indices[:, shift]
    roots = root_table(n_exp)
    brute = roots[k].sum(axis=1) / g.phi

    p = _prime_1_mod(n_exp, 2 * g.phi + 2)
    zeta = _root_of_unity_mod(n_exp, p)
    powers = np.array([pow(zeta, i, p) for i in range(n_exp)], dtype=np.int64)
    modsum = powers[k].sum(axis=1) % p
    exact = modsum == (m % p)

    orbit_ok = True
    for j in _unit_generators(n_exp):
        conj = table.exps * j % np.array(g.orders, dtype=np.int64)
        idx = np.zeros(len(table), dtype=np.int64)
        for col, o in enumerate(g.orders):
            idx = idx * o + conj[:, col]
        orbit_ok &= bool((m[idx] == m).all())

    psi_index = table.index_of(psi_special(q)) if q % 3 == 0 else None
    return RhoSurvey(q, a, table.conductors, closed, brute, exact & orbit_ok,
                     psi_index=psi_index, prime_used=p, orbit_ok=orbit_ok)


def character_table_json(q: int) -> dict:
    """Machine-readable summary of every character mod q."""
    table = enumerate_characters(q)
    rows = []
    for i, chi in enumerate(table):
        row = {"index": i, "exps": list(chi.exps), "order": chi.order,
               "conductor": int(table.conductors[i]), "parity": chi.parity}
        if q >= 2:
            rho = rho_chi_exact(chi)
            r = rho.as_rational()
            if r is not None:
                row["rho"] = f"{r.numerator}/{r.denominator}"
            else:
                z = complex(rho)
                row["rho"] = {"re": f"{z.real:.12g}", "im": f"{z.imag:.12g}"}
        rows.append(row)
    a = alpha(q)
    out = {"modulus": q, "phi": table.group.phi,
           "alpha": f"{a.numerator}/{a.denominator}", "characters": rows}
    if alpha_degenerate(q):
        out["alpha_flag"] = "even modulus"
    return out
