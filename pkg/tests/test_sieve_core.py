import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import eratosthenes, psi_brute, record, trial_factor
from resdist.errors import DomainError, PreconditionError, ResourceLimitError
from resdist.sieve_core import (CACHE_MAGIC, FIELDS, RecordDigest, SegmentRecord, build_prime_table,
                                decompose, factorize, psi_smooth_count, read_segment_cache, scan,
                                segment_bounds, sieve_arrays, sieve_segment, write_segment_cache,
                                _small_primes)


def test_prime_table_small():
    t = build_prime_table(10)
    assert t.primes.tolist() == [2, 3, 5, 7]
    assert t.pi(10) == 4 and t.pi(1) == 0 and t.pi(7) == 4 and t.pi(6.5) == 3


def test_prime_table_matches_eratosthenes():
    t = build_prime_table(200_000)
    assert t.primes.tolist() == eratosthenes(200_000)


def test_pi_million():
    assert build_prime_table(10**6).pi(10**6) == 78498


def test_prime_table_errors():
    with pytest.raises(DomainError):
        build_prime_table(1)
    with pytest.raises(ResourceLimitError):
        build_prime_table(10**12)


@pytest.mark.parametrize("n, expected", [
    (12, (12, 7, 4, 3, 2, 2)),
    (1, (1, 0, 1, 1, 1, 1)),
    (100, (100, 14, 40, 5, 5, 5)),
])
def test_segment_record_examples(n, expected):
    rec = sieve_segment(n, n, build_prime_table(100))[0]
    assert rec == SegmentRecord(*expected)


def test_records_match_trial_division_small_segments():
    table = build_prime_table(1000)
    got = [tuple(vars(r).values()) for r in sieve_segment(1, 5000, table)]
    assert got == [record(n) for n in range(1, 5001)]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10**9), st.integers(0, 300))
def test_records_random_windows(lo, width):
    hi = lo + width
    seg = sieve_arrays(lo, hi, _small_primes(math.isqrt(hi)))
    for r in seg.records()[:: max(1, width // 20)]:
        assert tuple(vars(r).values()) == record(r.n)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20000), st.integers(1, 20000), st.integers(1, 4096))
def test_segment_independence(a, b, size):
    # records do not depend on how [lo, hi] is cut
    lo, hi = min(a, b), max(a, b)
    primes = _small_primes(math.isqrt(hi))
    whole = sieve_arrays(lo, hi, primes)
    parts = [sieve_arrays(s, e, primes) for s, e in segment_bounds(lo, hi, size)]
    for name in FIELDS[1:]:
        assert np.array_equal(getattr(whole, name), np.concatenate([getattr(p, name) for p in parts]))


def test_sieve_record_invariants():
    seg = sieve_arrays(1, 50000, _small_primes(300))
    n = seg.n
    assert (seg.p1 >= seg.p2).all()
    assert (seg.phi <= n).all() and (seg.phi >= 1).all()
    assert ((seg.max_sq == 1) | (n % (seg.max_sq**2) == 0)).all()
    prime = (seg.p1 == n) & (n > 1)
    assert (seg.phi[prime] == n[prime] - 1).all()
    assert (seg.big_a[prime] == n[prime]).all()


def test_sieve_domain_errors():
    with pytest.raises(DomainError):
        sieve_arrays(0, 10, _small_primes(3))
    with pytest.raises(DomainError):
        sieve_arrays(5, 4, _small_primes(3))
    with pytest.raises(DomainError):
        sieve_arrays(1, (1 << 40) + 1, _small_primes(10))
    with pytest.raises(PreconditionError):
        sieve_arrays(1, 10**6, build_prime_table(100))


@pytest.mark.parametrize("x, z, expected", [(100, 5, 34), (10, 2, 4), (50, 100, 50), (1, 1, 1)])
def test_psi_examples(x, z, expected):
    assert psi_smooth_count(x, z) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 120))
def test_psi_brute(x, z):
    assert psi_smooth_count(x, z, segment_size=512) == psi_brute(x, z)


def test_psi_monotone_in_z():
    vals = [psi_smooth_count(10**5, z) for z in (2, 3, 10, 100, 1000, 10**5)]
    assert vals == sorted(vals) and vals[-1] == 10**5


def test_scan_thread_identity():
    d1, d4 = RecordDigest(), RecordDigest()
    scan(300_000, [d1], segment_size=1 << 15, threads=1)
    scan(300_000, [d4], segment_size=1 << 15, threads=4)
    assert d1.hexdigest() == d4.hexdigest() and d1.totals == d4.totals


def test_factorize():
    t = build_prime_table(1000)
    for n in (1, 2, 360, 997 * 991, 2**19, 999_983):
        assert factorize(n, t) == trial_factor(n)
    with pytest.raises(PreconditionError):
        factorize(10**7, build_prime_table(100))


def test_decompose_examples():
    t = build_prime_table(10**4)
    d = decompose(9381, 10, 50, t)
    assert d.m == 3 and d.tail == (53, 59) and d.n == 9381
    assert decompose(32, 10, 50, t) is None
    assert decompose(3 * 53 * 53, 10, 50, t) is None


def test_decompose_roundtrip_range():
    y, z = 20, 1000
    t = build_prime_table(1000)
    for n in range(1, 30001):
        fac = trial_factor(n)
        big = [p for p, k in fac if p > y]
        empty = not big or max(big) <= z or any(k > 1 for p, k in fac if p > y)
        d = decompose(n, y, z, t)
        assert (d is None) == empty
        if d is not None:
            assert d.n == n
            assert all(p <= y for p, _ in trial_factor(d.m))
            assert list(d.tail) == sorted(set(d.tail)) and d.tail[0] > y and d.tail[-1] > z


def test_segment_cache_roundtrip(tmp_path):
    path = tmp_path / "seg.bin"
    count = write_segment_cache(path, 5000, lo=100, segment_size=700)
    assert count == 4901
    raw = path.read_bytes()
    assert raw[:4] == CACHE_MAGIC and raw[4] == 1
    arr = read_segment_cache(path)
    assert arr.shape == (4901, 6)
    assert [tuple(map(int, r)) for r in arr[:50]] == [record(n) for n in range(100, 150)]


def test_segment_cache_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX\x01")
    with pytest.raises(ValueError):
        read_segment_cache(path)


@pytest.fixture(scope="module")
def million():
    return sieve_arrays(1, 10**6, _small_primes(1000))


def test_segment_independence_million(million):
    primes = _small_primes(1000)
    parts = [sieve_arrays(a, b, primes) for a, b in segment_bounds(1, 10**6, 10**4)]
    for name in FIELDS[1:]:
        assert np.array_equal(getattr(million, name), np.concatenate([getattr(p, name) for p in parts]))


def test_max_sq_below_p2(million):
    sq, p2 = million.max_sq, million.p2
    assert ((sq == 1) | (sq <= p2)).all()


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 1000), st.integers(1, 1000))
def test_additivity_fuzz(million, m, n):
    if math.gcd(m, n) != 1:
        return
    a, ph = million.big_a, million.phi
    assert a[m * n - 1] == a[m - 1] + a[n - 1]
    assert ph[m * n - 1] == ph[m - 1] * ph[n - 1]


def test_p2_counts_multiplicity(million):
    assert million.p2[25 - 1] == 5 and million.p1[25 - 1] == 5
    assert million.p2[7 - 1] == 1
