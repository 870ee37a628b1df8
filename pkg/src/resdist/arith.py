"""Elementary arithmetic on small integers (moduli, conductors, orders)."""
from __future__ import annotations

import math
from functools import lru_cache


@lru_cache(maxsize=4096)
def factor(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of a small positive integer by trial division."""
    if n < 1:
        raise ValueError("factor requires n >= 1")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            out.append((p, k))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factor(n)]


def euler_phi(n: int) -> int:
    result = n
    for p, _ in factor(n):
        result -= result // p
    return result


def is_squarefree(n: int) -> bool:
    return all(k == 1 for _, k in factor(n))


def mobius(n: int) -> int:
    fs = factor(n)
    if any(k > 1 for _, k in fs):
        return 0
    return -1 if len(fs) % 2 else 1


def omega(n: int) -> int:
    return len(factor(n))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factor(n) == ((n, 1),)


def multiplicative_order(g: int, m: int) -> int:
    if math.gcd(g, m) != 1:
        raise ValueError(f"{g} is not a unit mod {m}")
    order = euler_phi(m)
    for p, _ in factor(order):
        while order % p == 0 and pow(g, order // p, m) == 1:
            order //= p
    return order
