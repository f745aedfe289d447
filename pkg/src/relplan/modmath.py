"""Exact arithmetic in the multiplicative group of integers modulo a prime.

All quantities and conversion factors live in Z_p* = {1, ..., p-1}; zero is
never a legal value, so every element has an inverse and edge traversals
(multiply forward, divide backward) stay inside the group.
"""

from __future__ import annotations

from enum import Enum

from .errors import ConfigError, DataError


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class ZeroResidue(DataError):
    """A value that must lie in Z_p* was congruent to 0."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def check_modulus(p: int) -> int:
    """Validate a modulus: any prime >= 3 is accepted."""
    if not isinstance(p, int) or p < 3 or not is_prime(p):
        raise ConfigError(f"modulus must be a prime >= 3, got {p!r}", field="modulus")
    return p


def check_residue(a: int, p: int) -> int:
    """Validate membership in Z_p*."""
    if not 1 <= a <= p - 1:
        if a % p == 0:
            raise ZeroResidue(f"value {a} is 0 mod {p}")
        raise DataError(f"value {a} outside [1, {p - 1}]")
    return a


def mod_inv(a: int, p: int) -> int:
    """Multiplicative inverse of ``a`` in Z_p*.

    Computed as a^(p-2) mod p; p is small enough that intermediate
    products fit comfortably in machine integers.
    """
    if a % p == 0:
        raise ZeroResidue(f"cannot invert 0 mod {p}")
    return pow(a, p - 2, p)


def traverse(q: int, factor: int, direction: Direction, p: int) -> int:
    """Apply one edge traversal to quantity ``q``.

    Forward multiplies by ``factor``; backward multiplies by its inverse.
    Inputs and result are members of Z_p*.
    """
    check_residue(q, p)
    check_residue(factor, p)
    if direction is Direction.FORWARD:
        return q * factor % p
    return q * mod_inv(factor, p) % p
