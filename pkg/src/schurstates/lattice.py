"""Integer-lattice geometry in the 1-norm.

Sites of the nu-dimensional lattice are tuples of ints; the metric is
|z| = |z_1| + ... + |z_nu|.  Shells and balls are enumerated in a fixed
lexicographic order so every caller sees the same site sequence.
"""

from __future__ import annotations

import itertools
import math


def norm1(site) -> int:
    return sum(abs(int(c)) for c in site)


def shell_size(nu: int, r: int) -> int:
    """Number of lattice sites with 1-norm exactly r (exact count)."""
    if r < 0:
        return 0
    if r == 0:
        return 1
    # choose k nonzero coordinates, sign them, compose r into k positive parts
    return sum(
        (2**k) * math.comb(nu, k) * math.comb(r - 1, k - 1)
        for k in range(1, min(nu, r) + 1)
    )


def shell(nu: int, r: int) -> list[tuple[int, ...]]:
    """Sites with 1-norm exactly r, lexicographically ordered."""
    if r == 0:
        return [(0,) * nu]
    sites = [
        z
        for z in itertools.product(range(-r, r + 1), repeat=nu)
        if norm1(z) == r
    ]
    sites.sort()
    return sites


def ball(nu: int, r: int) -> list[tuple[int, ...]]:
    """Sites with 1-norm at most r, lexicographically ordered."""
    if r < 0:
        return []
    sites = [
        z
        for z in itertools.product(range(-r, r + 1), repeat=nu)
        if norm1(z) <= r
    ]
    sites.sort()
    return sites


def ball_size(nu: int, r: int) -> int:
    return sum(shell_size(nu, k) for k in range(r + 1))
