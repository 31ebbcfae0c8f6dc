"""Exhaustive small-ball oracles the fast enumerators are checked against."""

from __future__ import annotations

import math
from itertools import product

from latcount.gauges import Gauge, entry_bound, gauge_leq
from latcount.groups import GroupElement, int_det


def brute_sl2z(gauge: Gauge, threshold: float) -> set[GroupElement]:
    """Full scan over entry tuples up to the sound entry bound."""
    bound = entry_bound(gauge, threshold)
    rng = range(-bound, bound + 1)
    out = set()
    for a, b, c, d in product(rng, rng, rng, rng):
        if a * d - b * c != 1:
            continue
        el = GroupElement.from_rows(((a, b), (c, d)))
        if gauge_leq(gauge, el, threshold):
            out.add(el)
    return out


def brute_sl3z(gauge: Gauge, threshold: float) -> set[GroupElement]:
    bound = entry_bound(gauge, threshold)
    rng = range(-bound, bound + 1)
    out = set()
    for row1 in product(rng, repeat=3):
        for row2 in product(rng, repeat=3):
            for row3 in product(rng, repeat=3):
                rows = (row1, row2, row3)
                if int_det(rows) != 1:
                    continue
                el = GroupElement.from_rows(rows)
                if gauge_leq(gauge, el, threshold):
                    out.add(el)
    return out


def brute_sl2z1p(gauge: Gauge, threshold: float) -> set[GroupElement]:
    """Scan primitive integer matrices A with det A = p^{2k}; height = |A|_F."""
    p = gauge.prime
    bound = entry_bound(gauge, threshold)
    rng = range(-bound, bound + 1)
    out = set()
    k = 0
    # Hadamard: |A|^2 >= 2 det A, so levels stop once 2 p^{2k} clears T^2.
    # The +1 slack errs on the side of scanning; gauge_leq decides exactly.
    while 2.0 * p ** (2 * k) <= float(threshold) ** 2 + 1.0:
        det = p ** (2 * k)
        for a, b, c, d in product(rng, rng, rng, rng):
            if a * d - b * c != det:
                continue
            if k > 0 and all(x % p == 0 for x in (a, b, c, d)):
                continue
            el = GroupElement.from_rows(((a, b), (c, d)), prime=p, p_power=k)
            if gauge_leq(gauge, el, threshold):
                out.add(el)
        k += 1
    return out
