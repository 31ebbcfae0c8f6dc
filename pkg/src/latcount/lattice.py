"""Exact enumeration of lattice elements inside gauge balls."""
from __future__ import annotations

import bisect
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Sequence

from .errors import BudgetError, SpecError
from .gauges import (
    BinaryForm,
    Gauge,
    entry_bound,
    form_norm_sq,
    forms_substitute,
    gauge_eval,
    gauge_leq,
)
from .groups import (
    GroupElement,
    ResidueClass,
    ext_gcd,
    int_det,
    reduce_mod,
    resolve_group,
)

DEFAULT_BUDGET = 10_000_000

_SUPPORTED = {
    "sl2z": {"rnorm", "hyperbolic", "rep_form"},
    "sl3z": {"rnorm"},
    "sl2z1p": {"height"},
}


def _resolve_budget(budget: int | None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get("LATCOUNT_BUDGET")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SpecError(f"LATCOUNT_BUDGET must be an integer, got {env!r}") from None
    return DEFAULT_BUDGET


def estimate_count(group: str, gauge: Gauge, threshold: float) -> int:
    """Cheap a-priori overestimate of the number of elements in the ball."""
    desc = resolve_group(group)
    if desc.n == 3:
        return max(64, int(threshold) ** 6 // 4)
    if gauge.kind == "hyperbolic":
        return max(16, int(14.0 * math.cosh(threshold)))
    if gauge.kind == "height":
        k_levels = 1 + max(0, int(math.log(max(threshold, 2.0) ** 2 / 2.0) / math.log(gauge.prime)) // 2)
        return max(16, int(14.0 * threshold**2) * k_levels)
    if gauge.kind == "rep_form":
        bound = entry_bound(gauge, threshold)
        return max(16, 16 * bound * bound)
    return max(16, int(14.0 * threshold**2))


def _check_supported(group: str, gauge: Gauge) -> None:
    kinds = _SUPPORTED.get(group)
    if kinds is None:
        resolve_group(group)
        raise SpecError(f"no enumeration for group {group!r}")
    if gauge.kind not in kinds:
        raise SpecError(
            f"gauge kind {gauge.kind!r} is not enumerable over {group}; supported: {sorted(kinds)}"
        )
    if group == "sl2z1p" and gauge.prime is None:
        raise SpecError("height gauge over sl2z1p needs a prime")


def _window_1d(center: int, step: int, bound: int) -> tuple[int, int] | None:
    """k-range with |center + k*step| <= bound, or None when empty."""
    if step == 0:
        return None if abs(center) > bound else (-(1 << 62), 1 << 62)
    lo = -bound - center
    hi = bound - center
    if step > 0:
        return (-(-lo // step), hi // step)
    return (-(-hi // step), lo // step)


def _intersect(w1: tuple[int, int] | None, w2: tuple[int, int] | None) -> tuple[int, int] | None:
    if w1 is None or w2 is None:
        return None
    lo, hi = max(w1[0], w2[0]), min(w1[1], w2[1])
    return None if lo > hi else (lo, hi)


def _quadratic_window(c0: int, d0: int, sa: int, sb: int, cap: float) -> tuple[int, int] | None:
    """Float k-range with (c0+k*sa)^2 + (d0+k*sb)^2 <= cap, padded by one."""
    A = sa * sa + sb * sb
    B = 2 * (c0 * sa + d0 * sb)
    C = c0 * c0 + d0 * d0 - cap
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    root = math.sqrt(disc)
    lo = (-B - root) / (2 * A)
    hi = (-B + root) / (2 * A)
    return (math.floor(lo) - 1, math.ceil(hi) + 1)


def _row_cap_sq(gauge: Gauge, threshold: float) -> float | None:
    """Upper bound on a single row's squared euclidean norm, if quadratic."""
    if gauge.kind == "rnorm" and gauge.r == 2:
        return float(threshold) ** 2
    if gauge.kind == "height":
        return float(threshold) ** 2
    if gauge.kind == "hyperbolic":
        return 2.0 * math.cosh(threshold)
    return None


def _iter_sl2z_rows(bound: int, cap_sq: float | None) -> Iterator[tuple[int, int]]:
    for a in range(-bound, bound + 1):
        aa = a * a
        for b in range(-bound, bound + 1):
            if math.gcd(a, b) != 1:
                continue
            if cap_sq is not None and aa + b * b > cap_sq:
                continue
            yield a, b


def _sl2z_chunk(
    gauge: Gauge, threshold: float, a_range: range, bound: int, cap_sq: float | None
) -> list[GroupElement]:
    out: list[GroupElement] = []
    for a in a_range:
        aa = a * a
        for b in range(-bound, bound + 1):
            if math.gcd(a, b) != 1:
                continue
            if cap_sq is not None and aa + b * b + 1 > cap_sq:
                continue
            g, x, y = ext_gcd(a, b)
            d0, c0 = x, -y  # a*d0 - b*c0 = 1
            window = _intersect(_window_1d(c0, a, bound), _window_1d(d0, b, bound))
            if cap_sq is not None:
                window = _intersect(window, _quadratic_window(c0, d0, a, b, cap_sq - aa - b * b))
            if window is None:
                continue
            klo, khi = window
            # ascend in (c, d) lex order: c is monotone in k unless a == 0,
            # in which case d decides (b = +-1 there).
            lead = a if a != 0 else b
            ks = range(klo, khi + 1) if lead > 0 else range(khi, klo - 1, -1)
            for k in ks:
                c, d = c0 + k * a, d0 + k * b
                el = GroupElement(((a, b), (c, d)))
                if gauge_leq(gauge, el, threshold):
                    out.append(el)
    return out


def _enumerate_sl2z(
    gauge: Gauge, threshold: float, threads: int
) -> Iterator[GroupElement]:
    bound = entry_bound(gauge, threshold)
    if bound < 1:
        return
    cap_sq = _row_cap_sq(gauge, threshold)
    a_values = range(-bound, bound + 1)
    if threads <= 1 or len(a_values) < 4:
        yield from _sl2z_chunk(gauge, threshold, a_values, bound, cap_sq)
        return
    n_chunks = min(threads, len(a_values))
    edges = [
        a_values[(i * len(a_values)) // n_chunks : ((i + 1) * len(a_values)) // n_chunks]
        for i in range(n_chunks)
    ]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(
            lambda rng: _sl2z_chunk(gauge, threshold, rng, bound, cap_sq), edges
        )
        for part in parts:
            yield from part


def _cross(u: tuple[int, int, int], v: tuple[int, int, int]) -> tuple[int, int, int]:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _solve_dot_one(w: tuple[int, int, int]) -> tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]:
    """Particular solution and null-lattice basis for w . x = 1 over Z^3.

    Assumes gcd(w) = 1.  The basis spans the full rank-2 lattice of
    homogeneous solutions, so the affine sweep misses nothing.
    """
    w1, w2, w3 = w
    g12, u1, u2 = ext_gcd(w1, w2)
    if g12 == 0:
        # w = (0, 0, +-1)
        return (0, 0, w3), (1, 0, 0), (0, 1, 0)
    g, v12, v3 = ext_gcd(g12, w3)
    x0 = (v12 * u1, v12 * u2, v3)
    b1 = (-w2 // g12, w1 // g12, 0)
    b2 = (u1 * w3, u2 * w3, -g12)
    return x0, b1, b2


def _iter_sl3z_rows(bound: int, cap_sq: float) -> list[tuple[int, int, int]]:
    rows = []
    for r in product(range(-bound, bound + 1), repeat=3):
        if r == (0, 0, 0):
            continue
        if r[0] * r[0] + r[1] * r[1] + r[2] * r[2] <= cap_sq:
            rows.append(r)
    return rows


def _third_row_candidates(
    w: tuple[int, int, int], bound: int, cap_sq: float
) -> list[tuple[int, int, int]]:
    """All integer rows r3 with w . r3 = 1 inside the entry/norm box."""
    x0, b1, b2 = _solve_dot_one(w)
    out = []
    if b2[2] == 0:
        # degenerate axis case: third coordinate is fixed at x0[2]
        if abs(x0[2]) > bound:
            return out
        rem = cap_sq - x0[2] * x0[2]
        if rem < 0:
            return out
        lim = min(bound, math.isqrt(int(rem)))
        for s in range(-lim, lim + 1):
            for t in range(-lim, lim + 1):
                r3 = (x0[0] + s * b1[0] + t * b2[0], x0[1] + s * b1[1] + t * b2[1], x0[2])
                if (
                    abs(r3[0]) <= bound
                    and abs(r3[1]) <= bound
                    and r3[0] * r3[0] + r3[1] * r3[1] <= rem
                ):
                    out.append(r3)
        return out
    t_window = _window_1d(x0[2], b2[2], bound)
    if t_window is None:
        return out
    for t in range(t_window[0], t_window[1] + 1):
        z = x0[2] + t * b2[2]
        rem = cap_sq - z * z
        if rem < 0:
            continue
        base0 = x0[0] + t * b2[0]
        base1 = x0[1] + t * b2[1]
        s_window = _intersect(_window_1d(base0, b1[0], bound), _window_1d(base1, b1[1], bound))
        if s_window is None:
            continue
        slo, shi = s_window
        assert shi - slo <= 8 * bound + 16  # finite sweep with a valid basis
        for s in range(slo, shi + 1):
            r3 = (base0 + s * b1[0], base1 + s * b1[1], z)
            if r3[0] * r3[0] + r3[1] * r3[1] + z * z <= rem + z * z:
                out.append(r3)
    return out


def _enumerate_sl3z(gauge: Gauge, threshold: float) -> Iterator[GroupElement]:
    bound = entry_bound(gauge, threshold)
    if bound < 1:
        return
    exact_r2 = gauge.r == 2
    total_cap = float(threshold) ** 2 if exact_r2 else 3.0 * bound * bound
    rows = _iter_sl3z_rows(bound, total_cap - 2.0 if exact_r2 else total_cap)
    for r1 in rows:
        if math.gcd(math.gcd(r1[0], r1[1]), r1[2]) != 1:
            continue
        n1 = r1[0] * r1[0] + r1[1] * r1[1] + r1[2] * r1[2]
        for r2 in rows:
            n2 = r2[0] * r2[0] + r2[1] * r2[1] + r2[2] * r2[2]
            if exact_r2 and n1 + n2 + 1 > total_cap:
                continue
            w = _cross(r1, r2)
            if w == (0, 0, 0):
                continue
            if math.gcd(math.gcd(w[0], w[1]), w[2]) != 1:
                continue
            rem = (total_cap - n1 - n2) if exact_r2 else total_cap
            kept = []
            for r3 in _third_row_candidates(w, bound, rem):
                el = GroupElement((r1, r2, r3))
                if gauge_leq(gauge, el, threshold):
                    kept.append(el)
            kept.sort(key=lambda e: e.entries[2])
            yield from kept


def _enumerate_sl2z1p(gauge: Gauge, threshold: float) -> Iterator[GroupElement]:
    p = gauge.prime
    t_sq = float(threshold) ** 2
    bound = entry_bound(gauge, threshold)
    if bound < 1:
        return
    # Hadamard: det = p^(2k) <= ||A||^2 / 2, so the level ladder is finite
    k = 0
    while k == 0 or 2.0 * p ** (2 * k) <= t_sq:
        yield from _sl2_fixed_det(gauge, threshold, p ** (2 * k), p, k, bound, t_sq)
        k += 1


def _sl2_fixed_det(
    gauge: Gauge, threshold: float, det: int, p: int, k: int, bound: int, t_sq: float
) -> Iterator[GroupElement]:
    """Integer matrices with determinant det = p^(2k), (A, p) = 1, height <= threshold."""
    for a in range(-bound, bound + 1):
        aa = a * a
        for b in range(-bound, bound + 1):
            if a == 0 and b == 0:
                continue
            if aa + b * b + 1 > t_sq:
                continue
            g, x, y = ext_gcd(a, b)
            if det % g:
                continue
            m = det // g
            d0, c0 = x * m, -y * m  # a*d0 - b*c0 = det
            sa, sb = a // g, b // g
            window = _intersect(_window_1d(c0, sa, bound), _window_1d(d0, sb, bound))
            window = _intersect(window, _quadratic_window(c0, d0, sa, sb, t_sq - aa - b * b))
            if window is None:
                continue
            klo, khi = window
            lead = sa if sa != 0 else sb
            ks = range(klo, khi + 1) if lead > 0 else range(khi, klo - 1, -1)
            for j in ks:
                c, d = c0 + j * sa, d0 + j * sb
                assert a * d - b * c == det
                if k > 0 and all(v % p == 0 for v in (a, b, c, d)):
                    continue
                el = GroupElement(((a, b), (c, d)), prime=p, p_power=k)
                if gauge_leq(gauge, el, threshold):
                    yield el


def enumerate_ball(
    group: str,
    gauge: Gauge,
    threshold: float,
    *,
    budget: int | None = None,
    threads: int = 1,
) -> Iterator[GroupElement]:
    """Yield all lattice elements of gauge value <= threshold in canonical order.

    Canonical order is (p-power, entries row-major) lexicographic; runs are
    reproducible across thread counts.  Raises BudgetError before touching the
    ball if the a-priori estimate exceeds the budget.
    """
    _check_supported(group, gauge)
    if threshold <= 0:
        raise SpecError(f"threshold must be positive, got {threshold}")
    cap = _resolve_budget(budget)
    est = estimate_count(group, gauge, threshold)
    if est > cap:
        raise BudgetError(
            f"estimated {est} elements for {group} ball at threshold {threshold:g} "
            f"exceeds budget {cap}"
        )
    if group == "sl2z":
        yield from _enumerate_sl2z(gauge, threshold, threads)
    elif group == "sl3z":
        yield from _enumerate_sl3z(gauge, threshold)
    else:
        yield from _enumerate_sl2z1p(gauge, threshold)


@dataclass(frozen=True)
class CountRow:
    """One threshold's worth of counting data."""

    threshold: float
    count: int
    volume: float | None
    ratio: float | None
    abs_dev: float | None


@dataclass(frozen=True)
class CountSeries:
    group: str
    gauge_desc: str
    rows: tuple[CountRow, ...]

    def thresholds(self) -> list[float]:
        return [r.threshold for r in self.rows]

    def counts(self) -> list[int]:
        return [r.count for r in self.rows]

    def table(self) -> list[dict[str, object]]:
        out: list[dict[str, object]] = []
        for r in self.rows:
            out.append(
                {
                    "threshold": r.threshold,
                    "count": r.count,
                    "volume": r.volume,
                    "ratio": r.ratio,
                    "abs_dev": r.abs_dev,
                }
            )
        return out


def bucket_index(gauge: Gauge, el: GroupElement, thresholds: Sequence[float]) -> int:
    """Smallest i with gauge(el) <= thresholds[i], decided exactly at ties."""
    value = gauge_eval(gauge, el)
    i = bisect.bisect_left(thresholds, value)
    while i > 0 and gauge_leq(gauge, el, thresholds[i - 1]):
        i -= 1
    while i < len(thresholds) and not gauge_leq(gauge, el, thresholds[i]):
        i += 1
    return i


def count_series(
    group: str,
    gauge: Gauge,
    thresholds: Sequence[float],
    *,
    with_volume: bool = True,
    budget: int | None = None,
    threads: int = 1,
    elements: Sequence[GroupElement] | None = None,
) -> CountSeries:
    """Cumulative lattice counts over an increasing threshold grid.

    One enumeration pass at the largest threshold feeds every bucket; volumes
    (when the gauge has a computable Haar volume) are normalized so that the
    ratio column tends to 1.
    """
    thr = [float(t) for t in thresholds]
    if not thr or any(b <= a for a, b in zip(thr, thr[1:])):
        raise SpecError("thresholds must be strictly increasing and nonempty")
    if elements is None:
        elements = list(
            enumerate_ball(group, gauge, thr[-1], budget=budget, threads=threads)
        )
    buckets = [0] * (len(thr) + 1)
    for el in elements:
        buckets[bucket_index(gauge, el, thr)] += 1
    counts = []
    running = 0
    for i in range(len(thr)):
        running += buckets[i]
        counts.append(running)
    volumes: list[float | None] = [None] * len(thr)
    if with_volume:
        from .haar import lattice_normalized_volumes

        vols = lattice_normalized_volumes(group, gauge, thr)
        if vols is not None:
            volumes = list(vols)
    rows = []
    for t, cnt, vol in zip(thr, counts, volumes):
        if vol is not None and vol > 0:
            ratio = cnt / vol
            rows.append(CountRow(t, cnt, vol, ratio, abs(ratio - 1.0)))
        else:
            rows.append(CountRow(t, cnt, vol, None, None))
    return CountSeries(group=group, gauge_desc=gauge.describe(), rows=tuple(rows))


@dataclass(frozen=True)
class CosetHistogram:
    """Element counts per residue class mod q."""

    q: int
    counts: tuple[tuple[ResidueClass, int], ...]
    total: int

    def as_dict(self) -> dict[ResidueClass, int]:
        return dict(self.counts)

    def fraction(self, cls: ResidueClass) -> float:
        return self.as_dict().get(cls, 0) / self.total if self.total else 0.0

    def sup_deviation(self, group_order: int) -> float:
        """Largest |empirical mass - 1/group_order| over all residue classes."""
        target = 1.0 / group_order
        worst = target if len(self.counts) < group_order else 0.0
        for _, c in self.counts:
            worst = max(worst, abs(c / self.total - target))
        return worst


def coset_histogram(elements: Iterable[GroupElement], q: int) -> CosetHistogram:
    """Histogram of reductions mod q, keyed and ordered by residue class."""
    if q < 2:
        raise SpecError(f"modulus must be >= 2, got {q}")
    counter: Counter[ResidueClass] = Counter()
    total = 0
    for el in elements:
        counter[reduce_mod(el, q)] += 1
        total += 1
    items = sorted(counter.items(), key=lambda kv: kv[0].sort_key())
    return CosetHistogram(q=q, counts=tuple(items), total=total)


@lru_cache(maxsize=None)
def sl_residue_order(n: int, q: int) -> int:
    """|SL_n(Z/q)| by direct enumeration (kept to small n, q)."""
    if q < 2:
        raise SpecError(f"modulus must be >= 2, got {q}")
    if n == 2 and q > 16 or n == 3 and q > 4:
        raise SpecError(f"residue group SL_{n}(Z/{q}) too large for direct enumeration")
    count = 0
    for entries in product(range(q), repeat=n * n):
        rows = tuple(entries[i * n : (i + 1) * n] for i in range(n))
        if int_det(rows) % q == 1:
            count += 1
    return count


@dataclass(frozen=True)
class OrbitCount:
    """Orbit data for a binary form under integer substitutions."""

    orbit_count: int
    stabilizer_order: int
    gamma_count: int


def orbit_forms_count(
    f0: BinaryForm, threshold: float, *, budget: int | None = None
) -> OrbitCount:
    """Count distinct forms f0 . gamma of norm <= threshold, with multiplicity.

    gamma_count = orbit_count * stabilizer_order holds exactly: the stabilizer
    acts freely on the fibers of gamma -> f0 . gamma.
    """
    from .gauges import rep_form_gauge

    if f0.degree < 3:
        raise SpecError("orbit counting needs degree >= 3 (finite stabilizer)")
    gauge = rep_form_gauge(f0)
    base_norm = math.sqrt(form_norm_sq(f0))
    if float(threshold) < base_norm * (1.0 - 1e-12):
        return OrbitCount(0, 0, 0)
    seen: set[tuple[int, ...]] = set()
    gamma_count = 0
    for el in enumerate_ball("sl2z", gauge, threshold, budget=budget):
        gamma_count += 1
        seen.add(forms_substitute(f0, el).coeffs)
    stab = 0
    # any threshold between ||f0|| and the next orbit value isolates the stabilizer
    for el in enumerate_ball("sl2z", gauge, base_norm * (1.0 + 1e-9), budget=budget):
        if forms_substitute(f0, el).coeffs == f0.coeffs:
            stab += 1
    if stab == 0 or gamma_count % stab:
        raise SpecError(
            f"orbit bookkeeping failed: {gamma_count} elements, stabilizer {stab}"
        )
    return OrbitCount(gamma_count // stab, stab, gamma_count)
