"""Enumerator correctness against exhaustive oracles, plus series plumbing."""

import math
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _brute import brute_sl2z, brute_sl2z1p, brute_sl3z
from latcount.errors import BudgetError, SpecError
from latcount.gauges import (
    BinaryForm,
    gauge_eval,
    height_gauge,
    hyperbolic_gauge,
    parse_gauge,
    rnorm_gauge,
)
from latcount.groups import GroupElement, group_inv, group_mul, reduce_mod
from latcount.lattice import (
    coset_histogram,
    count_series,
    enumerate_ball,
    orbit_forms_count,
    sl_residue_order,
)

G2 = rnorm_gauge(2)


def test_sl2z_matches_brute_all_gauges():
    cases = [
        (rnorm_gauge(2), 4.0),
        (rnorm_gauge(1), 5.0),
        (rnorm_gauge(math.inf), 2.0),
        (hyperbolic_gauge(), 2.2),
        (parse_gauge("form:deg=4:coeffs=1,0,0,0,1"), 40.0),
    ]
    for gauge, T in cases:
        assert set(enumerate_ball("sl2z", gauge, T)) == brute_sl2z(gauge, T)


def test_sl3z_matches_brute():
    assert set(enumerate_ball("sl3z", G2, 2.5)) == brute_sl3z(G2, 2.5)


def test_sl2z1p_matches_brute():
    for p, T in ((2, 4.0), (3, 4.0)):
        g = height_gauge(p)
        assert set(enumerate_ball("sl2z1p", g, T)) == brute_sl2z1p(g, T)


def test_frozen_counts():
    assert sum(1 for _ in enumerate_ball("sl2z", G2, 1.4)) == 0
    assert sum(1 for _ in enumerate_ball("sl2z", G2, math.sqrt(2.0))) == 4
    assert sum(1 for _ in enumerate_ball("sl2z", G2, 2.0)) == 20
    assert sum(1 for _ in enumerate_ball("sl2z", G2, 3.0)) == 52
    assert sum(1 for _ in enumerate_ball("sl2z", G2, 4.0)) == 100
    assert sum(1 for _ in enumerate_ball("sl3z", G2, 2.0)) == 312
    assert sum(1 for _ in enumerate_ball("sl2z1p", height_gauge(2), 3.0)) == 68


def test_canonical_order_and_thread_determinism():
    seq1 = list(enumerate_ball("sl2z", G2, 6.0, threads=1))
    seq3 = list(enumerate_ball("sl2z", G2, 6.0, threads=3))
    assert seq1 == seq3
    keys = [el.sort_key() for el in seq1]
    assert keys == sorted(keys)
    assert len(keys) == len(set(keys))


def test_threshold_validation_and_budget():
    with pytest.raises(SpecError):
        list(enumerate_ball("sl2z", G2, 0.0))
    with pytest.raises(BudgetError):
        list(enumerate_ball("sl2z", G2, 500.0, budget=1000))


def test_budget_env_override(monkeypatch):
    monkeypatch.setenv("LATCOUNT_BUDGET", "10")
    with pytest.raises(BudgetError):
        list(enumerate_ball("sl2z", G2, 100.0))
    monkeypatch.setenv("LATCOUNT_BUDGET", "banana")
    with pytest.raises(SpecError):
        list(enumerate_ball("sl2z", G2, 10.0))


def test_unsupported_group_gauge_pairs():
    with pytest.raises(SpecError):
        list(enumerate_ball("sl3z", hyperbolic_gauge(), 2.0))
    with pytest.raises(SpecError):
        list(enumerate_ball("sl2z1p", G2, 3.0))
    with pytest.raises(SpecError):
        list(enumerate_ball("sl2z", height_gauge(2), 3.0))


@given(st.sampled_from([1.9, 2.4, 3.0, 3.6]))
@settings(max_examples=4, deadline=None)
def test_ball_closed_under_inverse_and_negation(T):
    ball = set(enumerate_ball("sl2z", G2, T))
    for el in ball:
        assert group_inv(el) in ball
        neg = GroupElement.from_rows(
            tuple(tuple(-x for x in row) for row in el.entries)
        )
        assert neg in ball


def test_count_series_buckets_match_separate_runs():
    thr = [1.5, 2.0, 2.5, 3.0, 4.0]
    series = count_series("sl2z", G2, thr, with_volume=False)
    for t, row in zip(thr, series.rows):
        assert row.count == sum(1 for _ in enumerate_ball("sl2z", G2, t))


def test_count_series_requires_increasing_thresholds():
    with pytest.raises(SpecError):
        count_series("sl2z", G2, [2.0, 2.0], with_volume=False)


def test_count_series_ratio_columns():
    series = count_series("sl2z", G2, [20.0, 40.0])
    for row in series.rows:
        assert row.volume is not None and row.volume > 0
        assert row.ratio == pytest.approx(row.count / row.volume)
        assert row.abs_dev == pytest.approx(abs(row.ratio - 1.0))


def test_coset_histogram_spec_example():
    ball = list(enumerate_ball("sl2z", G2, math.sqrt(2.0)))
    hist = coset_histogram(ball, 2)
    assert hist.total == 4
    assert sorted(c for _, c in hist.counts) == [2, 2]
    assert hist.sup_deviation(6) == pytest.approx(1.0 / 3.0)


def test_sl_residue_orders():
    assert sl_residue_order(2, 2) == 6
    assert sl_residue_order(2, 3) == 24
    assert sl_residue_order(2, 5) == 120
    assert sl_residue_order(3, 2) == 168
    with pytest.raises(SpecError):
        sl_residue_order(3, 7)


def test_reduction_is_homomorphism_on_ball():
    ball = list(enumerate_ball("sl2z", G2, 2.5))
    for a in ball[:8]:
        for b in ball[:8]:
            assert reduce_mod(group_mul(a, b), 3) == reduce_mod(a, 3) * reduce_mod(b, 3)


def test_orbit_forms_spec_example():
    f0 = BinaryForm(4, (1, 0, 0, 0, 1))
    base = math.sqrt(2.0)
    oc = orbit_forms_count(f0, base)
    assert (oc.orbit_count, oc.stabilizer_order, oc.gamma_count) == (1, 4, 4)
    below = orbit_forms_count(f0, base - 1e-6)
    assert below.gamma_count == 0


def test_orbit_stabilizer_identity_exact():
    f0 = BinaryForm(4, (1, 0, 0, 0, 1))
    for T in (5.0, 50.0, 500.0):
        oc = orbit_forms_count(f0, T)
        assert oc.gamma_count == oc.orbit_count * oc.stabilizer_order
        assert oc.stabilizer_order == 4


def test_orbit_forms_requires_degree_three():
    with pytest.raises(SpecError):
        orbit_forms_count(BinaryForm(2, (1, 0, 1)), 10.0)


def test_sarith_structure_per_element():
    g = height_gauge(2)
    for el in enumerate_ball("sl2z1p", g, 6.0):
        a, b = el.entries[0]
        c, d = el.entries[1]
        det = a * d - b * c
        assert det == 4 ** el.p_power
        if el.p_power > 0:
            assert any(x % 2 != 0 for x in (a, b, c, d))
