"""Orbit averages on the torus and congruence cosets."""

import math
from fractions import Fraction

import pytest

from latcount.errors import BudgetError, SpecError
from latcount.gauges import height_gauge, rnorm_gauge
from latcount.groups import reduce_mod
from latcount.lattice import count_series, enumerate_ball
from latcount.torus import (
    CosetIndicator,
    CosetObservable,
    DeviationSeries,
    TorusCharacter,
    decay_fit,
    deviation_series,
    lattice_average,
)

X0 = (math.sqrt(2.0) - 1.0, math.sqrt(3.0) - 1.0)


@pytest.fixture(scope="module")
def ball20():
    return list(enumerate_ball("sl2z", rnorm_gauge(2), 20.0))


def test_character_labels_and_target():
    ch = TorusCharacter((1, 0))
    assert ch.label == "character:1,0"
    assert ch.target() == 0
    assert TorusCharacter((0, 0)).target() == 1
    with pytest.raises(SpecError):
        TorusCharacter(())


def test_coset_observable_label():
    assert CosetObservable(3).label == "coset-sup:q=3"
    with pytest.raises(SpecError):
        CosetObservable(1)


def test_average_over_smallest_ball_is_cosine_mean():
    # the radius-1.5 ball is exactly {+-I, +-J}; the orbit of (a, b) under the
    # inverses is (+-a, +-b) and (-+b, +-a), giving a clean closed form
    elements = list(enumerate_ball("sl2z", rnorm_gauge(2), 1.5))
    assert len(elements) == 4
    a, b = 0.37, 0.21
    avg = lattice_average(elements, TorusCharacter((1, 0)), (a, b))
    expected = 0.5 * (math.cos(2 * math.pi * a) + math.cos(2 * math.pi * b))
    assert avg.real == pytest.approx(expected, abs=1e-12)
    assert avg.imag == pytest.approx(0.0, abs=1e-12)


def test_constant_character_averages_to_one(ball20):
    avg = lattice_average(ball20, TorusCharacter((0, 0)), X0)
    assert avg == pytest.approx(1.0 + 0.0j, abs=1e-12)


def test_character_average_is_contraction(ball20):
    for m in ((1, 0), (2, -1), (0, 3)):
        avg = lattice_average(ball20, TorusCharacter(m), X0)
        assert abs(avg) <= 1.0 + 1e-12


def test_rational_point_exact_vs_float(ball20):
    pt_exact = (Fraction(1, 3), Fraction(1, 7))
    pt_float = (1.0 / 3.0, 1.0 / 7.0)
    a = lattice_average(ball20, TorusCharacter((1, 2)), pt_exact)
    b = lattice_average(ball20, TorusCharacter((1, 2)), pt_float)
    assert abs(a - b) <= 1e-12


def test_fixed_point_never_equidistributes():
    rows = deviation_series("sl2z", rnorm_gauge(2), [5.0, 10.0, 20.0], "torus",
                            TorusCharacter((1, 0)), (0, 0)).rows
    for _, dev, count in rows:
        assert count > 0
        assert dev == pytest.approx(1.0, abs=1e-12)


def test_coset_indicator_identity_class_at_small_radius():
    elements = list(enumerate_ball("sl2z", rnorm_gauge(2), math.sqrt(2.0) + 1e-9))
    assert len(elements) == 4
    ident = reduce_mod(elements[0].identity(2), 2)
    frac = lattice_average(elements, CosetIndicator(2, ident))
    assert frac.real == pytest.approx(0.5, abs=1e-12)


def test_indicator_fractions_sum_to_one(ball20):
    classes = {}
    for el in ball20:
        red = reduce_mod(el, 2)
        classes.setdefault(red.sort_key(), red)
    total = sum(lattice_average(ball20, CosetIndicator(2, rep)).real
                for rep in classes.values())
    assert total == pytest.approx(1.0, abs=1e-12)


def test_average_validation(ball20):
    with pytest.raises(SpecError):
        lattice_average([], TorusCharacter((1, 0)), (0.1, 0.2))
    with pytest.raises(SpecError):
        lattice_average(ball20, TorusCharacter((1, 0)))  # no base point
    with pytest.raises(SpecError):
        lattice_average(ball20, TorusCharacter((1, 0, 2)), X0)
    with pytest.raises(SpecError):
        lattice_average(ball20, TorusCharacter((1, 0)), (0.1, 0.2, 0.3))


def test_series_counts_match_count_series(ball20):
    thresholds = [5.0, 10.0, 20.0]
    series = deviation_series("sl2z", rnorm_gauge(2), thresholds, "torus",
                              TorusCharacter((1, 0)), X0, elements=ball20)
    counted = count_series("sl2z", rnorm_gauge(2), thresholds)
    assert [r[2] for r in series.rows] == [r.count for r in counted.rows]
    assert series.observable_label == "character:1,0"
    assert series.scale == "T"


def test_series_threads_deterministic():
    thresholds = [4.0, 8.0, 16.0]
    s1 = deviation_series("sl2z", rnorm_gauge(2), thresholds, "coset", 3,
                          threads=1)
    s3 = deviation_series("sl2z", rnorm_gauge(2), thresholds, "coset", 3,
                          threads=3)
    assert s1.rows == s3.rows


def test_series_validation():
    with pytest.raises(SpecError):
        deviation_series("sl2z", rnorm_gauge(2), [5.0], "banana",
                         TorusCharacter((1, 0)), X0)
    with pytest.raises(SpecError):
        deviation_series("sl2z", rnorm_gauge(2), [5.0, 4.0], "torus",
                         TorusCharacter((1, 0)), X0)
    with pytest.raises(SpecError):
        deviation_series("sl2z", rnorm_gauge(2), [5.0], "torus",
                         CosetObservable(2), X0)
    with pytest.raises(BudgetError):
        deviation_series("sl2z", rnorm_gauge(2), [30.0], "coset", 2, budget=10)


def test_torus_action_needs_integral_matrices():
    with pytest.raises(SpecError):
        deviation_series("sl2z1p", height_gauge(2), [4.0], "torus",
                         TorusCharacter((1, 0)), X0)


def test_sarith_coset_reduction_works_when_coprime():
    series = deviation_series("sl2z1p", height_gauge(2), [4.0, 8.0], "coset", 3)
    for _, dev, count in series.rows:
        assert count > 0
        assert 0.0 <= dev <= 1.0
    with pytest.raises(SpecError):
        deviation_series("sl2z1p", height_gauge(2), [4.0], "coset", 4)


def test_coset_deviation_decays(ball20):
    rows = deviation_series("sl2z", rnorm_gauge(2), [3.0, 20.0], "coset", 2).rows
    assert rows[1][1] < rows[0][1]


def test_csv_lines_schema():
    series = deviation_series("sl2z", rnorm_gauge(2), [4.0, 8.0], "coset", 3)
    lines = series.csv_lines()
    assert lines[0] == "t,deviation,count"
    assert len(lines) == 3
    assert lines[1].split(",")[2] == str(series.rows[0][2])


def test_decay_fit_recovers_synthetic_rate():
    rows = tuple((t, 2.0 * math.exp(-0.5 * t), 100) for t in
                 (2.0, 4.0, 6.0, 8.0, 10.0, 12.0))
    series = DeviationSeries(group="sl2z", gauge_label="hyperbolic", scale="t",
                             system="torus", observable_label="character:1,0",
                             rows=rows)
    fit = decay_fit(series)
    assert fit.model == "exp_decay"
    assert fit.a == pytest.approx(0.5, abs=1e-9)
    assert fit.r2 == pytest.approx(1.0)


def test_decay_fit_uses_log_threshold_on_T_scale():
    rows = tuple((T, 0.1 / T, 50) for T in (2.0, 4.0, 8.0, 16.0, 32.0, 64.0))
    series = DeviationSeries(group="sl2z", gauge_label="rnorm:2", scale="T",
                             system="coset", observable_label="coset-sup:q=2",
                             rows=rows)
    fit = decay_fit(series)
    assert fit.a == pytest.approx(1.0, abs=1e-9)


def test_decay_fit_needs_positive_rows():
    rows = tuple((t, 0.0, 10) for t in (1.0, 2.0, 3.0, 4.0, 5.0, 6.0))
    series = DeviationSeries(group="sl2z", gauge_label="hyperbolic", scale="t",
                             system="torus", observable_label="character:1,0",
                             rows=rows)
    with pytest.raises(SpecError):
        decay_fit(series)
