import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from converge.bounds import (
    BoundInputs,
    delta_n,
    error_recurrence,
    filter_count_factor,
    hoeffding_bound,
    theoretical_rate_exponent,
)


def test_rate_exponent():
    assert theoretical_rate_exponent(2) == 0.25
    assert theoretical_rate_exponent(1) == pytest.approx(2 / 7)
    assert theoretical_rate_exponent(10) == 0.125
    with pytest.raises(ValueError):
        theoretical_rate_exponent(0)


def test_filter_count_factor_examples():
    assert filter_count_factor((1, 1), "theorem") == 1
    assert filter_count_factor((2, 2, 2), "theorem") == 12  # F1 F2 + F0 F1 F2
    assert filter_count_factor((2, 2, 2), "appendix") == 6
    with pytest.raises(ValueError):
        filter_count_factor((2, 0), "theorem")
    with pytest.raises(ValueError):
        filter_count_factor((2, 2), "lemma")


def test_constant_width_leading_term():
    # constant width F and large L: the factor is dominated by F^{L+1}
    F, L = 3, 8
    factor = filter_count_factor((F,) * (L + 1), "theorem")
    assert factor / F ** (L + 1) == pytest.approx(1.0, rel=1.0 / (F - 1))


@settings(deadline=None, max_examples=100)
@given(
    widths=st.lists(st.integers(1, 6), min_size=2, max_size=7),
)
def test_theorem_equals_fl_times_appendix(widths):
    widths = tuple(widths)
    assert filter_count_factor(widths, "theorem") == widths[-1] * filter_count_factor(
        widths, "appendix"
    )


def test_recurrence_examples():
    assert error_recurrence(0.5, 0.0, (1,)) == [0.5]
    assert error_recurrence(0.1, 0.0, (1, 1, 1)) == pytest.approx([0.1, 0.2, 0.3])
    eps = error_recurrence(0.1, 0.0, (2, 3))
    assert eps == pytest.approx([0.2, 0.9])
    # closed form, appendix variant over widths (2, 3, anything)
    assert eps[-1] == pytest.approx(0.1 * filter_count_factor((2, 3, 1), "appendix"))
    with pytest.raises(ValueError):
        error_recurrence(-0.1, 0.0, (1,))


@settings(deadline=None, max_examples=100)
@given(
    delta=st.floats(0, 10, allow_nan=False),
    factors=st.lists(st.integers(1, 5), min_size=1, max_size=6),
)
def test_recurrence_matches_closed_form(delta, factors):
    eps = error_recurrence(delta, 0.0, factors)
    for level in range(1, len(factors) + 1):
        closed = delta * filter_count_factor(tuple(factors[:level]) + (1,), "appendix")
        assert eps[level - 1] == pytest.approx(closed, rel=1e-12, abs=1e-12)


def _inputs(d=2, n=1024, C=1.0, l2=1.0, sup=1.0):
    return BoundInputs(
        widths=(1, 1),
        lipschitz=C,
        intrinsic_dim=d,
        n=n,
        max_l2_norm=l2,
        max_sup_norm=sup,
    )


def test_delta_n_zero_constants():
    assert delta_n(_inputs(), c1=0.0, c2=0.0) == 0.0


def test_delta_n_linear_in_lipschitz():
    base = delta_n(_inputs(C=2.0))
    assert delta_n(_inputs(C=4.0)) == pytest.approx(2 * base)
    # C below 1 is clamped to C~ = 1
    assert delta_n(_inputs(C=0.5)) == pytest.approx(delta_n(_inputs(C=1.0)))


def test_delta_n_scaling_in_n():
    # with c2 = 0, quadrupling n scales d=2 delta by sqrt(ln 4n / ln n) / sqrt(2)
    n = 4096
    a = delta_n(_inputs(n=n), c2=0.0)
    b = delta_n(_inputs(n=4 * n), c2=0.0)
    expected = math.sqrt(math.log(4 * n) / math.log(n)) * 4 ** -0.25
    assert b / a == pytest.approx(expected, rel=1e-12)


def test_delta_n_d1_branch():
    d1 = delta_n(_inputs(d=1, sup=0.0))
    assert d1 == pytest.approx(math.sqrt(math.log(1024)) / 1024 ** (2 / 7))
    dsup = delta_n(_inputs(d=1, l2=0.0))
    assert dsup == pytest.approx(math.sqrt(math.log(1024)) / math.sqrt(1024))


def test_delta_n_nonincreasing_in_n():
    vals = [delta_n(_inputs(n=n)) for n in range(3, 2000, 13)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_hoeffding_bound():
    assert hoeffding_bound(100, 0.0) == 0.0
    assert hoeffding_bound(4096, 1.0) == pytest.approx(0.19119, abs=1e-4)
    with pytest.raises(ValueError):
        hoeffding_bound(1, 1.0)
    with pytest.raises(ValueError):
        hoeffding_bound(100, -1.0)


@settings(deadline=None, max_examples=50)
@given(n=st.integers(2, 10**7))
def test_hoeffding_bound_shrinks_when_n_quadruples(n):
    assert hoeffding_bound(4 * n, 1.0) < hoeffding_bound(n, 1.0)
