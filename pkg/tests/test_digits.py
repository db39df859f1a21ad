from fractions import Fraction
import random

import pytest
from hypothesis import given, settings, strategies as st

from happydensity import apply, d_star_of, new_happy_function, parse_digit_spec, power_function
from happydensity.errors import (
    InvalidBaseError,
    InvalidLengthError,
    NegativeEntryError,
    ValidationError,
    ViolatedAnchorError,
)


def test_squares_statistics(H2):
    assert H2.h == (0, 1, 4, 9, 16, 25, 36, 49, 64, 81)
    assert H2.alpha == 81
    assert H2.mu == Fraction(57, 2)
    assert H2.sigma_sq == Fraction(72105, 100)


def test_cubes_sequence(H3):
    assert list(H3.h) == [0, 1, 8, 27, 64, 125, 216, 343, 512, 729]
    assert H3.mu == Fraction(2025, 10)


def test_binary_counting_function():
    H = power_function(1, 2)
    assert H.h == (0, 1)
    assert d_star_of(H) == 3


@pytest.mark.parametrize("e, d", [(2, 4), (3, 5)])
def test_d_star_base_ten(e, d):
    assert d_star_of(power_function(e, 10)) == d


def test_apply_values(H2):
    assert apply(H2, 4) == 16
    assert apply(H2, 1) == 1
    assert apply(H2, 19) == 82
    assert H2(145) == 42
    assert apply(H2, 0) == 0
    with pytest.raises(ValidationError):
        apply(H2, -5)


def test_validation_errors_are_distinct():
    with pytest.raises(ViolatedAnchorError):
        new_happy_function(10, [0, 2, 4, 9, 16, 25, 36, 49, 64, 81])
    with pytest.raises(ViolatedAnchorError):
        new_happy_function(3, [1, 1, 4])
    with pytest.raises(InvalidLengthError):
        new_happy_function(10, [0, 1, 4])
    with pytest.raises(NegativeEntryError):
        new_happy_function(3, [0, 1, -4])
    with pytest.raises(InvalidBaseError):
        new_happy_function(1, [0])
    with pytest.raises(ValidationError):
        power_function(0, 10)


def test_parse_digit_spec():
    assert parse_digit_spec("power:3", 10).h[-1] == 729
    assert parse_digit_spec("0,1,7,4,17,9,13", 7).h == (0, 1, 7, 4, 17, 9, 13)
    with pytest.raises(ValidationError):
        parse_digit_spec("power:x", 10)
    with pytest.raises(ValidationError):
        parse_digit_spec("0,1,a", 3)


def test_describe_is_explicit_array(H7):
    assert H7.describe() == {"base": 7, "digits": [0, 1, 7, 4, 17, 9, 13]}


def digit_functions():
    @st.composite
    def build(draw):
        b = draw(st.integers(2, 12))
        rest = draw(st.lists(st.integers(0, 200), min_size=b - 2, max_size=b - 2))
        return new_happy_function(b, [0, 1] + rest)
    return build()


@settings(max_examples=60, deadline=None)
@given(digit_functions())
def test_contraction_above_threshold(H):
    rng = random.Random(H.base * 1000 + H.alpha)
    t = H.threshold
    for _ in range(170):   # 60 functions x 170 draws > 10**4 points
        n = rng.choice([t + rng.randrange(10 * t), rng.randrange(t, t * H.base ** 6)])
        assert apply(H, n) < n


@settings(max_examples=60, deadline=None)
@given(digit_functions(), st.integers(1, 10 ** 40))
def test_image_bounded_by_alpha_times_length(H, n):
    length = len(digits(n, H.base))
    assert apply(H, n) <= H.alpha * length


@settings(max_examples=60, deadline=None)
@given(digit_functions())
def test_statistics_are_exact(H):
    b = H.base
    assert H.mu == Fraction(sum(H.h), b)
    assert (H.mu * b).denominator == 1
    assert (H.sigma_sq * b * b).denominator == 1
    assert H.sigma_sq == Fraction(sum(x * x for x in H.h), b) - H.mu ** 2
    assert H.mu >= Fraction(1, b)
    d = H.d_star
    assert H.alpha * d < b ** (d - 1)
    assert all(H.alpha * k >= b ** (k - 1) for k in range(1, d))


def digits(n, b):
    out = []
    while n:
        n, r = divmod(n, b)
        out.append(r)
    return out
