"""Generalized b-happy functions and their digit statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import (
    InvalidBaseError,
    InvalidLengthError,
    NegativeEntryError,
    ValidationError,
    ViolatedAnchorError,
)


@dataclass(frozen=True)
class HappyFunction:
    """Map sending n to the sum of ``h[a]`` over the base-``base`` digits a of n.

    Derived statistics are exact: ``mu`` and ``sigma_sq`` are the mean and
    variance of ``h`` over a uniformly random digit.
    """

    base: int
    h: tuple[int, ...]
    alpha: int = field(init=False)
    mu: Fraction = field(init=False)
    sigma_sq: Fraction = field(init=False)
    d_star: int = field(init=False)

    def __post_init__(self):
        _validate(self.base, self.h)
        b = self.base
        s1 = sum(self.h)
        s2 = sum(x * x for x in self.h)
        alpha = max(self.h)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", Fraction(s1, b))
        object.__setattr__(self, "sigma_sq", Fraction(s2 * b - s1 * s1, b * b))
        object.__setattr__(self, "d_star", _least_contracting_length(alpha, b))

    def __call__(self, n: int) -> int:
        return apply(self, n)

    @property
    def threshold(self) -> int:
        """``base**(d_star - 1)``; every n at or above it satisfies H(n) < n."""
        return self.base ** (self.d_star - 1)

    def describe(self) -> dict:
        return {"base": self.base, "digits": list(self.h)}

    def __str__(self):
        return f"HappyFunction(base={self.base}, digits={list(self.h)})"


def _validate(base, h):
    if not isinstance(base, int) or base < 2:
        raise InvalidBaseError(f"base must be an integer >= 2, got {base!r}")
    if len(h) != base:
        raise InvalidLengthError(
            f"digit sequence must have exactly {base} entries, got {len(h)}")
    if any(not isinstance(x, int) for x in h):
        raise ValidationError("digit images must be integers")
    if any(x < 0 for x in h):
        raise NegativeEntryError(f"digit images must be non-negative: {list(h)}")
    if h[0] != 0 or h[1] != 1:
        raise ViolatedAnchorError(
            f"digit sequence must start with h(0)=0, h(1)=1, got {list(h[:2])}")


def _least_contracting_length(alpha, base):
    d = 1
    while alpha * d >= base ** (d - 1):
        d += 1
    return d


def new_happy_function(base: int, h: Sequence[int]) -> HappyFunction:
    return HappyFunction(base, tuple(int(x) for x in h))


def power_function(e: int, base: int) -> HappyFunction:
    """The (e, b)-happy function: each digit maps to its e-th power."""
    if e < 1:
        raise ValidationError(f"exponent must be >= 1, got {e}")
    if base < 2:
        raise InvalidBaseError(f"base must be an integer >= 2, got {base!r}")
    return HappyFunction(base, tuple(i ** e for i in range(base)))


def apply(H: HappyFunction, n: int) -> int:
    """Digit-image sum of n. By convention ``apply(H, 0) == 0``."""
    if n < 0:
        raise ValidationError("H is defined on non-negative integers only")
    b, h = H.base, H.h
    s = 0
    while n:
        n, r = divmod(n, b)
        s += h[r]
    return s


def d_star_of(H: HappyFunction) -> int:
    return H.d_star


def parse_digit_spec(spec: str, base: int) -> HappyFunction:
    """Parse ``"power:e"`` or a comma-separated integer list."""
    spec = spec.strip()
    if spec.startswith("power:"):
        try:
            e = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad power shorthand {spec!r}") from None
        return power_function(e, base)
    try:
        h = [int(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"bad digit list {spec!r}") from None
    return new_happy_function(base, h)
