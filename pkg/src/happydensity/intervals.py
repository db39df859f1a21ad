"""Outward-rounded interval arithmetic over exact rationals.

Endpoints are :class:`fractions.Fraction` values rounded to ``prec``
significant bits after every operation: lower endpoints toward -inf, upper
endpoints toward +inf. Roots and ``exp`` are bounded with integer roots and
a Taylor remainder, so every enclosure is rigorous.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import gmpy2

DEFAULT_PREC = 256

Number = Union[int, Fraction]


def round_dyadic(x: Fraction, prec: int, up: bool) -> Fraction:
    """Round x to a dyadic rational with about ``prec`` significant bits."""
    x = Fraction(x)
    if x == 0 or prec is None:
        return x
    n, d = x.numerator, x.denominator
    e = abs(n).bit_length() - d.bit_length() - prec
    if e >= 0:
        num, den = n, d << e
    else:
        num, den = n << -e, d
    q = -((-num) // den) if up else num // den
    return Fraction(q << e) if e >= 0 else Fraction(q, 1 << -e)


def _iroot_floor(n: int, k: int) -> int:
    return int(gmpy2.iroot(gmpy2.mpz(n), k)[0])


def _iroot_ceil(n: int, k: int) -> int:
    r, exact = gmpy2.iroot(gmpy2.mpz(n), k)
    return int(r) if exact else int(r) + 1


def _root_bounds(x: Fraction, k: int, prec: int) -> tuple[Fraction, Fraction]:
    """Floor/ceil enclosure of x**(1/k) for x >= 0 on a 2**-s grid."""
    if x < 0:
        raise ValueError("root of a negative number")
    if x == 0:
        return Fraction(0), Fraction(0)
    n, d = x.numerator, x.denominator
    mag = (n.bit_length() - d.bit_length()) // k
    s = prec + 2 - mag
    # x * 2**(k*s) as floor and ceil integers
    if s >= 0:
        num, den = n << (k * s), d
    else:
        num, den = n, d << (-k * s)
    fl, cl = num // den, -((-num) // den)
    lo, hi = _iroot_floor(fl, k), _iroot_ceil(cl, k)
    if s >= 0:
        return Fraction(lo, 1 << s), Fraction(hi, 1 << s)
    return Fraction(lo << -s), Fraction(hi << -s)


class Interval:
    """Closed interval [lo, hi] with rational endpoints."""

    __slots__ = ("lo", "hi", "prec")

    def __init__(self, lo: Number, hi: Number | None = None, prec: int = DEFAULT_PREC):
        lo = Fraction(lo)
        hi = lo if hi is None else Fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.prec = prec
        self.lo = round_dyadic(lo, prec, up=False)
        self.hi = round_dyadic(hi, prec, up=True)

    @classmethod
    def exact(cls, x: Number, prec: int = DEFAULT_PREC) -> "Interval":
        return cls(x, x, prec)

    def _coerce(self, other) -> "Interval":
        if isinstance(other, Interval):
            return other
        return Interval(other, other, self.prec)

    def _new(self, lo, hi, other=None):
        p = self.prec if other is None else max(self.prec, other.prec)
        return Interval(lo, hi, p)

    def __add__(self, other):
        o = self._coerce(other)
        return self._new(self.lo + o.lo, self.hi + o.hi, o)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.hi, -self.lo)

    def __sub__(self, other):
        o = self._coerce(other)
        return self._new(self.lo - o.hi, self.hi - o.lo, o)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return self._new(min(ps), max(ps), o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("interval divisor contains zero")
        ps = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return self._new(min(ps), max(ps), o)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        if k % 2 == 1 or self.lo >= 0:
            return self._new(self.lo ** k, self.hi ** k)
        if self.hi <= 0:
            return self._new(self.hi ** k, self.lo ** k)
        return self._new(0, max(self.lo ** k, self.hi ** k))

    def root(self, k: int) -> "Interval":
        lo, _ = _root_bounds(self.lo, k, self.prec)
        _, hi = _root_bounds(self.hi, k, self.prec)
        return self._new(lo, hi)

    def sqrt(self) -> "Interval":
        return self.root(2)

    def exp(self) -> "Interval":
        return self._new(exp_bounds(self.lo, self.prec)[0], exp_bounds(self.hi, self.prec)[1])

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return self._new(0, max(-self.lo, self.hi))

    # predicates are certified: True means the relation holds for every point
    def certainly_le(self, other) -> bool:
        return self.hi <= self._coerce(other).lo

    def certainly_lt(self, other) -> bool:
        return self.hi < self._coerce(other).lo

    def certainly_nonneg(self) -> bool:
        return self.lo >= 0

    def contains(self, x: Number) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __repr__(self):
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r}, prec={self.prec})"


def exp_bounds(x: Fraction, prec: int) -> tuple[Fraction, Fraction]:
    """Enclosure of exp(x): halve until |y| <= 1/2, sum the Taylor series with
    a remainder bound of 2|y|^K/K!, then square back with directed rounding."""
    x = Fraction(x)
    r = 0
    while abs(x) > Fraction(1, 2) * (1 << r):
        r += 1
    y = x / (1 << r)
    target = Fraction(1, 1 << (prec + r + 8))
    s, term, k = Fraction(0), Fraction(1), 0
    while True:
        s += term
        k += 1
        term = term * y / k
        if 2 * abs(term) <= target:
            break
    rem = 2 * abs(term)
    w = prec + r + 8
    lo = round_dyadic(s - rem, w, up=False)
    hi = round_dyadic(s + rem, w, up=True)
    for _ in range(r):
        lo = round_dyadic(lo * lo, w, up=False)
        hi = round_dyadic(hi * hi, w, up=True)
    return round_dyadic(lo, prec, up=False), round_dyadic(hi, prec, up=True)


def pow_rational(base: int, num: int, den: int, prec: int = DEFAULT_PREC) -> Interval:
    """Enclosure of base**(num/den) for integer base >= 1 and num >= 0."""
    g = math.gcd(num, den)
    num, den = num // g, den // g
    x = Fraction(base) ** num
    if den == 1:
        return Interval(x, x, prec)
    lo, hi = _root_bounds(x, den, prec)
    return Interval(lo, hi, prec)


# ---------------------------------------------------------------- decimal output

def _scaled(x: Fraction, digits: int, rounding: str) -> int:
    v = Fraction(x) * 10 ** digits
    if rounding == "down":
        return math.floor(v)
    if rounding == "up":
        return math.ceil(v)
    if rounding == "nearest":
        return round(v)
    raise ValueError(f"unknown rounding {rounding!r}")


def format_fixed(x: Fraction, digits: int = 30, rounding: str = "nearest") -> str:
    """Fixed-point decimal string of x, rounded in the stated direction."""
    q = _scaled(x, digits, rounding)
    sign = "-" if q < 0 else ""
    q = abs(q)
    if digits == 0:
        return f"{sign}{q}"
    s = str(q).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def decimal_exponent(x: Fraction) -> int:
    """Integer e with 10**e <= |x| < 10**(e+1); x must be nonzero."""
    x = abs(Fraction(x))
    e = len(str(x.numerator)) - len(str(x.denominator))
    while Fraction(10) ** e > x:
        e -= 1
    while Fraction(10) ** (e + 1) <= x:
        e += 1
    return e


def format_sci(x: Fraction, sig: int = 20, rounding: str = "nearest") -> str:
    """Scientific-notation string with ``sig`` significant digits."""
    x = Fraction(x)
    if x == 0:
        return "0"
    e = decimal_exponent(x)
    mant = x / Fraction(10) ** e
    q = _scaled(mant, sig - 1, rounding)
    if abs(q) >= 10 ** sig:      # rounding carried into a new digit
        e += 1
        q = _scaled(x / Fraction(10) ** e, sig - 1, rounding)
    sign = "-" if q < 0 else ""
    s = str(abs(q))
    body = s[0] + ("." + s[1:] if len(s) > 1 else "")
    return f"{sign}{body}e{e:+d}"


def power_of_ten_bound(x: Fraction) -> int:
    """Smallest k with |x| < 10**k."""
    if x == 0:
        raise ValueError("no finite power-of-ten exponent bound for 0")
    return decimal_exponent(x) + 1
