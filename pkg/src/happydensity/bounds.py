"""Certified checks and bounds: the (B) inequalities, the loss exponent
delta(n), n-strict interval constructions and density certificates.

All real arithmetic goes through :class:`~happydensity.intervals.Interval`,
so a ``True`` verdict or an emitted bound can only be weaker than the truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .cycles import Cycle, CycleSet
from .digits import HappyFunction
from .distribution import DensityValue
from .errors import (
    BoundBFailed,
    ContainmentViolation,
    NotDivisibleByFour,
    PostconditionFailure,
    ValidationError,
)
from .intervals import (
    DEFAULT_PREC,
    Interval,
    format_fixed,
    format_sci,
    pow_rational,
    power_of_ten_bound,
    round_dyadic,
)

CERTIFICATE_SCHEMA = 1
UPPER = "upper-density-lower-bound"
LOWER = "lower-density-upper-bound"


def _sigma(H, prec):
    return Interval.exact(H.sigma_sq, prec).sqrt()


def _sqrt_mu(H, prec):
    return Interval.exact(H.mu, prec).sqrt()


def _b_pow(H, num, den, prec):
    return pow_rational(H.base, num, den, prec)


@dataclass(frozen=True)
class BoundBReport:
    n: int
    b1_ok: bool
    b2_ok: bool
    b3_ok: bool
    margins: tuple[Interval, Interval, Interval]   # RHS - LHS per condition

    @property
    def ok(self) -> bool:
        return self.b1_ok and self.b2_ok and self.b3_ok

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "B1": self.b1_ok, "B2": self.b2_ok, "B3": self.b3_ok,
            "margins_lo": [format_sci(m.lo, 12, "down") for m in self.margins],
        }


def check_bound_B(H: HappyFunction, n: int, prec: int = DEFAULT_PREC) -> BoundBReport:
    """Evaluate B1-B3 with every left-hand side rounded up."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    b = H.base
    mu = Interval.exact(H.mu, prec)
    sigma = _sigma(H, prec)
    rhs = Fraction(b) ** (n - 1)
    lhs1 = 4 * (1 + 3 * mu + Interval.exact(2, prec).sqrt() * sigma * _b_pow(H, 5 * n, 8, prec))
    lhs2 = (3 * mu * b).sqrt() * sigma
    rhs2 = _b_pow(H, 3 * n, 8, prec)
    lhs3 = 4 * mu * (3 * mu + 1 + _b_pow(H, 3 * n, 4, prec)
                     + 2 * sigma / _sqrt_mu(H, prec) * _b_pow(H, 5 * n, 8, prec))
    m1 = rhs - lhs1
    m2 = rhs2 - lhs2
    m3 = rhs - lhs3
    return BoundBReport(n, m1.certainly_nonneg(), m2.certainly_nonneg(),
                        m3.certainly_nonneg(), (m1, m2, m3))


def smallest_bound_B(H: HappyFunction, n_max: int = 4000, prec: int = DEFAULT_PREC) -> int:
    for n in range(1, n_max + 1):
        if check_bound_B(H, n, prec).ok:
            return n
    raise ValidationError(f"no n <= {n_max} satisfies bound (B)")


def delta(H: HappyFunction, n: int, prec: int = DEFAULT_PREC) -> Interval:
    """delta(n) = 2/(1 - b^(n/4)) + 4 sigma / (sqrt(mu) (1 - b^(n/8))); negative."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    r8 = _b_pow(H, n, 8, prec)
    r4 = _b_pow(H, n, 4, prec)
    return 2 / (1 - r4) + 4 * _sigma(H, prec) / (_sqrt_mu(H, prec) * (1 - r8))


def loss_exponent(H: HappyFunction, n1: int, prec: int = DEFAULT_PREC) -> Interval:
    """Exponent of the loss factor in its product-limit form,
    -2/(b^(n/4) - 1) - 4 sigma / (sqrt(mu) (b^(n/8) - 1))."""
    r8 = _b_pow(H, n1, 8, prec)
    r4 = _b_pow(H, n1, 4, prec)
    return -2 / (r4 - 1) - 4 * _sigma(H, prec) / (_sqrt_mu(H, prec) * (r8 - 1))


# ------------------------------------------------------------- certificates

@dataclass(frozen=True)
class BoundCertificate:
    H: HappyFunction
    cycle: Cycle
    complement: tuple[Cycle, ...]
    n: int
    direction: str
    density: DensityValue          # band density of the cycle (upper) or complement (lower)
    delta: Interval
    claimed_bound: Fraction
    claimed_digits: int
    boundB: BoundBReport
    prec: int
    mode: str

    @property
    def claimed_decimal(self) -> str:
        rounding = "down" if self.direction == UPPER else "up"
        return format_fixed(self.claimed_bound, self.claimed_digits, rounding)

    @property
    def statement(self) -> str:
        op = ">=" if self.direction == UPPER else "<="
        which = "upper" if self.direction == UPPER else "lower"
        return f"{which} density of type-{self.cycle} integers {op} {self.claimed_decimal}"

    def to_json(self) -> dict:
        return {
            "spec_version": CERTIFICATE_SCHEMA,
            "function": self.H.describe(),
            "cycle": list(self.cycle.order),
            "complement": [list(c.order) for c in self.complement],
            "n": self.n,
            "direction": self.direction,
            "band": [f"{self.H.base}^{self.n - 1}", f"{self.H.base}^{self.n}-1"],
            "density": self.density.to_json(),
            "delta": {"lo": format_sci(self.delta.lo, 20, "down"),
                      "hi": format_sci(self.delta.hi, 20, "up")},
            "boundB": self.boundB.to_json(),
            "claimed_bound": self.claimed_decimal,
            "statement": self.statement,
            "precision_bits": self.prec,
            "mode": self.mode,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _preconditions(H, n, prec):
    if n % 4:
        raise NotDivisibleByFour(f"n = {n} is not divisible by 4; no n-strict interval exists")
    report = check_bound_B(H, n, prec)
    if not report.ok:
        raise BoundBFailed(f"n = {n} does not satisfy bound (B): "
                           f"B1={report.b1_ok} B2={report.b2_ok} B3={report.b3_ok}")
    return report


def _round_decimal(x: Fraction, digits: int, up: bool) -> Fraction:
    s = format_fixed(x, digits, "up" if up else "down")
    return Fraction(s)


def certify_upper(H: HappyFunction, cycles: CycleSet, C: Cycle, n: int,
                  band_density: DensityValue, prec: int = DEFAULT_PREC,
                  digits: int = 10) -> BoundCertificate:
    """Upper density of type-C integers >= band density * exp(delta(n))."""
    report = _preconditions(H, n, prec)
    dl = delta(H, n, prec)
    factor = Interval.exact(dl.lo, prec).exp().lo
    claimed = _round_decimal(round_dyadic(band_density.lo * factor, prec, up=False),
                             digits, up=False)
    return BoundCertificate(H, C, cycles.complement(C), n, UPPER, band_density, dl,
                            claimed, digits, report, prec, band_density.kind)


def certify_lower(H: HappyFunction, cycles: CycleSet, C: Cycle, n: int,
                  band_density_complement: DensityValue, prec: int = DEFAULT_PREC,
                  digits: int = 10) -> BoundCertificate:
    """Lower density of type-C integers <= 1 - d' * exp(delta(n)), where d' is
    the band density of the union of all other cycles."""
    report = _preconditions(H, n, prec)
    dl = delta(H, n, prec)
    factor = Interval.exact(dl.lo, prec).exp().lo
    comp_lower = round_dyadic(band_density_complement.lo * factor, prec, up=False)
    claimed = _round_decimal(1 - comp_lower, digits, up=True)
    return BoundCertificate(H, C, cycles.complement(C), n, LOWER, band_density_complement,
                            dl, claimed, digits, report, prec, band_density_complement.kind)


# --------------------------------------------------- interval constructions

def lemma_shift_bound(d, interval_size: int, sigma_Y, lam,
                      prec: int = DEFAULT_PREC) -> Fraction:
    """Guaranteed probability that some shift of Y lands in a set of density d
    inside an interval of the given size: (1 - 1/lam^2) d / (1 + 2 sigma_Y lam / |I|)."""
    d, sigma_Y, lam = Fraction(d), Fraction(sigma_Y), Fraction(lam)
    if lam <= 0 or interval_size < 1 or not 0 <= d <= 1:
        raise ValidationError("need lam > 0, interval_size >= 1, 0 <= d <= 1")
    val = (1 - 1 / lam ** 2) * d / (1 + 2 * sigma_Y * lam / interval_size)
    return round_dyadic(val, prec, up=False)


@dataclass(frozen=True)
class StrictConstruction:
    left: Interval
    right: Interval
    bound: Fraction


def _as_interval(x, prec):
    return x if isinstance(x, Interval) else Interval.exact(Fraction(x), prec)


def theorem31_construction(H: HappyFunction, n: int, lam, I_left: int, I_size: int, d,
                           prec: int = DEFAULT_PREC) -> StrictConstruction:
    """Check [I_left, I_left + I_size - 1] lies in
    J = [1 + 3n mu/4 + lam sigma sqrt(3n/4), n/4 + 3n mu/4 - lam sigma sqrt(3n/4)]
    and return J with the guaranteed n-strict density
    (1 - 1/lam^2) d / (1 + sqrt(3n) sigma lam / I_size), rounded down."""
    if n % 4:
        raise NotDivisibleByFour(f"n = {n} is not divisible by 4")
    if I_size < 1:
        raise ValidationError("interval size must be >= 1")
    lam = _as_interval(lam, prec)
    if lam.lo <= 0:
        raise ValidationError("lambda must be positive")
    mu = Interval.exact(H.mu, prec)
    sigma = _sigma(H, prec)
    spread = lam * sigma * Interval.exact(Fraction(3 * n, 4), prec).sqrt()
    centre = Interval.exact(Fraction(3 * n, 4), prec) * mu
    left = 1 + centre + spread
    right = Fraction(n, 4) + centre - spread
    I_right = I_left + I_size - 1
    if not left.certainly_le(I_left):
        raise ContainmentViolation(
            f"left endpoint of J ({float(left.hi):.6g}) exceeds I_left", "left")
    if not right.lo >= I_right:
        raise ContainmentViolation(
            f"right endpoint of J ({float(right.lo):.6g}) is below the interval end", "right")
    d = Fraction(d)
    if d == 0:
        return StrictConstruction(left, right, Fraction(0))
    shrink = 1 - 1 / (lam * lam)
    denom = 1 + Interval.exact(3 * n, prec).sqrt() * sigma * lam / I_size
    bound = (shrink * d / denom).lo
    return StrictConstruction(left, right, max(Fraction(0), bound))


def _scaled_root_le(t8: Fraction, r: Fraction) -> bool:
    """t <= r where t >= 0 is given by t**8 = t8."""
    return r >= 0 and t8 <= r ** 8


def _left_endpoint_parts(H, n, n2):
    """f(n2) = 1 + 3 mu n2/4 + T with T**8 = b^n (3 sigma^2 n2 / 4)**4."""
    const = 1 + Fraction(3, 4) * H.mu * n2
    t8 = Fraction(H.base) ** n * (Fraction(3, 4) * H.sigma_sq * n2) ** 4
    return const, t8


def left_endpoint_le(H: HappyFunction, n: int, n2: int, a) -> bool:
    """Exact test of f(n2) <= a with f(m) = 1 + 3 mu m/4 + b^(n/8) sigma sqrt(3m/4)."""
    const, t8 = _left_endpoint_parts(H, n, n2)
    return _scaled_root_le(t8, Fraction(a) - const)


def find_n2(H: HappyFunction, n: int, a: int, prec: int = DEFAULT_PREC) -> int:
    """Largest multiple of 4, n2, with f(n2) <= a (lambda = b^(n/8)), found by
    bisection on the increasing function f; postconditions are re-verified."""
    b = H.base
    if not b ** (n - 1) <= a <= b ** n:
        raise ValidationError(f"a must lie in [b^(n-1), b^n] for n = {n}")
    report = check_bound_B(H, n, prec)
    if not report.ok:
        raise BoundBFailed(f"n = {n} does not satisfy bound (B)")
    lo, hi = 0, int(Fraction(a) / (3 * H.mu)) + 2   # f(4*hi) > a
    if not left_endpoint_le(H, n, 0, a) or left_endpoint_le(H, n, 4 * hi, a):
        raise PostconditionFailure("bisection bracket is invalid")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if left_endpoint_le(H, n, 4 * mid, a):
            lo = mid
        else:
            hi = mid
    n2 = 4 * lo
    _check_n2(H, n, a, n2)
    return n2


def _check_n2(H, n, a, n2):
    b = H.base
    if n2 % 4:
        raise PostconditionFailure("n2 is not divisible by 4")
    if not Fraction(b) ** (n - 1) / H.mu <= n2 <= Fraction(4, 3) / H.mu * Fraction(b) ** n:
        raise PostconditionFailure(f"n2 = {n2} outside [b^(n-1)/mu, 4 b^n / (3 mu)]")
    if not left_endpoint_le(H, n, n2, a):
        raise PostconditionFailure("f(n2) > a")
    # a - f(n2) <= 3 mu + 1  <=>  T >= a - 3 mu - 1 - const
    const, t8 = _left_endpoint_parts(H, n, n2)
    r = Fraction(a) - 3 * H.mu - 1 - const
    if not (r <= 0 or t8 >= r ** 8):
        raise PostconditionFailure("a - f(n2) exceeds 3 mu + 1")


def delta_exponent_bound(dl: Interval) -> int:
    """Smallest k with |delta| < 10**k."""
    return power_of_ten_bound(max(abs(dl.lo), abs(dl.hi)))
