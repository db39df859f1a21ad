"""Exact and interval distributions of H(Y_m) and the densities built on them.

A row of counts ``N[m, i]`` (i = 0..m*alpha) is packed into one big integer,
slot i occupying bits ``[i*W, (i+1)*W)``. One step of the recurrence
``N[m, i] = sum_j N[m-1, i - h(j)]`` is then ``sum_j row << (h(j) * W)``,
i.e. a handful of shifts and additions done by GMP.

Interval mode keeps slots as fixed-point numbers ``counts / 2**s`` with about
``prec + 1`` significant bits of total mass: after each step the row is
shifted right slot-wise (floor), and an integer bound on the accumulated
truncation error is carried alongside, per slot and in total. Lower bounds
are the stored slots; upper bounds add the error bound.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np
from gmpy2 import mpz

from .cycles import CycleSet, TypeTable, UNCLASSIFIED
from .digits import HappyFunction
from .errors import InsufficientTypeTable, ResourceError, ValidationError

EXACT = "exact"
INTERVAL = "interval"
AUTO = "auto"

DEFAULT_INTERVAL_PREC = 128
DEFAULT_EXACT_CEILING = 1000
TABLE_BYTES_PER_SLOT = 128
DEFAULT_MEMORY_BUDGET = int(os.environ.get("HAPPYDENSITY_MEMORY_BUDGET", 3 * 2 ** 30))


def resolve_mode(mode: str, m: int, exact_ceiling: int = DEFAULT_EXACT_CEILING) -> str:
    if mode == AUTO:
        return EXACT if m <= exact_ceiling else INTERVAL
    if mode not in (EXACT, INTERVAL):
        raise ValidationError(f"unknown mode {mode!r}")
    return mode


def _round_up32(bits: int) -> int:
    return -(-bits // 32) * 32


class RowEngine:
    """Advances the packed row one digit at a time up to ``m_max``."""

    def __init__(self, H: HappyFunction, m_max: int, mode: str = EXACT,
                 prec: int = DEFAULT_INTERVAL_PREC,
                 memory_budget: int = DEFAULT_MEMORY_BUDGET):
        if m_max < 0:
            raise ValidationError("digit count must be >= 0")
        if mode not in (EXACT, INTERVAL):
            raise ValidationError(f"unknown mode {mode!r}")
        if mode == INTERVAL and prec < 16:
            raise ValidationError("interval precision must be at least 16 bits")
        self.H = H
        self.mode = mode
        self.prec = prec
        self.m_max = m_max
        b = H.base
        if mode == EXACT:
            self.W = _round_up32((b ** max(m_max, 1)).bit_length() + 1)
        else:
            self.W = _round_up32(prec + b.bit_length() + 3)
        self.max_slots = m_max * H.alpha + 1
        # a handful of live row copies plus the type table and label matrix
        required = self.max_slots * (self.W // 8 * 6 + TABLE_BYTES_PER_SLOT)
        if required > memory_budget:
            raise ResourceError(
                f"{mode} row for m={m_max} needs about {required / 2**20:.0f} MiB "
                f"(budget {memory_budget / 2**20:.0f} MiB); use interval mode or a "
                f"larger HAPPYDENSITY_MEMORY_BUDGET", required=required)
        self._offsets = [x * self.W for x in H.h[1:]]
        self.m = 0
        self.row = mpz(1)
        self.shift = 0
        self.err_max = 0
        self.err_total = 0
        self._bm = 1
        self._masks: dict[int, mpz] = {}
        self._ones = None

    @property
    def nslots(self) -> int:
        return self.m * self.H.alpha + 1

    def _mask(self, k: int) -> mpz:
        if k not in self._masks:
            if self._ones is None:
                N, W = self.max_slots, self.W
                self._ones = ((mpz(1) << (W * N)) - 1) // ((mpz(1) << W) - 1)
            self._masks[k] = self._ones * ((mpz(1) << (self.W - k)) - 1)
        return self._masks[k]

    def _spread(self, row: mpz, skip_zero_digit: bool = False) -> mpz:
        acc = mpz(0) if skip_zero_digit else row
        for off in self._offsets:
            acc = acc + (row << off)
        return acc

    def step(self):
        if self.m >= self.m_max:
            raise ValidationError(f"engine was sized for m <= {self.m_max}")
        b = self.H.base
        acc = self._spread(self.row)
        self._bm *= b
        self.m += 1
        if self.mode == INTERVAL:
            new_shift = max(0, self._bm.bit_length() - self.prec - 1)
            k = new_shift - self.shift
            if k:
                acc = (acc >> k) & self._mask(k)
                self.err_max = -(-(b * self.err_max) // (1 << k)) + 1
                self.err_total = -(-(b * self.err_total) // (1 << k)) + self.nslots
            else:
                self.err_max *= b
                self.err_total *= b
            self.shift = new_shift
        self.row = acc

    def advance_to(self, m: int):
        while self.m < m:
            self.step()

    # ------------------------------------------------------------ read-out

    def limbs(self, row: mpz | None = None, nslots: int | None = None) -> np.ndarray:
        """Slots as an (nslots, W/L) array of little-endian limbs."""
        row = self.row if row is None else row
        n = self.nslots if nslots is None else nslots
        buf = row.to_bytes(n * self.W // 8, "little")
        dt = "<u4" if n < 2 ** 20 else "<u2"
        arr = np.frombuffer(buf, dtype=dt)
        return arr.reshape(n, -1)

    def tally(self, onehot: "LabelIndex", band: bool = False) -> "Tally":
        """Per-label sums of the current row (or of its leading-digit band)."""
        if band:
            if self.m >= self.m_max:
                raise ValidationError("band tally needs one more digit of headroom")
            row = self._spread(self.row, skip_zero_digit=True)
            n = self.nslots + self.H.alpha
            m = self.m + 1
            err_max = (self.H.base - 1) * self.err_max
            err_total = (self.H.base - 1) * self.err_total
        else:
            row, n, m = self.row, self.nslots, self.m
            err_max, err_total = self.err_max, self.err_total
        limbs = self.limbs(row, n)
        sums, sizes = onehot.sums(limbs)
        b = self.H.base
        if band:
            unit = Fraction(1 << self.shift, b ** (m - 1) * (b - 1))
        else:
            unit = Fraction(1 << self.shift, b ** m)
        return Tally(m=m, mode=self.mode, sums=sums, sizes=sizes, err_max=err_max,
                     err_total=err_total, unit=unit, band=band)


class LabelIndex:
    """One-hot label matrix for exact per-label sums of packed slots.

    Limb values are below 2**32 (2**16 for very long rows), so every partial
    sum of the float64 matrix product is an integer below 2**53 and exact.
    """

    def __init__(self, table: TypeTable, nlabels: int):
        self.table = table
        self.nlabels = nlabels
        lab = table.labels
        # column nlabels collects the unclassified entries
        idx = np.where(lab == UNCLASSIFIED, nlabels, lab)
        self.onehot = np.zeros((nlabels + 1, len(lab)), dtype=np.float64)
        self.onehot[idx, np.arange(len(lab))] = 1.0
        self.idx = idx

    def sums(self, limbs: np.ndarray) -> tuple[list[int], list[int]]:
        n, L = limbs.shape
        if n > self.table.bound + 1:
            raise InsufficientTypeTable(
                f"type table covers [0, {self.table.bound}] but row needs [0, {n - 1}]")
        bits = 32 if limbs.dtype.itemsize == 4 else 16
        prod = self.onehot[:, :n] @ limbs.astype(np.float64)
        out = []
        for k in range(self.nlabels + 1):
            total = 0
            for col in range(L - 1, -1, -1):
                total = (total << bits) + int(prod[k, col])
            out.append(total)
        sizes = np.bincount(self.idx[:n], minlength=self.nlabels + 1).tolist()
        return out, sizes


@dataclass(frozen=True)
class DensityValue:
    """A density as an exact rational (lo == hi) or a certified enclosure."""

    kind: str
    lo: Fraction
    hi: Fraction
    note: str = ""

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("density enclosure with lo > hi")

    @classmethod
    def exact(cls, value: Fraction, note: str = "exact rational") -> "DensityValue":
        return cls(EXACT, Fraction(value), Fraction(value), note)

    @property
    def is_exact(self) -> bool:
        return self.kind == EXACT

    @property
    def value(self) -> Fraction:
        if not self.is_exact:
            raise ValueError("interval density has no single value")
        return self.lo

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def decimals(self, digits: int = 30) -> tuple[str, str]:
        from .intervals import format_fixed
        if self.is_exact:
            s = format_fixed(self.lo, digits, "nearest")
            return s, s
        return format_fixed(self.lo, digits, "down"), format_fixed(self.hi, digits, "up")

    def to_json(self, digits: int = 30) -> dict:
        lo, hi = self.decimals(digits)
        d = {"kind": self.kind, "lo": lo, "hi": hi, "note": self.note}
        if self.is_exact:
            d["rational"] = f"{self.lo.numerator}/{self.lo.denominator}"
        return d

    def __str__(self):
        lo, hi = self.decimals(12)
        if self.is_exact:
            return f"={lo}"
        return f"[>={lo}, <={hi}]"


@dataclass(frozen=True)
class Tally:
    """Per-label slot sums of one row. ``sums[k]`` is cycle k; the last entry
    is the unclassified label. Densities are ``slots * unit``; for band
    tallies ``unit`` already includes the band normalization."""

    m: int
    mode: str
    sums: list[int]
    sizes: list[int]
    err_max: int
    err_total: int
    unit: Fraction
    band: bool = False

    def density(self, labels: Iterable[int]) -> DensityValue:
        labels = list(labels)
        unit = self.unit
        lo = sum(self.sums[k] for k in labels)
        if self.mode == EXACT:
            return DensityValue.exact(lo * unit)
        slack = min(self.err_total, sum(self.sizes[k] for k in labels) * self.err_max)
        hi = min(Fraction(1), (lo + slack) * unit)
        return DensityValue(INTERVAL, lo * unit, hi,
                            "lower bound rounded down, upper bound rounded up")


def band_from_prefix(d_n: DensityValue, d_prev: DensityValue, base: int) -> DensityValue:
    """Density of [b^(n-1), b^n - 1] as (b*d_n - d_{n-1}) / (b - 1)."""
    b = base
    if d_n.is_exact and d_prev.is_exact:
        return DensityValue.exact((b * d_n.lo - d_prev.lo) / (b - 1))
    lo = max(Fraction(0), (b * d_n.lo - d_prev.hi) / (b - 1))
    hi = min(Fraction(1), (b * d_n.hi - d_prev.lo) / (b - 1))
    return DensityValue(INTERVAL, lo, hi, "lower bound rounded down, upper bound rounded up")


@dataclass(frozen=True)
class SumDistribution:
    """Distribution of H(Y_m). Exact rows hold integer counts with implied
    denominator b^m; interval rows hold fixed-point lower bounds plus an
    integer per-slot error bound."""

    H: HappyFunction
    m: int
    mode: str
    prec: int
    W: int
    row: mpz
    shift: int
    err_max: int
    err_total: int

    @property
    def support_max(self) -> int:
        return self.m * self.H.alpha

    def _slots(self) -> list[int]:
        n, w = self.support_max + 1, self.W // 8
        buf = self.row.to_bytes(n * w, "little")
        return [int.from_bytes(buf[i * w:(i + 1) * w], "little") for i in range(n)]

    @property
    def counts(self) -> list[int]:
        """Exact counts N[m, i] for i = 0..m*alpha."""
        if self.mode != EXACT:
            raise ValidationError("counts are only defined in exact mode")
        return self._slots()

    def probability(self, i: int) -> Fraction:
        if self.mode != EXACT:
            raise ValidationError("use bounds() in interval mode")
        if not 0 <= i <= self.support_max:
            return Fraction(0)
        return Fraction(self.counts[i], self.H.base ** self.m)

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        """(lo, hi) probability enclosure for every i in the support."""
        unit = Fraction(1 << self.shift, self.H.base ** self.m)
        return [(s * unit, min(Fraction(1), (s + self.err_max) * unit)) for s in self._slots()]

    def dump_lines(self) -> list[str]:
        return [f"{i},{c}" for i, c in enumerate(self.counts)]


def sum_distribution(H: HappyFunction, m: int, mode: str = EXACT,
                     prec: int = DEFAULT_INTERVAL_PREC,
                     memory_budget: int = DEFAULT_MEMORY_BUDGET) -> SumDistribution:
    """Row m of the digit-image sum recurrence, starting from N[0, 0] = 1."""
    mode = resolve_mode(mode, m)
    eng = RowEngine(H, m, mode, prec, memory_budget)
    eng.advance_to(m)
    return SumDistribution(H, m, mode, prec, eng.W, eng.row, eng.shift,
                           eng.err_max, eng.err_total)


def moments(dist: SumDistribution) -> tuple[Fraction, Fraction]:
    """Exact mean and variance of the distribution (exact mode only)."""
    if dist.mode != EXACT:
        raise ValidationError("moments are computed from exact rows only")
    s0 = s1 = s2 = 0
    for i, c in enumerate(dist.counts):
        s0 += c
        s1 += c * i
        s2 += c * i * i
    mean = Fraction(s1, s0)
    return mean, Fraction(s2, s0) - mean * mean


def _labels_for(cycles: CycleSet, C) -> list[int]:
    return sorted(cycles.indices(C))


def _check_table(table: TypeTable, H: HappyFunction, m: int):
    if table.bound < m * H.alpha:
        raise InsufficientTypeTable(
            f"type table bound {table.bound} < m*alpha = {m * H.alpha}")


def prefix_density(H: HappyFunction, cycles: CycleSet, table: TypeTable, C, m: int,
                   mode: str = EXACT, prec: int = DEFAULT_INTERVAL_PREC) -> DensityValue:
    """Type-C density of the integer interval [0, b^m - 1]."""
    _check_table(table, H, m)
    mode = resolve_mode(mode, m)
    eng = RowEngine(H, m, mode, prec)
    eng.advance_to(m)
    return eng.tally(LabelIndex(table, len(cycles))).density(_labels_for(cycles, C))


def band_density(H: HappyFunction, cycles: CycleSet, table: TypeTable, C, n: int,
                 mode: str = EXACT, prec: int = DEFAULT_INTERVAL_PREC,
                 method: str = "difference") -> DensityValue:
    """Type-C density of [b^(n-1), b^n - 1].

    ``method="difference"`` combines the prefix densities at n and n-1;
    ``method="leading-digit"`` conditions the top digit on 1..b-1 directly.
    """
    if n < 1:
        raise ValidationError("band index n must be >= 1")
    _check_table(table, H, n)
    mode = resolve_mode(mode, n)
    labels = _labels_for(cycles, C)
    index = LabelIndex(table, len(cycles))
    eng = RowEngine(H, n, mode, prec)
    eng.advance_to(n - 1)
    if method == "leading-digit":
        return eng.tally(index, band=True).density(labels)
    if method != "difference":
        raise ValidationError(f"unknown band method {method!r}")
    d_prev = eng.tally(index).density(labels)
    eng.step()
    d_n = eng.tally(index).density(labels)
    return band_from_prefix(d_n, d_prev, H.base)


def local_limit_diagnostic(H: HappyFunction, m: int, T: float = 2.0,
                           dist: SumDistribution | None = None) -> float:
    """Max of |1 - P(m, i) / gauss(t_i)| over lattice points with |t_i| <= T,
    where t_i = (i - mu*m) / (sigma*sqrt(m))."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    if dist is None:
        dist = sum_distribution(H, m, EXACT)
    mu, sd = float(H.mu), math.sqrt(H.sigma_sq)
    if sd == 0:
        raise ValidationError("degenerate digit distribution has zero variance")
    counts = dist.counts
    bm = H.base ** m
    spread = sd * math.sqrt(m)
    lo = max(0, math.ceil(mu * m - T * spread))
    hi = min(dist.support_max, math.floor(mu * m + T * spread))
    worst = 0.0
    for i in range(lo, hi + 1):
        t = (i - mu * m) / spread
        if abs(t) > T:
            continue
        gauss = math.exp(-t * t / 2) / (spread * math.sqrt(2 * math.pi))
        p = float(Fraction(counts[i], bm))
        worst = max(worst, abs(1 - p / gauss))
    return worst
